//! Executable acceptance suite.  Ten independent checks, one per claim the
//! library stands on, each with pinned scenario parameters and tolerances.
//! Every check returns a pass flag, a one-line summary, and CSV artifacts
//! holding the measured numbers; nothing is asserted here so a caller can
//! collect the full picture before deciding how loudly to fail.
//!
//! The run configuration contributes only the base seed.  Scenario sizes,
//! exponents, and tolerances are pinned in this module on purpose: the suite
//! certifies fixed claims, not whatever a config happens to describe.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::RunConfig;
use crate::cutoff::CutoffPair;
use crate::error::{Error, Result};
use crate::fbs::{covariance_r, kron_vs_dense_covariance_gap, sample_sheet, FbsSample, HurstPair};
use crate::geometry::{composition_bound_check, ChristoffelTable, DiffusionCoeff, SigmaKind};
use crate::grid::{Arity, Field2, Frame, Grid2};
use crate::lp::{besov_norm, mixed_norm, product_norm, AxisOrder, DyadicPartition};
use crate::null::isomorphism_ratio;
use crate::num::split_seed;
use crate::solver::{
    choose_lambda, glue_solutions, noise_bound_factor, picard_solve, picard_solve_from,
    rescale_solution, residual, scale_data, theta_map, SolverConfig, CONTRACTION_TARGET,
};
use crate::spectral::{dft2, idft2, upsample2};
use crate::tol;
use crate::wave::{
    dalembert_inverse_lp, dalembert_inverse_quadrature, homogeneous_solution,
    inverse_estimate_check, InitialData,
};

/// Data amplitude of the solver scenarios.  Small enough that the localized
/// homogeneous part (about 13 mixed-norm units per unit amplitude at this
/// grid) starts inside the contraction ball.
pub const DATA_AMP: f64 = 0.02;
/// Christoffel amplitude of the nonlinear scenarios.
pub const TABLE_AMP: f64 = 0.1;
/// Diffusion scale of the nonlinear scenarios.
pub const SIGMA_SCALE: f64 = 0.1;

const NAMES: [&str; 10] = [
    "sheet law",
    "kronecker covariance",
    "dyadic partition",
    "norm equivalences",
    "inverse wave operator",
    "composition bounds",
    "picard solver",
    "lambda exponent",
    "chart gluing",
    "determinism",
];

/// Wall-clock budget per criterion, seconds.  Overrunning fails the check.
const BUDGETS: [f64; 10] = [
    120.0,
    1.0,
    1.0,
    120.0,
    180.0,
    60.0,
    600.0,
    120.0,
    300.0,
    f64::INFINITY,
];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

/// A named CSV produced while measuring one criterion.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub results: Vec<CriterionResult>,
    pub artifacts: Vec<Artifact>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    /// One row per criterion.  Deliberately holds no timings so that two
    /// runs with the same seed emit identical bytes.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("id,name,passed\n");
        for r in &self.results {
            out.push_str(&format!("{},{},{}\n", r.id, r.name, r.passed));
        }
        out
    }
}

struct Outcome {
    passed: bool,
    details: String,
    artifacts: Vec<Artifact>,
}

/// All digits of a double, so artifact equality means bitwise equality.
fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn sup_gap(a: &Field2<f64>, b: &Field2<f64>) -> f64 {
    a.sub(b).sup_norm()
}

/// Runs criterion `id` (1 to 10).  `quick` shrinks ensembles and grids for
/// smoke runs; the checked inequalities and code paths stay the same.
pub fn run_criterion(
    id: usize,
    cfg: &RunConfig,
    quick: bool,
) -> Result<(CriterionResult, Vec<Artifact>)> {
    cfg.validate()?;
    let base = cfg.require_seed()?;
    if !(1..=10).contains(&id) {
        return Err(Error::Config(format!("criterion id {id} outside 1..=10")));
    }
    let clock = Instant::now();
    let out = match id {
        1 => c1_sheet_law(split_seed(base, 1), quick)?,
        2 => c2_kronecker()?,
        3 => c3_partition(quick)?,
        4 => c4_norm_equivalences(split_seed(base, 4), quick)?,
        5 => c5_inverse_wave(split_seed(base, 5), quick)?,
        6 => c6_composition(split_seed(base, 6), quick)?,
        7 => c7_picard(split_seed(base, 7), quick)?,
        8 => c8_lambda_exponent(quick)?,
        9 => c9_glue(split_seed(base, 9))?,
        _ => c10_determinism(split_seed(base, 10))?,
    };
    let seconds = clock.elapsed().as_secs_f64();
    let mut passed = out.passed;
    let mut details = out.details;
    if seconds > BUDGETS[id - 1] {
        passed = false;
        details.push_str(&format!(
            "; over budget ({seconds:.1}s > {:.0}s)",
            BUDGETS[id - 1]
        ));
    }
    Ok((
        CriterionResult {
            id,
            name: NAMES[id - 1],
            passed,
            details,
            seconds,
        },
        out.artifacts,
    ))
}

/// Runs the whole suite and appends a summary artifact.
pub fn run_all(cfg: &RunConfig, quick: bool) -> Result<SuiteReport> {
    let mut results = Vec::with_capacity(10);
    let mut artifacts = Vec::new();
    for id in 1..=10 {
        let (r, mut a) = run_criterion(id, cfg, quick)?;
        results.push(r);
        artifacts.append(&mut a);
    }
    let report = SuiteReport { results, artifacts };
    let summary = Artifact {
        name: "summary.csv".into(),
        content: report.summary_csv(),
    };
    let mut report = report;
    report.artifacts.push(summary);
    Ok(report)
}

/// Criterion 1: the synthesized sheet has the advertised Gaussian law.
/// Covariances at 25 probe pairs and two rectangle increment variances must
/// each sit within five standard errors of their closed forms.
fn c1_sheet_law(seed: u64, quick: bool) -> Result<Outcome> {
    let reps = if quick { 200 } else { 2000 };
    let g = Grid2::<f64>::new(16.0, 128)?;
    let hurst = HurstPair::new(0.85, 0.80)?;
    let pts: [(f64, f64); 5] = [(0.5, 0.5), (1.0, 2.0), (2.0, 1.0), (3.0, 1.5), (4.0, 4.0)];
    let eps = 1e-9;
    let mut idx = Vec::with_capacity(5);
    for &(x, y) in &pts {
        idx.push((g.index_of(x, eps)?, g.index_of(y, eps)?));
    }
    let mut exact = [[0.0f64; 5]; 5];
    for p in 0..5 {
        for q in 0..5 {
            exact[p][q] = covariance_r(hurst.h1, pts[p].0, pts[q].0)
                * covariance_r(hurst.h2, pts[p].1, pts[q].1);
        }
    }
    let origin = g.index_of(0.0, eps)?;
    let one = g.index_of(1.0, eps)?;

    let mut sums = [[0.0f64; 5]; 5];
    let mut rect_sq = 0.0f64;
    for r in 0..reps {
        let sample = sample_sheet(g, hurst, split_seed(seed, r as u64))?;
        let w: Vec<f64> = idx.iter().map(|&(i, j)| sample.sheet().at(0, i, j).re).collect();
        for p in 0..5 {
            for q in 0..5 {
                sums[p][q] += w[p] * w[q];
            }
        }
        let inc = sample.rect_increment((origin, origin), (one, one));
        rect_sq += inc * inc;
    }

    // Independent Brownian ensemble: H = (1/2, 1/2), increment over
    // [0, 2] x [0, 3] has variance 2 * 3.
    let brown = HurstPair::new(0.5, 0.5)?;
    let two = g.index_of(2.0, eps)?;
    let three = g.index_of(3.0, eps)?;
    let mut brown_sq = 0.0f64;
    for r in 0..reps {
        let sample = sample_sheet(g, brown, split_seed(seed, 1_000_000 + r as u64))?;
        let inc = sample.rect_increment((origin, origin), (two, three));
        brown_sq += inc * inc;
    }

    let m = reps as f64;
    let mut csv = String::from("check,p,q,estimate,exact,se,z\n");
    let mut worst_z = 0.0f64;
    for p in 0..5 {
        for q in 0..5 {
            let est = sums[p][q] / m;
            // Wick: Var(W_p W_q) = R_pp R_qq + R_pq^2.
            let se = ((exact[p][p] * exact[q][q] + exact[p][q] * exact[p][q]) / m).sqrt();
            let z = (est - exact[p][q]) / se;
            worst_z = worst_z.max(z.abs());
            csv.push_str(&format!(
                "covariance,{p},{q},{},{},{},{}\n",
                fmt(est),
                fmt(exact[p][q]),
                fmt(se),
                fmt(z)
            ));
        }
    }
    let rect_est = rect_sq / m;
    let rect_se = (2.0 / m).sqrt();
    let rect_z = (rect_est - 1.0) / rect_se;
    csv.push_str(&format!(
        "rect_unit,,,{},{},{},{}\n",
        fmt(rect_est),
        fmt(1.0),
        fmt(rect_se),
        fmt(rect_z)
    ));
    let brown_est = brown_sq / m;
    let brown_se = (2.0 * 36.0 / m).sqrt();
    let brown_z = (brown_est - 6.0) / brown_se;
    csv.push_str(&format!(
        "rect_brownian,,,{},{},{},{}\n",
        fmt(brown_est),
        fmt(6.0),
        fmt(brown_se),
        fmt(brown_z)
    ));

    let passed = worst_z <= 5.0 && rect_z.abs() <= 5.0 && brown_z.abs() <= 5.0;
    Ok(Outcome {
        passed,
        details: format!(
            "{reps} replicates: max covariance |z| {worst_z:.2}, unit rect z {rect_z:.2}, \
             brownian rect z {brown_z:.2}"
        ),
        artifacts: vec![Artifact {
            name: "c01_sheet_law.csv".into(),
            content: csv,
        }],
    })
}

/// Criterion 2: the Kronecker covariance route agrees with the dense
/// kernel matrix on a small grid to near machine precision.
fn c2_kronecker() -> Result<Outcome> {
    let g = Grid2::<f64>::new(16.0, 8)?;
    let mut csv = String::from("h1,h2,gap\n");
    let mut worst = 0.0f64;
    for (h1, h2) in [(0.85, 0.80), (0.5, 0.5), (0.95, 0.55)] {
        let gap = kron_vs_dense_covariance_gap(g, HurstPair::new(h1, h2)?)?;
        worst = worst.max(gap);
        csv.push_str(&format!("{h1},{h2},{}\n", fmt(gap)));
    }
    Ok(Outcome {
        passed: worst <= 1e-10,
        details: format!("worst entrywise gap {worst:.2e} over three Hurst pairs"),
        artifacts: vec![Artifact {
            name: "c02_kronecker.csv".into(),
            content: csv,
        }],
    })
}

/// Criterion 3: the dyadic partition sums to one on every frequency bin,
/// vanishes outside its annuli, and satisfies the first-order shell axiom
/// with one constant for every shell.
fn c3_partition(quick: bool) -> Result<Outcome> {
    let n = if quick { 256 } else { 512 };
    let g = Grid2::<f64>::new(16.0, n)?;
    let part = DyadicPartition::new(g)?;

    let mut sum_err = 0.0f64;
    for k in 0..n {
        sum_err = sum_err.max((part.partition_sum(k) - 1.0).abs());
    }

    let mut leak = 0.0f64;
    for j in 0..=part.j_max() {
        let (lo, hi) = if j == 0 {
            (0.0, 2.0)
        } else {
            (2f64.powi(j as i32 - 1), 2f64.powi(j as i32 + 1))
        };
        for k in 0..n {
            let x = g.freq(k).abs();
            if x < lo - 1e-9 || x > hi + 1e-9 {
                leak = leak.max(part.phi(j, k).abs());
            }
        }
    }

    let mut csv = String::from("check,j,value\n");
    let mut deriv_worst = 0.0f64;
    for j in 1..=part.j_max() {
        let scale = 2f64.powi(j as i32);
        let h = 1e-5 * scale;
        let mut x = 0.4 * scale;
        let mut shell_worst = 0.0f64;
        while x < 2.1 * scale {
            let d = (DyadicPartition::<f64>::phi_value(j, x + h)
                - DyadicPartition::<f64>::phi_value(j, x - h))
                / (2.0 * h);
            shell_worst = shell_worst.max((scale * d).abs());
            x += h * 50.0;
        }
        deriv_worst = deriv_worst.max(shell_worst);
        csv.push_str(&format!("scaled_derivative,{j},{}\n", fmt(shell_worst)));
    }
    csv.push_str(&format!("partition_sum_gap,,{}\n", fmt(sum_err)));
    csv.push_str(&format!("support_leak,,{}\n", fmt(leak)));

    let passed = sum_err <= 1e-12 && leak <= 1e-14 && deriv_worst <= tol::LP_DERIVATIVE_BOUND;
    Ok(Outcome {
        passed,
        details: format!(
            "n {n}: sum gap {sum_err:.1e}, support leak {leak:.1e}, \
             scaled derivative sup {deriv_worst:.2} (bound {})",
            tol::LP_DERIVATIVE_BOUND
        ),
        artifacts: vec![Artifact {
            name: "c03_partition.csv".into(),
            content: csv,
        }],
    })
}

/// White noise masked to the box of frequencies at most `cut` in both axes.
pub fn band_limited(g: Grid2<f64>, cut: f64, seed: u64) -> Field2<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let white = Field2::from_fn(g, Frame::Null, |_, _| rng.gen_range(-1.0..1.0));
    let masked = dft2(&white).multiplied(|t, x| {
        if t.abs() <= cut && x.abs() <= cut {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    idft2(&masked)
}

/// Random ten-mode trigonometric sum in the Cartesian frame, windowed to
/// the cutoff square (the isomorphism is a statement about such fields).
pub fn mode_sum_cartesian(g: Grid2<f64>, seed: u64) -> Field2<f64> {
    let cut = CutoffPair::standard(g);
    let window = cut.window2(Frame::Cartesian);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut f = Field2::zeros(g, Frame::Cartesian, Arity::Scalar);
    for _ in 0..10 {
        let m0: i64 = rng.gen_range(-12..13);
        let m1: i64 = rng.gen_range(-12..13);
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let tau = std::f64::consts::PI * m0 as f64 / g.half_width();
        let xi = std::f64::consts::PI * m1 as f64 / g.half_width();
        let term = Field2::from_fn(g, Frame::Cartesian, |t, x| amp * (tau * t + xi * x + ph).cos());
        f = f.add(&term);
    }
    f.windowed(&window)
}

/// Criterion 4: over random band-limited fields the Besov-to-product norm
/// ratio stays inside one frozen interval, is stable under refinement, and
/// the mixed-to-hyperbolic ratio is bounded both ways on windowed fields.
fn c4_norm_equivalences(seed: u64, quick: bool) -> Result<Outcome> {
    let fields = if quick { 12 } else { 100 };
    let n = if quick { 128 } else { 256 };
    let g = Grid2::<f64>::new(16.0, n)?;
    let gf = Grid2::<f64>::new(16.0, 2 * n)?;
    let part = DyadicPartition::new(g)?;
    let part_f = DyadicPartition::new(gf)?;
    let (s1, s2) = (0.8f64, 0.8f64);
    let lo = 1.0 / tol::BESOV_PRODUCT_C;
    let hi = tol::BESOV_PRODUCT_C;

    let mut csv = String::from("field,ratio_coarse,ratio_fine,drift,iso\n");
    let mut passed = true;
    let mut r_min = f64::INFINITY;
    let mut r_max = 0.0f64;
    let mut iso_min = f64::INFINITY;
    let mut iso_max = 0.0f64;
    for r in 0..fields {
        let f = band_limited(g, 12.0, split_seed(seed, r as u64));
        let f2 = upsample2(&f);
        let bp = besov_norm(&f, &part, s1, s2)
            / product_norm(&f, s1, s2, AxisOrder::AlphaBeta);
        let bp_f = besov_norm(&f2, &part_f, s1, s2)
            / product_norm(&f2, s1, s2, AxisOrder::AlphaBeta);
        let drift = bp_f / bp;
        let iso = isomorphism_ratio(&mode_sum_cartesian(g, split_seed(seed, 1_000 + r as u64)), s1, s2);
        r_min = r_min.min(bp.min(bp_f));
        r_max = r_max.max(bp.max(bp_f));
        iso_min = iso_min.min(iso);
        iso_max = iso_max.max(iso);
        passed &= lo <= bp && bp <= hi && lo <= bp_f && bp_f <= hi;
        passed &= (1.0 / 1.5..=1.5).contains(&drift);
        passed &= (tol::ISO_RATIO_LO..=tol::ISO_RATIO_HI).contains(&iso);
        csv.push_str(&format!(
            "{r},{},{},{},{}\n",
            fmt(bp),
            fmt(bp_f),
            fmt(drift),
            fmt(iso)
        ));
    }
    Ok(Outcome {
        passed,
        details: format!(
            "{fields} fields: besov/product in [{r_min:.3}, {r_max:.3}] \
             (frozen [{lo:.3}, {hi:.3}]), iso in [{iso_min:.3}, {iso_max:.3}]"
        ),
        artifacts: vec![Artifact {
            name: "c04_norm_equivalences.csv".into(),
            content: csv,
        }],
    })
}

/// Closed form of the inverse applied to cos(p a) cos(q b).
fn cosine_exact(p: f64, q: f64, alpha: f64, beta: f64) -> f64 {
    let anti = |x: f64| -0.5 * (((q + p) * x).cos() / (q + p) + ((q - p) * x).cos() / (q - p));
    let term1 = (q * beta).sin() * ((p * alpha).sin() + (p * beta).sin()) / p;
    0.25 * (term1 + anti(alpha) - anti(beta)) / q
}

fn cosine_gap(n: usize) -> Result<f64> {
    let g = Grid2::<f64>::new(16.0, n)?;
    let p = g.freq(2);
    let q = g.freq(1);
    let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).cos() * (q * b).cos());
    let inv = dalembert_inverse_quadrature(&f);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = cosine_exact(p, q, g.coord(i), g.coord(j));
            worst = worst.max((inv.at(0, i, j).re - want).abs());
        }
    }
    Ok(worst)
}

/// Coarse sample sharing the path of `fine` (even-index subsampling).
fn subsample_sheet(fine: &FbsSample<f64>, coarse_grid: Grid2<f64>, hurst: HurstPair) -> FbsSample<f64> {
    let nc = coarse_grid.n();
    let mut sheet = Field2::zeros(coarse_grid, Frame::Null, Arity::Scalar);
    for i in 0..nc {
        for j in 0..nc {
            *sheet.at_mut(0, i, j) = fine.sheet().at(0, 2 * i, 2 * j);
        }
    }
    FbsSample::from_sheet(sheet, hurst, fine.seed())
}

/// Criterion 5: the inverse wave operator is exact where it should be,
/// second order where it cannot be exact, route-consistent, and its gain
/// estimate holds on sampled rough densities at two resolutions.
fn c5_inverse_wave(seed: u64, quick: bool) -> Result<Outcome> {
    let ns: [usize; 3] = if quick { [64, 128, 256] } else { [128, 256, 512] };
    let mid = ns[1];
    let mut csv = String::from("check,n,value\n");
    let mut passed = true;

    // Unit density: trapezoid sums telescope, so the quadrature reproduces
    // (alpha + beta)^2 / 8 exactly; "within second order" is met with room.
    for n in ns {
        let g = Grid2::<f64>::new(16.0, n)?;
        let f = Field2::from_fn(g, Frame::Null, |_, _| 1.0);
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                let s = g.coord(p) + g.coord(q);
                worst = worst.max((inv.at(0, p, q).re - s * s / 8.0).abs());
            }
        }
        passed &= worst <= 1e-10;
        csv.push_str(&format!("unit_density_gap,{n},{}\n", fmt(worst)));
    }

    // Observed convergence order on a cosine density with a closed form.
    let gaps = [cosine_gap(ns[0])?, cosine_gap(ns[1])?, cosine_gap(ns[2])?];
    let o1 = (gaps[0] / gaps[1]).log2();
    let o2 = (gaps[1] / gaps[2]).log2();
    passed &= o1 >= 1.9 && o2 >= 1.9;
    if !quick {
        passed &= gaps[2] <= tol::QUAD_COSINE_SUP_N512;
    }
    for (k, n) in ns.iter().enumerate() {
        csv.push_str(&format!("cosine_gap,{n},{}\n", fmt(gaps[k])));
    }
    csv.push_str(&format!("cosine_order,{},{}\n", ns[1], fmt(o1)));
    csv.push_str(&format!("cosine_order,{},{}\n", ns[2], fmt(o2)));

    // The mixed second difference recovers the cell-centered density.
    {
        let n = mid;
        let g = Grid2::<f64>::new(16.0, n)?;
        let dx = g.spacing();
        let p = g.freq(3);
        let q = g.freq(2);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).sin() * (q * b).cos() + 0.4);
        let inv = dalembert_inverse_quadrature(&f);
        let mut worst = 0.0f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let mixed = inv.at(0, i + 1, j + 1).re - inv.at(0, i + 1, j).re
                    - inv.at(0, i, j + 1).re
                    + inv.at(0, i, j).re;
                let recovered = 4.0 * mixed / (dx * dx);
                let center = (p * (g.coord(i) + 0.5 * dx)).sin()
                    * (q * (g.coord(j) + 0.5 * dx)).cos()
                    + 0.4;
                worst = worst.max((recovered - center).abs());
            }
        }
        passed &= worst <= tol::QUAD_DIFF_BACK_C * dx * dx;
        csv.push_str(&format!("diff_back_ratio,{n},{}\n", fmt(worst / (dx * dx))));
    }

    // Boundary behavior on the diagonal: the trace vanishes identically and
    // the transversal derivative is second-order small.
    {
        let n = mid;
        let g = Grid2::<f64>::new(16.0, n)?;
        let dx = g.spacing();
        let p = g.freq(2);
        let q = g.freq(3);
        let f = Field2::from_fn(g, Frame::Null, |a, b| (p * a).cos() * (q * b).sin() + 0.3);
        let inv = dalembert_inverse_quadrature(&f);
        let mut trace = 0.0f64;
        for i in 1..n {
            trace = trace.max(inv.at(0, i, n - i).norm());
        }
        let mut deriv = 0.0f64;
        for i in 2..n - 1 {
            let j = n - i;
            if j + 1 > n - 1 {
                continue;
            }
            let fd = (inv.at(0, i + 1, j + 1).re - inv.at(0, i - 1, j - 1).re) / (2.0 * dx);
            deriv = deriv.max(fd.abs());
        }
        passed &= trace == 0.0 && deriv <= tol::BC_DERIV_C * dx * dx;
        csv.push_str(&format!("diagonal_trace,{n},{}\n", fmt(trace)));
        csv.push_str(&format!("boundary_deriv_ratio,{n},{}\n", fmt(deriv / (dx * dx))));
    }

    // Base-band density: the block route and the quadrature route coincide.
    {
        let n = 128;
        let g = Grid2::<f64>::new(16.0, n)?;
        let part = DyadicPartition::new(g)?;
        let f = Field2::from_fn(g, Frame::Null, |a, b| {
            (g.freq(5) * a).cos() * (g.freq(3) * b).cos()
                + 0.7 * (g.freq(2) * a + g.freq(4) * b).sin()
                + 0.2
        });
        let lp = dalembert_inverse_lp(&f, &part);
        let quad = dalembert_inverse_quadrature(&f);
        let rel = sup_gap(&lp, &quad) / quad.sup_norm();
        passed &= rel <= 1e-6;
        csv.push_str(&format!("two_route_relative,{n},{}\n", fmt(rel)));
    }

    // Gain estimate on rough densities: sampled sheets at the fine grid,
    // even-index subsampled to the coarse grid so both resolutions see the
    // same path.
    {
        let nc = if quick { 128 } else { 256 };
        let gc = Grid2::<f64>::new(16.0, nc)?;
        let gfine = Grid2::<f64>::new(16.0, 2 * nc)?;
        let hurst = HurstPair::new(0.85, 0.85)?;
        let mut coarse_ens = Vec::new();
        let mut fine_ens = Vec::new();
        for k in 0..5u64 {
            let fine = sample_sheet(gfine, hurst, split_seed(seed, k))?;
            coarse_ens.push(subsample_sheet(&fine, gc, hurst).derivative().clone());
            fine_ens.push(fine.derivative().clone());
        }
        let rc = {
            let part = DyadicPartition::new(gc)?;
            let cut = CutoffPair::standard(gc);
            inverse_estimate_check(&coarse_ens, &part, &cut, 0.8, 0.8)?
        };
        let rf = {
            let part = DyadicPartition::new(gfine)?;
            let cut = CutoffPair::standard(gfine);
            inverse_estimate_check(&fine_ens, &part, &cut, 0.8, 0.8)?
        };
        let drift = rc.max_ratio / rf.max_ratio;
        passed &= rc.max_ratio <= tol::INVERSE_RATIO_MAX && rf.max_ratio <= tol::INVERSE_RATIO_MAX;
        passed &= (1.0 / tol::INVERSE_RATIO_REFINE..=tol::INVERSE_RATIO_REFINE).contains(&drift);
        csv.push_str(&format!("rough_max_ratio,{nc},{}\n", fmt(rc.max_ratio)));
        csv.push_str(&format!("rough_max_ratio,{},{}\n", 2 * nc, fmt(rf.max_ratio)));
        csv.push_str(&format!("rough_drift,,{}\n", fmt(drift)));
    }

    Ok(Outcome {
        passed,
        details: format!(
            "cosine orders {o1:.2}/{o2:.2}, gaps to {:.1e}; exactness, boundary, \
             routes and rough estimate recorded",
            gaps[2]
        ),
        artifacts: vec![Artifact {
            name: "c05_inverse_wave.csv".into(),
            content: csv,
        }],
    })
}

/// Windowed two-component trigonometric fields for the composition check.
pub fn vec2_ensemble(g: Grid2<f64>, count: usize, base: u64) -> Vec<Field2<f64>> {
    let cut = CutoffPair::standard(g);
    (0..count)
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(split_seed(base, r as u64));
            let mut coefs = Vec::new();
            for _ in 0..6 {
                let m: i64 = rng.gen_range(-10..11);
                let k: i64 = rng.gen_range(-10..11);
                let a1: f64 = rng.gen_range(-1.0..1.0);
                let a2: f64 = rng.gen_range(-1.0..1.0);
                let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                coefs.push((m as f64, k as f64, a1, a2, ph));
            }
            let hw = g.half_width();
            Field2::from_fn_vec2(g, Frame::Null, |a, b| {
                let w = cut.eta(a) * cut.eta(b);
                let mut v1 = 0.0;
                let mut v2 = 0.0;
                for &(m, k, a1, a2, ph) in &coefs {
                    let phase = std::f64::consts::PI * (m * a + k * b) / hw + ph;
                    v1 += a1 * phase.cos();
                    v2 += a2 * phase.sin();
                }
                (w * v1, w * v2)
            })
        })
        .collect()
}

/// Criterion 6: the measured composition constants are finite, below their
/// frozen caps, and stable when the same fields are sampled twice as finely.
fn c6_composition(seed: u64, quick: bool) -> Result<Outcome> {
    let count = if quick { 12 } else { 50 };
    let n = if quick { 128 } else { 256 };
    let sigma = DiffusionCoeff::new(SigmaKind::SinCos, 1.0);
    let coarse = composition_bound_check(
        &sigma,
        &vec2_ensemble(Grid2::new(16.0, n)?, count, seed),
        0.8,
        0.8,
    )?;
    let fine = composition_bound_check(
        &sigma,
        &vec2_ensemble(Grid2::new(16.0, 2 * n)?, count, seed),
        0.8,
        0.8,
    )?;
    let d1 = (fine.c1_hat / coarse.c1_hat).max(coarse.c1_hat / fine.c1_hat);
    let d2 = (fine.c2_hat / coarse.c2_hat).max(coarse.c2_hat / fine.c2_hat);
    let finite = [coarse.c1_hat, coarse.c2_hat, fine.c1_hat, fine.c2_hat]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
    let passed = finite
        && coarse.c1_hat <= tol::COMPOSITION_C1_MAX
        && coarse.c2_hat <= tol::COMPOSITION_C2_MAX
        && d1 <= tol::COMPOSITION_REFINE_RATIO
        && d2 <= tol::COMPOSITION_REFINE_RATIO;
    let mut csv = String::from("n,c1_hat,c2_hat,skipped\n");
    csv.push_str(&format!("{n},{},{},{}\n", fmt(coarse.c1_hat), fmt(coarse.c2_hat), coarse.skipped));
    csv.push_str(&format!("{},{},{},{}\n", 2 * n, fmt(fine.c1_hat), fmt(fine.c2_hat), fine.skipped));
    csv.push_str(&format!("drift,{},{},\n", fmt(d1), fmt(d2)));
    Ok(Outcome {
        passed,
        details: format!(
            "{count} fields: C1 {:.3}, C2 {:.2e}, refinement drift {d1:.3}/{d2:.3}",
            coarse.c1_hat, coarse.c2_hat
        ),
        artifacts: vec![Artifact {
            name: "c06_composition.csv".into(),
            content: csv,
        }],
    })
}

/// Band-limited position-and-velocity reference profile at amplitude `amp`.
pub fn smooth_data(g: Grid2<f64>, amp: f64) -> InitialData<f64> {
    let k2 = g.freq(2);
    let k3 = g.freq(3);
    InitialData::from_fn(
        g,
        0.8,
        |x| (amp * (k2 * x).cos(), amp * (k3 * x).sin()),
        |x| (amp * (k3 * x).sin(), amp * (k2 * x).cos()),
    )
}

/// Velocity-only variant of the reference profile; every chart mean is
/// exactly zero, which keeps multi-chart scenarios comparable.
pub fn velocity_data(g: Grid2<f64>, amp: f64) -> InitialData<f64> {
    let k2 = g.freq(2);
    let k3 = g.freq(3);
    InitialData::from_fn(
        g,
        0.8,
        |_| (0.0, 0.0),
        |x| (amp * (k2 * x).cos(), amp * (k3 * x).sin()),
    )
}

/// The deterministic zero noise path (for linear scenarios).
pub fn zero_sample(g: Grid2<f64>, hurst: HurstPair) -> FbsSample<f64> {
    FbsSample::from_sheet(Field2::zeros(g, Frame::Null, Arity::Scalar), hurst, 0)
}

/// Criterion 7: the Picard solver.  (a) The linear problem converges in two
/// iterations to the localized homogeneous wave, with a second-order mild
/// residual, also after solving at lambda = 2 and undoing the scaling.
/// (b) On the pinned nonlinear scenario the chosen lambda contracts with
/// factor at most one half and converges below 1e-8 within 20 iterations
/// for every seed.  (c) Two starting points give the same limit.  (d) The
/// rescaled defect is at the solver tolerance.
fn c7_picard(seed: u64, quick: bool) -> Result<Outcome> {
    let g = Grid2::<f64>::new(16.0, 128)?;
    let cut = CutoffPair::standard(g);
    let hurst = HurstPair::new(0.85, 0.85)?;
    let base = SolverConfig {
        hurst,
        ..SolverConfig::default()
    };
    let dx = g.spacing();
    let mut csv = String::from("part,seed,lambda,iterations,worst_factor,value\n");
    let mut passed = true;

    // (a) linear, lambda = 1.
    let flat = ChristoffelTable::flat();
    let sig0 = DiffusionCoeff::new(SigmaKind::Zero, 1.0);
    let lin = velocity_data(g, DATA_AMP);
    let zs = zero_sample(g, hurst);
    let (st, u) = picard_solve(&base, &lin, &zs, &flat, &sig0, &cut)?;
    let (lin_loc, _) = scale_data(&lin, 1.0, &cut)?;
    let homog = homogeneous_solution(&lin_loc).windowed(&cut.window2(Frame::Null));
    let gap = sup_gap(&u, &homog);
    let lin_res = residual(&u, &base, &lin, &zs, &flat, &sig0, &cut);
    passed &= st.iterations == 2 && gap <= 1e-12 && lin_res <= dx * dx;
    csv.push_str(&format!("linear_homog_gap,,1,{},,{}\n", st.iterations, fmt(gap)));
    csv.push_str(&format!("linear_residual_ratio,,1,,,{}\n", fmt(lin_res / (dx * dx))));

    // (a) continued: lambda = 2 then rescale back.
    let c2 = SolverConfig {
        lambda: 2.0,
        ..base
    };
    let (st2, ul) = picard_solve(&c2, &lin, &zs, &flat, &sig0, &cut)?;
    let resc = rescale_solution(&ul, 2.0)?;
    let r2 = residual(&resc, &c2, &lin, &zs, &flat, &sig0, &cut);
    passed &= st2.converged && r2 <= tol::RESCALE_LINEAR_C * dx * dx;
    csv.push_str(&format!("rescaled_linear_ratio,,2,,,{}\n", fmt(r2 / (dx * dx))));

    // (b)-(d) nonlinear scenario across seeds.
    let seeds = if quick { 3 } else { 10 };
    let table = ChristoffelTable::small_polynomial(TABLE_AMP);
    let sigma = DiffusionCoeff::new(SigmaKind::SinCos, SIGMA_SCALE);
    let data = smooth_data(g, DATA_AMP);
    let mut lambdas = Vec::new();
    for k in 0..seeds {
        let sample = sample_sheet(g, hurst, split_seed(seed, 100 + k as u64))?;
        let lam = choose_lambda(&base, &data, &sample, &table, &sigma, &cut)?;
        let cfg_l = SolverConfig {
            lambda: lam,
            ..base
        };
        let (st, u) = picard_solve(&cfg_l, &data, &sample, &table, &sigma, &cut)?;
        let worst = st.factors.iter().fold(0.0f64, |a, &b| a.max(b));
        let last = st.increments.last().copied().unwrap_or(f64::INFINITY);
        passed &= st.converged
            && st.iterations <= 20
            && worst <= CONTRACTION_TARGET
            && last <= base.picard_tol;
        csv.push_str(&format!(
            "contraction,{k},{lam},{},{},{}\n",
            st.iterations,
            fmt(worst),
            fmt(last)
        ));

        if k < 3 {
            let (scaled, _) = scale_data(&data, lam, &cut)?;
            let start = homogeneous_solution(&scaled).windowed(&cut.window2(Frame::Null));
            let (_, u2) = picard_solve_from(start, &cfg_l, &data, &sample, &table, &sigma, &cut)?;
            let two_start = mixed_norm(&u.sub(&u2), base.s, base.delta);
            passed &= two_start <= 10.0 * base.picard_tol;
            csv.push_str(&format!("two_start_gap,{k},{lam},,,{}\n", fmt(two_start)));
        }

        let tu = theta_map(&u, &cfg_l, &data, &sample, &table, &sigma, &cut)?;
        let defect = mixed_norm(&rescale_solution(&tu.sub(&u), lam)?, base.s, base.delta);
        passed &= defect <= 10.0 * base.picard_tol;
        csv.push_str(&format!("rescaled_defect,{k},{lam},,,{}\n", fmt(defect)));
        lambdas.push(lam);
    }

    Ok(Outcome {
        passed,
        details: format!(
            "linear gap {gap:.1e}, rescaled ratio {:.3}; {seeds} seeds, lambdas {lambdas:?}",
            r2 / (dx * dx)
        ),
        artifacts: vec![Artifact {
            name: "c07_picard.csv".into(),
            content: csv,
        }],
    })
}

/// Criterion 8: doubling lambda scales the measured noise-term norm bound
/// by 2^(1 - (s + delta)) within a factor of two.
fn c8_lambda_exponent(quick: bool) -> Result<Outcome> {
    let n = if quick { 256 } else { 512 };
    let g = Grid2::<f64>::new(16.0, n)?;
    let (s, d) = (0.8f64, 0.8f64);
    let rate = 2f64.powf(1.0 - (s + d));
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    let mut bounds = Vec::new();
    for &lam in &lambdas {
        bounds.push(noise_bound_factor(g, s, d, lam)?);
    }
    let mut csv = String::from("lambda,bound,doubling_ratio\n");
    let mut passed = true;
    let mut ratios = Vec::new();
    for (k, &lam) in lambdas.iter().enumerate() {
        let ratio = if k > 0 {
            let r = bounds[k] / bounds[k - 1];
            passed &= rate / 2.0 <= r && r <= rate * 2.0;
            ratios.push(r);
            fmt(r)
        } else {
            String::new()
        };
        csv.push_str(&format!("{lam},{},{ratio}\n", fmt(bounds[k])));
    }
    Ok(Outcome {
        passed,
        details: format!(
            "doubling ratios {:?} against 2^(-0.6) = {rate:.3}",
            ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
        artifacts: vec![Artifact {
            name: "c08_lambda_exponent.csv".into(),
            content: csv,
        }],
    })
}

/// Criterion 9: charts solved at two overlapping centers agree on the
/// overlap of their trusted squares, to roundoff in the linear case and to
/// the gluing tolerance in the nonlinear case with a shared noise path.
fn c9_glue(seed: u64) -> Result<Outcome> {
    let g = Grid2::<f64>::new(16.0, 128)?;
    let cut = CutoffPair::standard(g);
    let hurst = HurstPair::new(0.85, 0.85)?;
    let base = SolverConfig {
        hurst,
        ..SolverConfig::default()
    };
    let dx = g.spacing();
    let centers = [0.0, 1.0];
    let mut csv = String::from("case,gap,nodes,residual_0,residual_1\n");

    let lin = glue_solutions(
        &centers,
        &base,
        &smooth_data(g, DATA_AMP),
        &zero_sample(g, hurst),
        &ChristoffelTable::flat(),
        &DiffusionCoeff::new(SigmaKind::Zero, 1.0),
        &cut,
    )?;
    csv.push_str(&format!(
        "linear,{},{},{},{}\n",
        fmt(lin.max_overlap_gap),
        lin.overlap_nodes,
        fmt(lin.residuals[0]),
        fmt(lin.residuals[1])
    ));

    let sample = sample_sheet(g, hurst, split_seed(seed, 1))?;
    let non = glue_solutions(
        &centers,
        &base,
        &velocity_data(g, DATA_AMP),
        &sample,
        &ChristoffelTable::small_polynomial(TABLE_AMP),
        &DiffusionCoeff::new(SigmaKind::SinSin, SIGMA_SCALE),
        &cut,
    )?;
    csv.push_str(&format!(
        "nonlinear,{},{},{},{}\n",
        fmt(non.max_overlap_gap),
        non.overlap_nodes,
        fmt(non.residuals[0]),
        fmt(non.residuals[1])
    ));

    let passed = lin.overlap_nodes > 0
        && lin.max_overlap_gap <= dx * dx
        && non.overlap_nodes > 0
        && non.success
        && non.max_overlap_gap <= 1e-5;
    Ok(Outcome {
        passed,
        details: format!(
            "linear gap {:.1e}, nonlinear gap {:.1e} over {} nodes",
            lin.max_overlap_gap, non.max_overlap_gap, non.overlap_nodes
        ),
        artifacts: vec![
            Artifact {
                name: "c09_glue.csv".into(),
                content: csv,
            },
        ],
    })
}

/// One batch of small stochastic artifacts, used twice by criterion 10.
fn determinism_batch(seed: u64) -> Result<Vec<Artifact>> {
    // A sheet moment table.
    let g = Grid2::<f64>::new(16.0, 64)?;
    let hurst = HurstPair::new(0.85, 0.80)?;
    let eps = 1e-9;
    let pts = [(0.5, 0.5), (1.0, 2.0), (3.0, 1.5)];
    let mut idx = Vec::new();
    for &(x, y) in &pts {
        idx.push((g.index_of(x, eps)?, g.index_of(y, eps)?));
    }
    let reps = 40;
    let mut mean = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for r in 0..reps {
        let s = sample_sheet(g, hurst, split_seed(seed, r))?;
        for (k, &(i, j)) in idx.iter().enumerate() {
            let w = s.sheet().at(0, i, j).re;
            mean[k] += w;
            sq[k] += w * w;
        }
    }
    let mut sheet_csv = String::from("point,mean,second_moment\n");
    for k in 0..3 {
        sheet_csv.push_str(&format!(
            "{k},{},{}\n",
            fmt(mean[k] / reps as f64),
            fmt(sq[k] / reps as f64)
        ));
    }

    // A solver trace on the reference nonlinear scenario.
    let gs = Grid2::<f64>::new(16.0, 128)?;
    let cut = CutoffPair::standard(gs);
    let hs = HurstPair::new(0.85, 0.85)?;
    let cfg = SolverConfig {
        hurst: hs,
        ..SolverConfig::default()
    };
    let sample = sample_sheet(gs, hs, split_seed(seed, 1_000))?;
    let (st, _) = picard_solve(
        &cfg,
        &smooth_data(gs, DATA_AMP),
        &sample,
        &ChristoffelTable::small_polynomial(TABLE_AMP),
        &DiffusionCoeff::new(SigmaKind::SinSin, SIGMA_SCALE),
        &cut,
    )?;
    let mut trace_csv = String::from("iteration,increment,factor\n");
    for (k, inc) in st.increments.iter().enumerate() {
        let factor = if k == 0 {
            String::new()
        } else {
            fmt(st.factors[k - 1])
        };
        trace_csv.push_str(&format!("{},{},{factor}\n", k + 1, fmt(*inc)));
    }
    trace_csv.push_str(&format!("final,{},{}\n", fmt(st.final_norm), fmt(st.residual)));

    // A probe bound table.
    let gp = Grid2::<f64>::new(16.0, 128)?;
    let mut probe_csv = String::from("lambda,bound\n");
    for lam in [1.0, 2.0] {
        probe_csv.push_str(&format!("{lam},{}\n", fmt(noise_bound_factor(gp, 0.8, 0.8, lam)?)));
    }

    Ok(vec![
        Artifact {
            name: "c10_sheet_moments.csv".into(),
            content: sheet_csv,
        },
        Artifact {
            name: "c10_solver_trace.csv".into(),
            content: trace_csv,
        },
        Artifact {
            name: "c10_probe_bounds.csv".into(),
            content: probe_csv,
        },
    ])
}

/// Criterion 10: rerunning the stochastic emitters with the same seed
/// reproduces every artifact byte for byte.
fn c10_determinism(seed: u64) -> Result<Outcome> {
    let first = determinism_batch(seed)?;
    let second = determinism_batch(seed)?;
    let mut csv = String::from("artifact,bytes,identical\n");
    let mut passed = first.len() == second.len();
    for (a, b) in first.iter().zip(&second) {
        let same = a.name == b.name && a.content == b.content;
        passed &= same;
        csv.push_str(&format!("{},{},{}\n", a.name, a.content.len(), same));
    }
    let mut artifacts = first;
    artifacts.push(Artifact {
        name: "c10_determinism.csv".into(),
        content: csv,
    });
    Ok(Outcome {
        passed,
        details: format!("{} artifacts re-emitted identically", artifacts.len() - 1),
        artifacts,
    })
}
