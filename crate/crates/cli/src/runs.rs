//! Subcommand implementations.  Each function writes its CSV and field
//! artifacts through [`Run`], closes the manifest, and returns the process
//! exit status (0 success, 1 a reported check failed; hard errors propagate
//! as [`nullwave::Error`] and are mapped to codes in `main`).
//!
//! Ensemble work is distributed over a scoped thread pool keyed by member
//! index.  Every member derives its own seed with `split_seed`, so results
//! are identical for any worker count.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nullwave::accept;
use nullwave::config::RunConfig;
use nullwave::cutoff::CutoffPair;
use nullwave::fbs::sample_sheet;
use nullwave::geometry::composition_bound_check;
use nullwave::lp::{besov_norm, product_norm, AxisOrder, DyadicPartition};
use nullwave::null::isomorphism_ratio;
use nullwave::num::split_seed;
use nullwave::solver::{choose_lambda, glue_solutions, picard_solve, SolverConfig};
use nullwave::wave::inverse_estimate_check;
use nullwave::{tol, Error, Result};

use crate::artifacts::Run;

/// Round-trip exact float formatting for CSV cells.
fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

/// Runs `task` for indices `0..count` on up to `workers` threads and returns
/// the results in index order.  Items share no mutable state; the first
/// error in index order wins.
fn parallel_map<T, F>(count: usize, workers: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let threads = workers.clamp(1, count.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                *slots[i].lock().unwrap() = Some(task(i));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("pool filled every slot"))
        .collect()
}

/// Draws `norms.ensemble` independent sheets, tabulates per-member unit-square
/// increments and probes, and dumps member 0 as a raw field.
pub fn sample_fbs(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "sample-fbs", cfg, workers)?;
    let grid = cfg.grid::<f64>()?;
    let base = cfg.require_seed()?;
    let origin = grid.index_of(0.0, 1e-9)?;
    let unit = grid.index_of(1.0, 1e-9)?;
    let rows = parallel_map(cfg.norms.ensemble, workers, |r| {
        let seed = split_seed(base, r as u64);
        let sample = sample_sheet(grid, cfg.hurst, seed)?;
        Ok((
            seed,
            sample.rect_increment((origin, origin), (unit, unit)),
            sample.sheet().at(0, unit, unit).re,
            sample.sheet().sup_norm(),
        ))
    })?;
    let mut csv = String::from("member,seed,unit_rect_increment,sheet_at_1_1,sup\n");
    let mut second_moment = 0.0;
    for (r, (seed, inc, probe, sup)) in rows.iter().enumerate() {
        second_moment += inc * inc;
        csv += &format!("{r},{seed},{},{},{}\n", fmt(*inc), fmt(*probe), fmt(*sup));
    }
    run.write_csv("sheets.csv", &csv)?;
    let m = rows.len() as f64;
    run.write_csv(
        "moments.csv",
        &format!(
            "statistic,value\nunit_rect_second_moment,{}\nexact,{}\nstderr,{}\n",
            fmt(second_moment / m),
            fmt(1.0),
            fmt((2.0 / m).sqrt()),
        ),
    )?;
    let first = sample_sheet(grid, cfg.hurst, split_seed(base, 0))?;
    run.write_field("sheet0", first.sheet())?;
    run.finish()?;
    Ok(0)
}

/// Measures the dyadic-sum versus product-norm ratio on random band-limited
/// fields and the null-coordinate norm ratio on windowed mode sums, checking
/// both against the frozen equivalence bands.
pub fn verify_norms(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "verify-norms", cfg, workers)?;
    let grid = cfg.grid::<f64>()?;
    let part = DyadicPartition::new(grid)?;
    let base = cfg.require_seed()?;
    let (s, d) = (cfg.norms.s, cfg.norms.delta);
    let cut_freq = PI * f64::powi(2.0, cfg.norms.band as i32) / grid.half_width();
    let part_ref = &part;
    let rows = parallel_map(cfg.norms.ensemble, workers, |r| {
        let f = accept::band_limited(grid, cut_freq, split_seed(base, 200 + r as u64));
        let bp = besov_norm(&f, part_ref, s, d) / product_norm(&f, s, d, AxisOrder::AlphaBeta);
        let c = accept::mode_sum_cartesian(grid, split_seed(base, 1_200 + r as u64));
        Ok((bp, isomorphism_ratio(&c, s, d)))
    })?;
    let mut csv = String::from("field,besov_over_product,iso_ratio,pass\n");
    let mut all_pass = true;
    for (r, (bp, iso)) in rows.iter().enumerate() {
        let pass = (tol::BESOV_PRODUCT_C.recip()..=tol::BESOV_PRODUCT_C).contains(bp)
            && (tol::ISO_RATIO_LO..=tol::ISO_RATIO_HI).contains(iso);
        all_pass &= pass;
        csv += &format!("{r},{},{},{pass}\n", fmt(*bp), fmt(*iso));
    }
    run.write_csv("norms.csv", &csv)?;
    run.finish()?;
    Ok(u8::from(!all_pass))
}

/// Applies the inverse-wave gain check to the distributional derivative of
/// each sampled sheet and compares per-member ratios against the frozen cap.
pub fn verify_inverse(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "verify-inverse", cfg, workers)?;
    let grid = cfg.grid::<f64>()?;
    let part = DyadicPartition::new(grid)?;
    let cut = CutoffPair::standard(grid);
    let base = cfg.require_seed()?;
    let (part_ref, cut_ref) = (&part, &cut);
    let rows = parallel_map(cfg.norms.ensemble, workers, |r| {
        let seed = split_seed(base, 300 + r as u64);
        let sample = sample_sheet(grid, cfg.hurst, seed)?;
        let report = inverse_estimate_check(
            std::slice::from_ref(sample.derivative()),
            part_ref,
            cut_ref,
            cfg.norms.s,
            cfg.norms.delta,
        )?;
        Ok((seed, report.max_ratio, report.skipped))
    })?;
    let mut csv = String::from("member,seed,ratio,skipped,pass\n");
    let mut all_pass = true;
    let (mut worst, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for (r, (seed, ratio, skipped)) in rows.iter().enumerate() {
        let pass = *skipped > 0 || (ratio.is_finite() && *ratio <= tol::INVERSE_RATIO_MAX);
        all_pass &= pass;
        if *skipped == 0 {
            worst = worst.max(*ratio);
            sum += ratio;
            count += 1;
        }
        csv += &format!("{r},{seed},{},{skipped},{pass}\n", fmt(*ratio));
    }
    run.write_csv("inverse.csv", &csv)?;
    run.write_csv(
        "inverse_summary.csv",
        &format!(
            "statistic,value\nmax_ratio,{}\nmean_ratio,{}\ncount,{count}\n",
            fmt(worst),
            fmt(sum / count.max(1) as f64),
        ),
    )?;
    run.finish()?;
    Ok(u8::from(!all_pass))
}

/// Estimates the composition constants for the configured diffusion
/// coefficient on the reference vector ensemble at the configured resolution
/// and its doubling, checking caps and refinement drift.
pub fn verify_composition(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "verify-composition", cfg, workers)?;
    let base = cfg.require_seed()?;
    let (s, d) = (cfg.norms.s, cfg.norms.delta);
    let coarse_grid = cfg.grid::<f64>()?;
    let fine_grid = nullwave::Grid2::new(coarse_grid.half_width(), 2 * coarse_grid.n())?;
    let count = cfg.norms.ensemble;
    let coarse = composition_bound_check(
        &cfg.sigma,
        &accept::vec2_ensemble(coarse_grid, count, split_seed(base, 600)),
        s,
        d,
    )?;
    let fine = composition_bound_check(
        &cfg.sigma,
        &accept::vec2_ensemble(fine_grid, count, split_seed(base, 600)),
        s,
        d,
    )?;
    let drift = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 1.0 } else { b / a };
    let d1 = drift(coarse.c1_hat, fine.c1_hat);
    let d2 = drift(coarse.c2_hat, fine.c2_hat);
    let finite = coarse.c1_hat.is_finite()
        && coarse.c2_hat.is_finite()
        && fine.c1_hat.is_finite()
        && fine.c2_hat.is_finite();
    let stable = |x: f64| (tol::COMPOSITION_REFINE_RATIO.recip()..=tol::COMPOSITION_REFINE_RATIO).contains(&x);
    let pass = finite
        && coarse.c1_hat <= tol::COMPOSITION_C1_MAX
        && coarse.c2_hat <= tol::COMPOSITION_C2_MAX
        && stable(d1)
        && stable(d2);
    let mut csv = String::from("resolution,c1_hat,c2_hat,skipped\n");
    csv += &format!("{},{},{},{}\n", coarse_grid.n(), fmt(coarse.c1_hat), fmt(coarse.c2_hat), coarse.skipped);
    csv += &format!("{},{},{},{}\n", fine_grid.n(), fmt(fine.c1_hat), fmt(fine.c2_hat), fine.skipped);
    csv += &format!("drift,{},{},{pass}\n", fmt(d1), fmt(d2));
    run.write_csv("composition.csv", &csv)?;
    run.finish()?;
    Ok(u8::from(!pass))
}

/// Shared by `solve` and `glue`: solver parameters with the sheet law
/// stamped in, plus the standard cutoffs on the configured grid.
fn solver_setup(cfg: &RunConfig) -> Result<(SolverConfig, CutoffPair<f64>)> {
    let scfg = cfg.solver_config()?;
    let cut = CutoffPair::standard(cfg.grid::<f64>()?);
    Ok((scfg, cut))
}

/// Runs one Picard solve on the pinned reference profile over a fresh sheet,
/// recording the iteration trace and the fixed point itself.  A configured
/// `solver.lambda` above one is honored; at the default one the scale is
/// chosen automatically.
pub fn solve(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "solve", cfg, workers)?;
    let grid = cfg.grid::<f64>()?;
    let (scfg, cut) = solver_setup(cfg)?;
    let base = cfg.require_seed()?;
    let data = accept::smooth_data(grid, accept::DATA_AMP);
    let sample = sample_sheet(grid, cfg.hurst, split_seed(base, 400))?;
    let table = cfg.table::<f64>()?;
    let lambda = if scfg.lambda > 1.0 {
        scfg.lambda
    } else {
        choose_lambda(&scfg, &data, &sample, &table, &cfg.sigma, &cut)?
    };
    let run_cfg = SolverConfig { lambda, ..scfg };
    let (state, u) = picard_solve(&run_cfg, &data, &sample, &table, &cfg.sigma, &cut)?;
    let mut csv = String::from("iteration,increment,factor\n");
    for (k, inc) in state.increments.iter().enumerate() {
        let factor = state.factors.get(k).copied().unwrap_or(0.0);
        csv += &format!("{},{},{}\n", k + 1, fmt(*inc), fmt(factor));
    }
    csv += &format!(
        "final,lambda,{}\nfinal,norm,{}\nfinal,residual,{}\nfinal,converged,{}\n",
        fmt(lambda),
        fmt(state.final_norm),
        fmt(state.residual),
        state.converged,
    );
    run.write_csv("trace.csv", &csv)?;
    run.write_field("solution", &u)?;
    run.finish()?;
    Ok(0)
}

/// Solves on two overlapping charts over one shared sheet and checks chart
/// agreement on the overlap.
pub fn glue(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<u8> {
    let mut run = Run::begin(dir, "glue", cfg, workers)?;
    let grid = cfg.grid::<f64>()?;
    let (scfg, cut) = solver_setup(cfg)?;
    let base = cfg.require_seed()?;
    let data = accept::velocity_data(grid, accept::DATA_AMP);
    let sample = sample_sheet(grid, cfg.hurst, split_seed(base, 500))?;
    let table = cfg.table::<f64>()?;
    let centers = [0.0, 1.0];
    let report = glue_solutions(&centers, &scfg, &data, &sample, &table, &cfg.sigma, &cut)?;
    let mut csv = String::from("center,lambda,residual,norm\n");
    for (k, c) in report.centers.iter().enumerate() {
        csv += &format!(
            "{},{},{},{}\n",
            fmt(*c),
            fmt(report.lambdas[k]),
            fmt(report.residuals[k]),
            fmt(report.norms[k]),
        );
    }
    csv += &format!(
        "overlap,gap,{},over {} nodes\noverlap,tol,{},success {}\n",
        fmt(report.max_overlap_gap),
        report.overlap_nodes,
        fmt(report.tol),
        report.success,
    );
    run.write_csv("glue.csv", &csv)?;
    run.finish()?;
    if report.success {
        Ok(0)
    } else {
        Err(Error::Glue(format!(
            "overlap gap {:.3e} exceeds tolerance {:.3e}",
            report.max_overlap_gap, report.tol
        )))
    }
}

/// Runs the full acceptance suite, echoing one line per criterion and
/// persisting every evidence table.
pub fn accept(cfg: &RunConfig, dir: &Path, workers: usize, quick: bool) -> Result<u8> {
    let mut run = Run::begin(dir, "accept", cfg, workers)?;
    let suite = accept::run_all(cfg, quick)?;
    for r in &suite.results {
        println!(
            "criterion {:2} [{}] {:<22} ({:6.1}s)  {}",
            r.id,
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.seconds,
            r.details,
        );
    }
    for artifact in &suite.artifacts {
        run.write_csv(&artifact.name, &artifact.content)?;
    }
    run.finish()?;
    Ok(u8::from(!suite.passed()))
}
