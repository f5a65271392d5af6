//! Target-geometry data: polynomial Christoffel symbols, the induced
//! quadratic-gradient nonlinearity in null coordinates, and the bounded
//! diffusion coefficient with its composition-estimate verifier.
//!
//! The target dimension is fixed at n = 2 (the chart carries R^2-valued
//! fields); generalizing means widening [`crate::grid::Arity`] and the
//! index ranges below, nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Arity, Field2};
use crate::lp::mixed_norm;
use crate::num::Real;
use crate::spectral::{spectral_derivative, Axis};

/// One monomial coefficient of a Christoffel component, as it appears in
/// config files: 1-based indices (k, a, b), multi-index l = (l1, l2) and
/// the real coefficient of u1^{l1} u2^{l2} in Gamma^k_{ab}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChristoffelEntry {
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub l: [usize; 2],
    pub coeff: f64,
}

/// Polynomial Christoffel symbols Gamma^k_{ab}(u) = Sum_{|l| <= r} A^l_{ab} u^l
/// on the two-dimensional chart, with the Levi-Civita symmetry
/// Gamma^k_{ab} = Gamma^k_{ba} enforced at construction.
#[derive(Debug, Clone)]
pub struct ChristoffelTable<T> {
    degree: usize,
    /// coeffs[k][a][b]: list of (l1, l2, A^l_{ab}).
    coeffs: [[[Vec<(usize, usize, T)>; 2]; 2]; 2],
}

impl<T: Real> ChristoffelTable<T> {
    /// Builds the table from sparse entries. An entry for (a, b) with a != b
    /// is mirrored to (b, a); if both orderings are supplied they must agree,
    /// otherwise the table is not a connection and construction fails.
    pub fn new(degree: usize, entries: &[ChristoffelEntry]) -> Result<Self> {
        let mut coeffs: [[[Vec<(usize, usize, T)>; 2]; 2]; 2] = Default::default();
        let mut seen: Vec<(usize, usize, usize, usize, usize, f64)> = Vec::new();
        for e in entries {
            for (name, idx) in [("k", e.k), ("a", e.a), ("b", e.b)] {
                if !(1..=2).contains(&idx) {
                    return Err(Error::Config(format!(
                        "Christoffel index {name} = {idx} outside 1..=2"
                    )));
                }
            }
            if e.l[0] + e.l[1] > degree {
                return Err(Error::Config(format!(
                    "multi-index {:?} exceeds degree {degree}",
                    e.l
                )));
            }
            if let Some(prev) = seen
                .iter()
                .find(|p| (p.0, p.1, p.2, p.3, p.4) == (e.k, e.a, e.b, e.l[0], e.l[1]))
            {
                return Err(Error::Config(format!(
                    "duplicate Christoffel entry k={} a={} b={} l={:?} (coeffs {} and {})",
                    e.k, e.a, e.b, e.l, prev.5, e.coeff
                )));
            }
            seen.push((e.k, e.a, e.b, e.l[0], e.l[1], e.coeff));
            if e.a != e.b {
                if let Some(prev) = seen
                    .iter()
                    .find(|p| (p.0, p.1, p.2, p.3, p.4) == (e.k, e.b, e.a, e.l[0], e.l[1]))
                {
                    if prev.5 != e.coeff {
                        return Err(Error::Config(format!(
                            "Christoffel symmetry violation at k={} (a,b)=({},{}) l={:?}: \
                             {} vs {}",
                            e.k, e.a, e.b, e.l, prev.5, e.coeff
                        )));
                    }
                    continue;
                }
            }
            let c = T::of(e.coeff);
            coeffs[e.k - 1][e.a - 1][e.b - 1].push((e.l[0], e.l[1], c));
            if e.a != e.b {
                coeffs[e.k - 1][e.b - 1][e.a - 1].push((e.l[0], e.l[1], c));
            }
        }
        Ok(Self { degree, coeffs })
    }

    /// The flat table: every symbol identically zero.
    pub fn flat() -> Self {
        Self {
            degree: 0,
            coeffs: Default::default(),
        }
    }

    /// A pinned small non-flat example used by the solver scenarios: degree 2,
    /// all coefficient magnitudes equal to `amplitude`.
    pub fn small_polynomial(amplitude: f64) -> Self {
        let a = amplitude;
        let entries = [
            ChristoffelEntry { k: 1, a: 1, b: 2, l: [1, 0], coeff: a },
            ChristoffelEntry { k: 1, a: 1, b: 1, l: [0, 1], coeff: a },
            ChristoffelEntry { k: 2, a: 2, b: 2, l: [1, 0], coeff: -a },
            ChristoffelEntry { k: 2, a: 1, b: 2, l: [1, 1], coeff: a },
            ChristoffelEntry { k: 1, a: 2, b: 2, l: [2, 0], coeff: -a },
        ];
        Self::new(2, &entries).expect("pinned table is valid")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_flat(&self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .flatten()
            .all(|list| list.is_empty())
    }

    /// Evaluates all symbols at one chart point; result indexed [k][a][b],
    /// zero-based.
    pub fn eval(&self, u1: T, u2: T) -> [[[T; 2]; 2]; 2] {
        // Power tables up to the degree; monomials then cost one multiply.
        let mut p1 = vec![T::one(); self.degree + 1];
        let mut p2 = vec![T::one(); self.degree + 1];
        for i in 1..=self.degree {
            p1[i] = p1[i - 1] * u1;
            p2[i] = p2[i - 1] * u2;
        }
        let mut out = [[[T::zero(); 2]; 2]; 2];
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let mut acc = T::zero();
                    for &(l1, l2, c) in &self.coeffs[k][a][b] {
                        acc += c * p1[l1] * p2[l2];
                    }
                    out[k][a][b] = acc;
                }
            }
        }
        out
    }
}

/// Standalone form of [`ChristoffelTable::eval`].
pub fn christoffel_eval<T: Real>(table: &ChristoffelTable<T>, u: (T, T)) -> [[[T; 2]; 2]; 2] {
    table.eval(u.0, u.1)
}

/// The null-frame nonlinearity
/// `N^k(u) = 4 Sum_{a,b} Gamma^k_{ab}(u) (d u^a / d alpha)(d u^b / d beta)`,
/// with spectral derivatives.
pub fn nonlinearity<T: Real>(u: &Field2<T>, table: &ChristoffelTable<T>) -> Field2<T> {
    assert_eq!(u.arity(), Arity::Vector2, "nonlinearity expects a chart map");
    let grid = u.grid();
    let n = grid.n();
    let da = spectral_derivative(u, Axis::Alpha);
    let db = spectral_derivative(u, Axis::Beta);
    let mut out = Field2::zeros(grid, u.frame(), Arity::Vector2);
    let four = T::of(4.0);
    for i in 0..n {
        for j in 0..n {
            let g = table.eval(u.at(0, i, j).re, u.at(1, i, j).re);
            let dav = [da.at(0, i, j).re, da.at(1, i, j).re];
            let dbv = [db.at(0, i, j).re, db.at(1, i, j).re];
            for k in 0..2 {
                let mut acc = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        acc += g[k][a][b] * dav[a] * dbv[b];
                    }
                }
                out.at_mut(k, i, j).re = four * acc;
            }
        }
    }
    out
}

/// Closed catalog of bounded-smooth diffusion maps; the catalog is closed so
/// that a derivative bound through order 3 is always on record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    Zero,
    Constant,
    SinCos,
    SinSin,
    Saturating,
}

/// Diffusion coefficient sigma = scale * base(u), where base is one of the
/// catalog maps R^2 -> R^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionCoeff {
    pub kind: SigmaKind,
    pub scale: f64,
}

impl DiffusionCoeff {
    pub fn new(kind: SigmaKind, scale: f64) -> Self {
        Self { kind, scale }
    }

    /// Pointwise value of sigma at one chart point.
    pub fn apply_point<T: Real>(&self, u1: T, u2: T) -> (T, T) {
        let s = T::of(self.scale);
        let (b1, b2) = match self.kind {
            SigmaKind::Zero => (T::zero(), T::zero()),
            SigmaKind::Constant => (T::one(), T::one()),
            SigmaKind::SinCos => (u1.sin(), u2.cos()),
            SigmaKind::SinSin => (u1.sin(), u2.sin()),
            SigmaKind::Saturating => (
                u1 / (T::one() + u1 * u1),
                u2 / (T::one() + u2 * u2),
            ),
        };
        (s * b1, s * b2)
    }

    /// Recorded bound on the base map's sup norm and all partial derivatives
    /// through order 3, times |scale|. For the saturating map the third
    /// derivative of x / (1 + x^2) attains 6 at the origin; the trigonometric
    /// and constant maps are bounded by 1.
    pub fn cb3_bound(&self) -> f64 {
        let base = match self.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::Constant | SigmaKind::SinCos | SigmaKind::SinSin => 1.0,
            SigmaKind::Saturating => 6.0,
        };
        base * self.scale.abs()
    }

    /// Whether sigma vanishes at the chart origin (relevant for which terms
    /// survive in a zero-data mild form).
    pub fn vanishes_at_origin(&self) -> bool {
        matches!(
            self.kind,
            SigmaKind::Zero | SigmaKind::SinSin | SigmaKind::Saturating
        )
    }

    /// Finite-difference check of [`Self::cb3_bound`]: samples all partial
    /// derivatives through order 3 on a probe lattice and returns the largest
    /// magnitude found. Always at most the recorded bound (up to FD error).
    pub fn sampled_derivative_max(&self) -> f64 {
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        let probes: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.1).collect();
        for &x in &probes {
            for &y in &probes {
                let f = |dx: f64, dy: f64, comp: usize| -> f64 {
                    let (v1, v2) = self.apply_point(x + dx, y + dy);
                    if comp == 0 {
                        v1
                    } else {
                        v2
                    }
                };
                for comp in 0..2 {
                    let val = f(0.0, 0.0, comp).abs();
                    // Central stencils per axis up to third order, plus the
                    // leading mixed ones; the catalog maps are all separable,
                    // so the pure-axis stencils exhaust the derivatives.
                    let d1x = (f(h, 0.0, comp) - f(-h, 0.0, comp)) / (2.0 * h);
                    let d1y = (f(0.0, h, comp) - f(0.0, -h, comp)) / (2.0 * h);
                    let d2x = (f(h, 0.0, comp) - 2.0 * f(0.0, 0.0, comp) + f(-h, 0.0, comp))
                        / (h * h);
                    let d2y = (f(0.0, h, comp) - 2.0 * f(0.0, 0.0, comp) + f(0.0, -h, comp))
                        / (h * h);
                    let d3x = (f(2.0 * h, 0.0, comp) - 2.0 * f(h, 0.0, comp)
                        + 2.0 * f(-h, 0.0, comp)
                        - f(-2.0 * h, 0.0, comp))
                        / (2.0 * h * h * h);
                    let d3y = (f(0.0, 2.0 * h, comp) - 2.0 * f(0.0, h, comp)
                        + 2.0 * f(0.0, -h, comp)
                        - f(0.0, -2.0 * h, comp))
                        / (2.0 * h * h * h);
                    for d in [val, d1x, d1y, d2x, d2y, d3x, d3y] {
                        worst = worst.max(d.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Pointwise composition sigma(u) over a chart-map field.
pub fn sigma_apply<T: Real>(sigma: &DiffusionCoeff, u: &Field2<T>) -> Field2<T> {
    assert_eq!(u.arity(), Arity::Vector2, "sigma expects a chart map");
    let grid = u.grid();
    let n = grid.n();
    let mut out = Field2::zeros(grid, u.frame(), Arity::Vector2);
    for i in 0..n {
        for j in 0..n {
            let (v1, v2) = sigma.apply_point(u.at(0, i, j).re, u.at(1, i, j).re);
            out.at_mut(0, i, j).re = v1;
            out.at_mut(1, i, j).re = v2;
        }
    }
    out
}

/// Empirical composition-estimate constants over an ensemble.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompositionReport {
    /// max ||sigma.u||^2 / (||u||^2 (1 + ||u||^2)).
    pub c1_hat: f64,
    /// max over pairs of ||sigma.u - sigma.v||^2 /
    /// (||u - v||^2 (1 + ||u||^2 + ||u||^4 + ||v||^2 + ||v||^4)).
    pub c2_hat: f64,
    /// Ratios skipped by the zero-denominator guards.
    pub skipped: usize,
}

/// Measures the composition constants: the direct bound ratio over every
/// ensemble member and the difference bound ratio over consecutive pairs.
/// Zero-norm members and zero-difference pairs are skipped.
pub fn composition_bound_check<T: Real>(
    sigma: &DiffusionCoeff,
    ensemble: &[Field2<T>],
    sexp: T,
    dexp: T,
) -> Result<CompositionReport> {
    if ensemble.is_empty() {
        return Err(Error::Config("composition check needs a nonempty ensemble".into()));
    }
    let norm = |f: &Field2<T>| mixed_norm(f, sexp, dexp).as_f64();
    let mut c1_hat = 0.0f64;
    let mut c2_hat = 0.0f64;
    let mut skipped = 0usize;
    let norms: Vec<f64> = ensemble.iter().map(&norm).collect();
    for (u, nu) in ensemble.iter().zip(&norms) {
        if *nu == 0.0 {
            skipped += 1;
            continue;
        }
        let ns = norm(&sigma_apply(sigma, u));
        c1_hat = c1_hat.max(ns * ns / (nu * nu * (1.0 + nu * nu)));
    }
    for w in ensemble.windows(2) {
        let (u, v) = (&w[0], &w[1]);
        let nd = norm(&u.sub(v));
        if nd == 0.0 {
            skipped += 1;
            continue;
        }
        let (nu, nv) = (norm(u), norm(v));
        let ns = norm(&sigma_apply(sigma, u).sub(&sigma_apply(sigma, v)));
        let growth = 1.0 + nu.powi(2) + nu.powi(4) + nv.powi(2) + nv.powi(4);
        c2_hat = c2_hat.max(ns * ns / (nd * nd * growth));
    }
    if !(c1_hat.is_finite() && c2_hat.is_finite()) {
        return Err(Error::Degenerate(format!(
            "composition constants not finite: C1 = {c1_hat}, C2 = {c2_hat}"
        )));
    }
    Ok(CompositionReport {
        c1_hat,
        c2_hat,
        skipped,
    })
}
