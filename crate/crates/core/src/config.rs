//! Run configuration: one JSON document drives every subcommand.
//!
//! The document has fixed sections `{grid, hurst, norms, christoffel, sigma,
//! solver, output}` plus a `base_seed`; every module default can be
//! overridden, unknown keys are rejected, and the whole document is validated
//! before any computation starts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbs::HurstPair;
use crate::geometry::{ChristoffelEntry, ChristoffelTable, DiffusionCoeff, SigmaKind};
use crate::grid::Grid2;
use crate::num::Real;
use crate::solver::SolverConfig;

/// Carrier grid: symmetric interval `[-half_width, half_width)` with `n`
/// nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: 16.0,
            n: 128,
        }
    }
}

/// Exponents and ensemble shape for the norm-equivalence runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub s: f64,
    pub delta: f64,
    /// Highest dyadic band populated by the random band-limited ensemble.
    pub band: usize,
    /// Ensemble size for the equivalence-constant measurements.
    pub ensemble: usize,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            s: 0.8,
            delta: 0.8,
            band: 6,
            ensemble: 100,
        }
    }
}

/// Which Christoffel table to run with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChristoffelKind {
    /// All symbols zero.
    Flat,
    /// The pinned degree-2 scenario table scaled by `amplitude`.
    SmallPolynomial,
    /// Explicit monomial `entries` up to `degree`.
    Entries,
}

/// Christoffel table selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChristoffelSection {
    pub kind: ChristoffelKind,
    pub amplitude: f64,
    pub degree: usize,
    pub entries: Vec<ChristoffelEntry>,
}

impl Default for ChristoffelSection {
    fn default() -> Self {
        Self {
            kind: ChristoffelKind::SmallPolynomial,
            amplitude: 0.1,
            degree: 2,
            entries: Vec::new(),
        }
    }
}

/// Output routing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Artifact directory; created if missing.
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
        }
    }
}

/// The full run configuration.
///
/// The sheet law is stated once, in `hurst`; the `solver` section's own
/// `hurst` subfield is overwritten from it by [`RunConfig::solver_config`],
/// so a document never has to repeat the pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub hurst: HurstPair,
    pub norms: NormsSection,
    pub christoffel: ChristoffelSection,
    pub sigma: DiffusionCoeff,
    pub solver: SolverConfig,
    pub output: OutputSection,
    /// Root of all per-task seeds; mandatory for stochastic subcommands.
    pub base_seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSection::default(),
            hurst: HurstPair { h1: 0.85, h2: 0.85 },
            norms: NormsSection::default(),
            christoffel: ChristoffelSection::default(),
            sigma: DiffusionCoeff::new(SigmaKind::SinSin, 0.1),
            solver: SolverConfig::default(),
            output: OutputSection::default(),
            base_seed: Some(42),
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a JSON file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Pretty JSON echo of the configuration (for manifests).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Schema-level validation of every section; builders below re-validate
    /// on construction, this front-loads the errors before any computation.
    pub fn validate(&self) -> Result<()> {
        self.grid::<f64>()?;
        self.hurst.validate()?;
        let n = &self.norms;
        for (name, v) in [("norms.s", n.s), ("norms.delta", n.delta)] {
            if !(v.is_finite() && (0.5..1.5).contains(&v)) {
                return Err(Error::Config(format!("{name} = {v} outside [0.5, 1.5)")));
            }
        }
        if n.band < 1 {
            return Err(Error::Config("norms.band must be >= 1".into()));
        }
        if n.ensemble < 2 {
            return Err(Error::Config("norms.ensemble must be >= 2".into()));
        }
        if !self.christoffel.amplitude.is_finite() {
            return Err(Error::Config("christoffel.amplitude must be finite".into()));
        }
        self.table::<f64>()?;
        if !self.sigma.scale.is_finite() {
            return Err(Error::Config("sigma.scale must be finite".into()));
        }
        self.solver_config()?.validate()?;
        if self.output.dir.is_empty() {
            return Err(Error::Config("output.dir must be nonempty".into()));
        }
        Ok(())
    }

    /// The carrier grid.
    pub fn grid<T: Real>(&self) -> Result<Grid2<T>> {
        Grid2::new(T::of(self.grid.half_width), self.grid.n)
    }

    /// The configured Christoffel table.
    pub fn table<T: Real>(&self) -> Result<ChristoffelTable<T>> {
        match self.christoffel.kind {
            ChristoffelKind::Flat => Ok(ChristoffelTable::flat()),
            ChristoffelKind::SmallPolynomial => {
                Ok(ChristoffelTable::small_polynomial(self.christoffel.amplitude))
            }
            ChristoffelKind::Entries => {
                ChristoffelTable::new(self.christoffel.degree, &self.christoffel.entries)
            }
        }
    }

    /// The solver configuration with the sheet law stamped in from the
    /// top-level `hurst` section.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        self.hurst.validate()?;
        Ok(SolverConfig {
            hurst: self.hurst,
            ..self.solver
        })
    }

    /// The base seed, which stochastic subcommands must have.
    pub fn require_seed(&self) -> Result<u64> {
        self.base_seed.ok_or_else(|| {
            Error::Config("base_seed is mandatory for stochastic subcommands".into())
        })
    }
}
