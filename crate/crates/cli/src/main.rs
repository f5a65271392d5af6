//! Batch driver for the nullwave experiments.
//!
//! Every invocation reads one JSON run configuration (or the built-in
//! default), applies flag and environment overrides, executes a single
//! subcommand, and leaves a self-describing artifact directory behind:
//! CSV tables, raw field dumps, the effective `config.json`, and a
//! `manifest.json` with the config hash, seed, versions, and wall time.
//! A rerun with the same configuration and seed reproduces every numeric
//! artifact byte for byte, for any worker count.

mod artifacts;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nullwave::config::RunConfig;
use nullwave::{Error, Result};

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  1  a reported check or acceptance criterion failed
  2  invalid configuration (schema, ranges, missing seed)
  3  input/output failure
  4  grid or window violation
  5  degenerate numerical regime (factorization, ensemble, zero norm)
  6  solver termination (divergence, scale cap, chart mismatch)

Environment:
  Each global flag can also be set through its NULLWAVE_* variable
  (NULLWAVE_CONFIG, NULLWAVE_OUT, NULLWAVE_SEED, NULLWAVE_WORKERS,
  NULLWAVE_ENSEMBLE); explicit flags win.";

#[derive(Parser)]
#[command(name = "nullwave", version, after_help = AFTER_HELP)]
#[command(about = "Desk-scale runs of the rough-sheet wave constructions")]
struct Cli {
    /// JSON run configuration; defaults to the built-in configuration.
    #[arg(long, global = true, env = "NULLWAVE_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Artifact directory; defaults to the configuration's `output.dir`.
    #[arg(long, global = true, env = "NULLWAVE_OUT", value_name = "DIR")]
    out: Option<PathBuf>,

    /// Base seed, overriding the configuration's `base_seed`.
    #[arg(long, global = true, env = "NULLWAVE_SEED", value_name = "U64")]
    seed: Option<u64>,

    /// Threads for ensemble subcommands; never changes results.
    #[arg(long, global = true, env = "NULLWAVE_WORKERS", value_name = "K", default_value_t = 1)]
    workers: usize,

    /// Ensemble size, overriding the configuration's `norms.ensemble`.
    #[arg(long, global = true, env = "NULLWAVE_ENSEMBLE", value_name = "M")]
    ensemble: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample an ensemble of fractional sheets and tabulate increment laws.
    SampleFbs,
    /// Measure the frozen norm-equivalence bands on random fields.
    VerifyNorms,
    /// Measure the inverse-wave gain ratio on sampled sheet derivatives.
    VerifyInverse,
    /// Measure the diffusion-coefficient composition constants.
    VerifyComposition,
    /// Run one Picard solve and record trace and fixed point.
    Solve,
    /// Solve on two overlapping charts and check their agreement.
    Glue,
    /// Run the full acceptance suite.
    Accept {
        /// Shrink ensembles and resolutions for a fast smoke pass.
        #[arg(long)]
        quick: bool,
    },
}

/// Maps error classes to stable process exit codes (see `AFTER_HELP`).
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) => 2,
        Error::Io(_) => 3,
        Error::Grid(_) | Error::OutOfWindow(_) => 4,
        Error::Regime(_) | Error::Cholesky { .. } | Error::EnsembleTooSmall { .. } | Error::Degenerate(_) => 5,
        Error::Diverged { .. } | Error::LambdaCap { .. } | Error::Glue(_) => 6,
    }
}

/// Loads the configuration and folds in the seed and ensemble overrides.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.base_seed = Some(seed);
    }
    if let Some(m) = cli.ensemble {
        cfg.norms.ensemble = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let cfg = effective_config(cli)?;
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let w = cli.workers;
    match &cli.command {
        Cmd::SampleFbs => runs::sample_fbs(&cfg, &dir, w),
        Cmd::VerifyNorms => runs::verify_norms(&cfg, &dir, w),
        Cmd::VerifyInverse => runs::verify_inverse(&cfg, &dir, w),
        Cmd::VerifyComposition => runs::verify_composition(&cfg, &dir, w),
        Cmd::Solve => runs::solve(&cfg, &dir, w),
        Cmd::Glue => runs::glue(&cfg, &dir, w),
        Cmd::Accept { quick } => runs::accept(&cfg, &dir, w, *quick),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("nullwave").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn every_error_class_has_its_documented_code() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&serde_json::from_str::<RunConfig>("{").unwrap_err().into()), 2);
        assert_eq!(exit_code(&std::io::Error::other("x").into()), 3);
        assert_eq!(exit_code(&Error::Grid("x".into())), 4);
        assert_eq!(exit_code(&Error::OutOfWindow("x".into())), 4);
        assert_eq!(
            exit_code(&Error::Cholesky { axis: "alpha", hurst: 0.9, detail: "x".into() }),
            5
        );
        assert_eq!(exit_code(&Error::Diverged { iterations: 3, last_factor: 2.0 }), 6);
        assert_eq!(exit_code(&Error::LambdaCap { cap: 8.0, last_factor: 2.0 }), 6);
        assert_eq!(exit_code(&Error::Glue("x".into())), 6);
    }

    #[test]
    fn seed_and_ensemble_flags_override_the_configuration() {
        let cli = parse(&["--seed", "9", "--ensemble", "7", "accept"]);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.base_seed, Some(9));
        assert_eq!(cfg.norms.ensemble, 7);

        let cli = parse(&["accept"]);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.base_seed, RunConfig::default().base_seed);
    }

    #[test]
    fn flags_are_accepted_after_the_subcommand() {
        let cli = parse(&["solve", "--seed", "4", "--workers", "3"]);
        assert_eq!(cli.seed, Some(4));
        assert_eq!(cli.workers, 3);
    }
}
