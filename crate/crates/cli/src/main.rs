//! `rnlevy`: batch driver for simulation, estimation, pricing and
//! verification. Reports are deterministic JSON; see `docs/report-schema.md`.

// `!(x >= 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rnlevy_core::PanelMode;

use config::{Command, RateConfig, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "rnlevy", version, about = "Risk-neutral law extraction and call pricing from price paths")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Generate a synthetic price panel as CSV.
    Simulate,
    /// Estimate the Levy triple, calm verdict and neutrality residual.
    Estimate,
    /// Price a European call.
    Price,
    /// Check the measure identities and the closed-form diagnostics.
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Estimate => Command::Estimate,
            Sub::Price => Command::Price,
            Sub::Verify => Command::Verify,
        }
    }
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Price panel CSV with header `path_id,time,price`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for simulation and bootstrap resampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Panel mode: ensemble or single.
    #[arg(long, global = true)]
    mode: Option<PanelMode>,
    /// Number of partition levels.
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Call strike.
    #[arg(long, global = true)]
    strike: Option<f64>,
    /// Constant short rate.
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Option life in years.
    #[arg(long, global = true)]
    expiry: Option<f64>,
    /// Spot price at t0; defaults to the panel mean at t0.
    #[arg(long, global = true)]
    spot: Option<f64>,
    /// Neutrality tolerance; defaults to max(2 s.e., 1e-3).
    #[arg(long = "tol-neutrality", global = true)]
    tol_neutrality: Option<f64>,
    /// Price even when the neutrality verdict is negative.
    #[arg(long, global = true)]
    force: bool,
}

fn effective_config(command: Command, flags: Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Input {
                what: "config".into(),
                msg: format!("config is for `{c:?}`, not `{command:?}`").to_lowercase(),
            });
        }
    }
    cfg.command = Some(command);
    cfg.input = flags.input.or(cfg.input);
    cfg.output = flags.output.or(cfg.output);
    if let Some(seed) = flags.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        cfg.estimate.bootstrap_seed = seed;
    }
    if let Some(mode) = flags.mode {
        cfg.mode = mode;
    }
    if let Some(levels) = flags.levels {
        cfg.estimate.levels = levels;
    }
    if let Some(t) = flags.tol_neutrality {
        cfg.estimate.tol_neutrality = Some(t);
    }
    if let Some(x) = flags.strike {
        cfg.call.strike = Some(x);
    }
    if let Some(r) = flags.rate {
        cfg.call.rate = RateConfig::Constant(r);
    }
    if let Some(t) = flags.expiry {
        cfg.call.expiry = t;
    }
    if let Some(s) = flags.spot {
        cfg.call.spot = Some(s);
    }
    cfg.force |= flags.force;
    if command == Command::Simulate && cfg.simulate.is_none() {
        cfg.simulate = Some(Default::default());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = effective_config(command, cli.flags).and_then(|cfg| commands::run(command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rnlevy: {e}");
            e.exit_code()
        }
    }
}
