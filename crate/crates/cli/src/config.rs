use std::path::{Path, PathBuf};

use rnlevy_core::market_data::RateSegment;
use rnlevy_core::pipeline::EstimateConfig;
use rnlevy_core::sim::SimSpec;
use rnlevy_core::{PanelMode, RateCurve};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Estimate,
    Price,
    Verify,
}

/// Constant rate or piecewise-constant segments `[t_lo, t_hi, r]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateConfig {
    Constant(f64),
    Segments { segments: Vec<[f64; 3]> },
}

impl RateConfig {
    pub fn curve(&self) -> Result<RateCurve, CliError> {
        Ok(match self {
            RateConfig::Constant(r) => RateCurve::constant(*r)?,
            RateConfig::Segments { segments } => RateCurve::piecewise(
                segments
                    .iter()
                    .map(|&[start, end, rate]| RateSegment { start, end, rate })
                    .collect(),
            )?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CallConfig {
    /// Spot at `t0`; defaults to the fitted mean at the first grid time.
    pub spot: Option<f64>,
    pub strike: Option<f64>,
    pub rate: RateConfig,
    pub t0: f64,
    /// Option life `T - t0`.
    pub expiry: f64,
    /// Total horizon volatility for closed-form calm pricing without data.
    pub sigma_h: Option<f64>,
}

impl Default for CallConfig {
    fn default() -> Self {
        CallConfig {
            spot: None,
            strike: None,
            rate: RateConfig::Constant(0.0),
            t0: 0.0,
            expiry: 1.0,
            sigma_h: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub identity_tol: f64,
    pub grid_points: usize,
    pub ks_alpha: f64,
    /// QMD step sizes in grid steps.
    pub qmd_steps: Vec<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            identity_tol: 1e-6,
            grid_points: 41,
            ks_alpha: 0.01,
            qmd_steps: vec![1, 2, 4, 8],
        }
    }
}

/// Everything a run depends on. Command-line flags are folded in before the
/// configuration is hashed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub input: Option<PathBuf>,
    /// Where the report goes; not part of the hashed configuration.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: PanelMode,
    pub force: bool,
    pub simulate: Option<SimSpec>,
    pub estimate: EstimateConfig,
    pub call: CallConfig,
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
            what: path.display().to_string(),
            msg: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Input {
            what: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}
