use std::fmt;

use serde::Serialize;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-positive price {price} for path `{path_id}` at t={time}")]
    PositivityViolation {
        path_id: String,
        time: f64,
        price: f64,
    },
    #[error("path `{path_id}` is not on the common ensemble grid")]
    GridMismatch { path_id: String },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("degenerate trend fit: {0}")]
    DegenerateFit(String),
    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),
    #[error("rate curve does not cover [{from}, {to}]")]
    CoverageGap { from: f64, to: f64 },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("identity violation: {check} deviates by {deviation:e} (tol {tol:e})")]
    IdentityViolation {
        check: &'static str,
        deviation: f64,
        tol: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Non-fatal conditions recorded alongside a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Tilted expectations replaced by realized sums over a single path.
    SinglePathTilt,
    /// Mean function fitted as an exponential trend on one path.
    SinglePathTrend,
    /// A negative variance estimate was clamped to zero.
    NegativeVarianceClamped { raw: f64 },
    /// A histogram atom at or below -1 was folded into the diffuse part.
    AtomBelowSupport { y: f64, mass: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::SinglePathTilt => {
                write!(f, "single path: tilted expectations are realized sums")
            }
            Warning::SinglePathTrend => {
                write!(f, "single path: mean function is a fitted exponential trend (heuristic)")
            }
            Warning::NegativeVarianceClamped { raw } => {
                write!(f, "negative variance {raw:e} clamped to 0")
            }
            Warning::AtomBelowSupport { y, mass } => {
                write!(f, "atom at y={y} (mass {mass:e}) folded into diffuse part")
            }
        }
    }
}
