//! Fluctuations `Y = sqrt(p_{t_j} / p_{t_{j-1}}) - 1`, their tilted level
//! statistics, the calm-stock diagnostic and cluster detection.

mod calm;
mod cluster;
mod hist;
mod stats;

pub use calm::{calm_diagnostic, CalmConfig, CalmVerdict, EpsStatus, EpsTrajectory, Verdict};
pub use cluster::{cluster_detect, triple_distance, Cluster, ClusterSet};
pub use hist::Histogram;
#[cfg(test)]
pub(crate) use stats::std_err;
pub use stats::{compute_fluctuations, level_stats, FluctuationArray, LevelStats, StatsConfig};
