use serde::{Deserialize, Serialize};

use super::stats::LevelStats;

/// Settings for the calm-stock diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalmConfig {
    /// Tail threshold as a fraction of the finest-level `s2`.
    pub threshold_frac: f64,
    /// Absolute tail threshold; overrides `threshold_frac` when set.
    pub threshold: Option<f64>,
    /// An `eps` is resolvable at the finest level only if it is at least
    /// this many root-mean per-interval second moments, `sqrt(s2 / k)`.
    pub resolution: f64,
    /// A tail trajectory whose last step shrinks by less than this factor
    /// is considered stable.
    pub stable_ratio: f64,
}

impl Default for CalmConfig {
    fn default() -> Self {
        CalmConfig {
            threshold_frac: 0.02,
            threshold: None,
            resolution: 3.5,
            stable_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Calm,
    NotCalm,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsStatus {
    /// Tail shrinks across levels and ends below the threshold.
    Vanishing,
    /// Tail stays above the threshold without shrinking.
    Stable,
    Undecided,
    /// Below the finest level's resolution; excluded from the verdict.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsTrajectory {
    pub eps: f64,
    /// `tail(eps)` per level, coarsest first.
    pub tails: Vec<f64>,
    pub status: EpsStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalmVerdict {
    pub verdict: Verdict,
    pub threshold: f64,
    pub resolution_scale: f64,
    pub trajectories: Vec<EpsTrajectory>,
    pub note: Option<String>,
}

impl CalmVerdict {
    /// The cutoff separating diffuse from atomic histogram mass: the smallest
    /// resolvable `eps` whose finest tail is below the threshold, else the
    /// largest resolvable `eps`, else the largest `eps` overall.
    pub fn diffuse_cutoff(&self) -> f64 {
        let resolvable = || {
            self.trajectories
                .iter()
                .filter(|t| t.status != EpsStatus::Unresolved)
        };
        resolvable()
            .filter(|t| self.below(*t.tails.last().unwrap()))
            .map(|t| t.eps)
            .reduce(f64::min)
            .or_else(|| resolvable().map(|t| t.eps).reduce(f64::max))
            .or_else(|| self.trajectories.iter().map(|t| t.eps).reduce(f64::max))
            .unwrap_or(0.0)
    }

    fn below(&self, tail: f64) -> bool {
        tail == 0.0 || tail < self.threshold
    }
}

/// Classifies the tail trajectories `tail(eps)` across refining levels.
///
/// The stock is calm when every resolvable `eps` has a tail that shrinks
/// across levels and ends below the threshold; not calm when some resolvable
/// `eps` keeps a tail above the threshold that no longer shrinks.
pub fn calm_diagnostic(stats_by_level: &[LevelStats], cfg: &CalmConfig) -> CalmVerdict {
    let inconclusive = |note: &str| CalmVerdict {
        verdict: Verdict::Inconclusive,
        threshold: 0.0,
        resolution_scale: 0.0,
        trajectories: Vec::new(),
        note: Some(note.to_string()),
    };
    if stats_by_level.len() < 2 {
        return inconclusive("need at least 2 levels");
    }
    if stats_by_level.windows(2).any(|w| w[1].mesh >= w[0].mesh) {
        return inconclusive("levels must have decreasing mesh");
    }
    let finest = stats_by_level.last().unwrap();
    let threshold = cfg.threshold.unwrap_or(cfg.threshold_frac * finest.s2);
    let resolution_scale = cfg.resolution * (finest.s2 / finest.k as f64).sqrt();

    let mut out = CalmVerdict {
        verdict: Verdict::Inconclusive,
        threshold,
        resolution_scale,
        trajectories: Vec::new(),
        note: None,
    };
    for &(eps, _) in &finest.tail {
        let tails: Vec<f64> = stats_by_level
            .iter()
            .map(|s| s.tail_at(eps).unwrap_or(f64::NAN))
            .collect();
        let status = if eps < resolution_scale {
            EpsStatus::Unresolved
        } else {
            classify(&tails, threshold, cfg.stable_ratio, |t| out.below(t))
        };
        out.trajectories.push(EpsTrajectory { eps, tails, status });
    }

    let resolved: Vec<EpsStatus> = out
        .trajectories
        .iter()
        .map(|t| t.status)
        .filter(|s| *s != EpsStatus::Unresolved)
        .collect();
    out.verdict = if resolved.contains(&EpsStatus::Stable) {
        Verdict::NotCalm
    } else if !resolved.is_empty() && resolved.iter().all(|s| *s == EpsStatus::Vanishing) {
        Verdict::Calm
    } else {
        if resolved.is_empty() {
            out.note = Some("no eps in the grid is resolvable at the finest mesh".into());
        }
        Verdict::Inconclusive
    };
    out
}

fn classify(
    tails: &[f64],
    threshold: f64,
    stable_ratio: f64,
    below: impl Fn(f64) -> bool,
) -> EpsStatus {
    let last = *tails.last().unwrap();
    let prev = tails[tails.len() - 2];
    // Values under the threshold count as zero for monotonicity.
    let clip = |t: f64| if below(t) { 0.0 } else { t };
    let shrinking = tails.windows(2).all(|w| clip(w[1]) <= clip(w[0]));
    if below(last) && shrinking {
        EpsStatus::Vanishing
    } else if last > threshold && prev > 0.0 && last / prev >= stable_ratio {
        EpsStatus::Stable
    } else {
        EpsStatus::Undecided
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::{FluctuationArray, StatsConfig};

    fn level(k: usize, mesh: f64, s2: f64, tails: &[f64]) -> LevelStats {
        let arr = FluctuationArray::from_values(1, k, mesh, vec![0.0; k], vec![1.0; k]).unwrap();
        let mut s = LevelStats::from_array(&arr, &StatsConfig::default());
        s.s2 = s2;
        s.tail = [0.005, 0.01, 0.02, 0.05]
            .iter()
            .zip(tails)
            .map(|(&e, &t)| (e, t))
            .collect();
        s
    }

    #[test]
    fn zero_fluctuations_are_calm() {
        let levels = vec![
            level(4, 0.25, 0.0, &[0.0; 4]),
            level(8, 0.125, 0.0, &[0.0; 4]),
        ];
        let v = calm_diagnostic(&levels, &CalmConfig::default());
        assert_eq!(v.verdict, Verdict::Calm);
    }

    #[test]
    fn stable_tail_is_not_calm() {
        let levels = vec![
            level(64, 1.0 / 64.0, 0.02, &[0.02, 0.015, 0.01, 0.004]),
            level(256, 1.0 / 256.0, 0.02, &[0.015, 0.011, 0.009, 0.004]),
            level(1024, 1.0 / 1024.0, 0.02, &[0.012, 0.01, 0.009, 0.004]),
        ];
        let v = calm_diagnostic(&levels, &CalmConfig::default());
        assert_eq!(v.verdict, Verdict::NotCalm);
    }

    #[test]
    fn shrinking_tail_above_threshold_is_inconclusive() {
        let levels = vec![
            level(64, 1.0 / 64.0, 0.01, &[0.01, 0.01, 0.009, 0.008]),
            level(256, 1.0 / 256.0, 0.01, &[0.01, 0.009, 0.006, 0.003]),
        ];
        let v = calm_diagnostic(&levels, &CalmConfig::default());
        assert_eq!(v.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn single_level_is_inconclusive() {
        let v = calm_diagnostic(&[level(4, 0.25, 0.0, &[0.0; 4])], &CalmConfig::default());
        assert_eq!(v.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn calm_implies_finest_tails_below_threshold() {
        let levels = vec![
            level(64, 1.0 / 64.0, 0.01, &[0.009, 0.007, 0.0046, 1e-5]),
            level(256, 1.0 / 256.0, 0.01, &[0.008, 0.004, 1.9e-4, 0.0]),
            level(1024, 1.0 / 1024.0, 0.01, &[0.0046, 1.9e-4, 0.0, 0.0]),
        ];
        let v = calm_diagnostic(&levels, &CalmConfig::default());
        assert_eq!(v.verdict, Verdict::Calm);
        for t in v.trajectories.iter().filter(|t| t.status != EpsStatus::Unresolved) {
            assert!(*t.tails.last().unwrap() < v.threshold || *t.tails.last().unwrap() == 0.0);
        }
        assert_eq!(v.diffuse_cutoff(), 0.02);
    }
}
