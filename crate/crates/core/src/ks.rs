//! One-sample Kolmogorov-Smirnov statistics against a possibly discontinuous cdf.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub alpha: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Asymptotic critical value `sqrt(-ln(alpha/2) / (2n))`.
pub fn critical_value(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln() / n as f64).sqrt()
}

/// Sup distance between the empirical cdf of `samples` and `cdf`, checked on
/// both sides of every sample so that atoms in the model are handled.
pub fn ks_statistic(
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    let weights = vec![1.0; samples.len()];
    weighted_ks_statistic(samples, &weights, cdf, cdf_left)
}

/// As [`ks_statistic`] for a self-normalized weighted empirical cdf.
pub fn weighted_ks_statistic(
    samples: &[f64],
    weights: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    assert_eq!(samples.len(), weights.len());
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let total: f64 = weights.iter().sum();
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let x = samples[idx[i]];
        let mut at = 0.0;
        while i < idx.len() && samples[idx[i]] == x {
            at += weights[idx[i]];
            i += 1;
        }
        d = d.max((below / total - cdf_left(x)).abs());
        below += at;
        d = d.max((below / total - cdf(x)).abs());
    }
    d
}

pub fn ks_test(
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
    alpha: f64,
) -> KsReport {
    let statistic = ks_statistic(samples, cdf, cdf_left);
    let critical = critical_value(samples.len(), alpha);
    KsReport {
        statistic,
        n: samples.len(),
        alpha,
        critical,
        pass: statistic <= critical,
    }
}
