use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::{level_stats, StatsConfig};
use crate::ks::{ks_test, KsReport};
use crate::market_data::{DensityPanel, Level, PartitionLadder};
use crate::measure::IdLaw;
use crate::par;

/// `E_tilt Y²` over an interval of length `delta` for a GBM with volatility
/// `sigma`: `2 (1 - e^{-sigma² delta / 8})`.
pub fn gbm_interval_closed_form(sigma: f64, delta: f64) -> f64 {
    -2.0 * (-0.125 * sigma * sigma * delta).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmLevelCheck {
    pub k: usize,
    pub mesh: f64,
    pub interval_empirical: Vec<f64>,
    pub interval_se: Vec<f64>,
    pub interval_closed_form: Vec<f64>,
    /// Mean of `|empirical - closed form|` over intervals.
    pub mean_abs_deviation: f64,
    /// Intervals outside `band` standard errors.
    pub misses: usize,
    pub s2: f64,
    pub s2_se: f64,
    /// `Σ_j 2 (1 - e^{-sigma² delta_j / 8})`.
    pub s2_closed_form: f64,
    pub s2_z_closed_form: f64,
    pub s2_z_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmCheckReport {
    pub sigma: f64,
    /// `0.25 sigma² (T - t0)`.
    pub s2_target: f64,
    pub band: f64,
    pub levels: Vec<GbmLevelCheck>,
}

impl GbmCheckReport {
    /// Every level's `S2` inside the band around the target, and at most
    /// `max_miss_frac` of intervals outside it.
    pub fn within_band(&self, max_miss_frac: f64) -> bool {
        self.levels.iter().all(|l| {
            l.s2_z_target.abs() <= self.band
                && l.s2_z_closed_form.abs() <= self.band
                && l.misses as f64 <= max_miss_frac * l.k as f64
        })
    }
}

/// Compares tilted second moments of a GBM panel with their closed forms.
pub fn gbm_theory_check(
    dp: &DensityPanel<'_>,
    ladder: &PartitionLadder,
    sigma: f64,
    cfg: &StatsConfig,
) -> GbmCheckReport {
    let grid = dp.grid();
    let band = 3.0;
    let levels: Vec<GbmLevelCheck> = ladder
        .levels
        .iter()
        .map(|level| {
            let stats = level_stats(dp, level, cfg);
            let cf: Vec<f64> = level
                .indices
                .windows(2)
                .map(|w| gbm_interval_closed_form(sigma, grid[w[1]] - grid[w[0]]))
                .collect();
            let mut misses = 0;
            let mut abs_dev = 0.0;
            for ((&e, &se), &c) in stats.interval_mean_y2.iter().zip(&stats.interval_se_y2).zip(&cf) {
                abs_dev += (e - c).abs();
                if (e - c).abs() > band * se {
                    misses += 1;
                }
            }
            let s2_closed_form: f64 = cf.iter().sum();
            let s2_se = stats.s2_se();
            let target = 0.25 * sigma * sigma * (grid[*level.indices.last().unwrap()] - grid[level.indices[0]]);
            let z = |x: f64| if s2_se > 0.0 { (stats.s2 - x) / s2_se } else if stats.s2 == x { 0.0 } else { f64::INFINITY };
            GbmLevelCheck {
                k: level.k(),
                mesh: level.mesh,
                mean_abs_deviation: abs_dev / level.k() as f64,
                misses,
                s2: stats.s2,
                s2_se,
                s2_closed_form,
                s2_z_closed_form: z(s2_closed_form),
                s2_z_target: z(target),
                interval_empirical: stats.interval_mean_y2,
                interval_se: stats.interval_se_y2,
                interval_closed_form: cf,
            }
        })
        .collect();
    let span = grid[grid.len() - 1] - grid[0];
    GbmCheckReport {
        sigma,
        s2_target: 0.25 * sigma * sigma * span,
        band,
        levels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QmdVerdict {
    QmdPlausible,
    /// Differentiability in quadratic mean fails; convergence may still hold
    /// by direct computation.
    QmdFails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmdReport {
    /// `(delta, sup_t R(t, delta))`.
    pub sup_ratio: Vec<(f64, f64)>,
    /// Log-log slope of `sup_t R` against `delta`.
    pub slope: f64,
    pub verdict: QmdVerdict,
}

/// Slope below which `sup_t R` is judged to blow up as `delta` shrinks.
pub const QMD_SLOPE_LIMIT: f64 = -0.5;

/// `R(t, delta) = E[(sqrt p(t + delta) - sqrt p(t))²] / delta²` on a uniform
/// grid, maximized over `t`.
pub fn qmd_diagnostic(dp: &DensityPanel<'_>, deltas: &[f64]) -> Result<QmdReport> {
    let grid = dp.grid();
    let n = grid.len();
    let dt = grid[1] - grid[0];
    if grid.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidArgument("qmd diagnostic needs a uniform grid".into()));
    }
    if deltas.len() < 2 {
        return Err(Error::InvalidArgument("qmd diagnostic needs at least two deltas".into()));
    }
    let mut sup_ratio = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let step = (delta / dt).round() as usize;
        if step == 0 || step >= n || ((step as f64 * dt) - delta).abs() > 1e-9 * delta {
            return Err(Error::InvalidArgument(format!(
                "delta {delta} is not a multiple of the grid step {dt}"
            )));
        }
        let m = n - step;
        let partial = par::map_chunks(dp.n_paths(), par::CHUNK, |paths| {
            let mut acc = vec![0.0; m];
            for i in paths {
                for (t, a) in acc.iter_mut().enumerate() {
                    let d = dp.density(i, t + step).sqrt() - dp.density(i, t).sqrt();
                    *a += d * d;
                }
            }
            acc
        });
        let mut total = vec![0.0; m];
        for p in partial {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        let scale = 1.0 / (dp.n_paths() as f64 * delta * delta);
        let sup = total.iter().fold(0.0f64, |a, &b| a.max(b * scale));
        sup_ratio.push((delta, sup));
    }
    let slope = if sup_ratio.iter().all(|&(_, r)| r <= 0.0) {
        0.0
    } else {
        let pts: Vec<(f64, f64)> = sup_ratio
            .iter()
            .map(|&(d, r)| (d.ln(), r.max(f64::MIN_POSITIVE).ln()))
            .collect();
        regression_slope(&pts)
    };
    let verdict = if slope < QMD_SLOPE_LIMIT {
        QmdVerdict::QmdFails
    } else {
        QmdVerdict::QmdPlausible
    };
    Ok(QmdReport {
        sup_ratio,
        slope,
        verdict,
    })
}

pub(crate) fn regression_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// KS test of the realized `ln(p_T / p_{t0})` across paths against `law`.
pub fn lambda_distribution_check(dp: &DensityPanel<'_>, law: &IdLaw, alpha: f64) -> KsReport {
    let samples = dp.log_ratio_endpoints();
    ks_test(&samples, |v| law.cdf(v), |v| law.cdf_left(v), alpha)
}

/// Draws `Λ = Σ_j ln(p_{t_j} / p_{t_{j-1}})` under the product of the
/// per-interval trader measures: for each interval, a path is picked with
/// probability proportional to its density at the interval start,
/// independently across intervals. Interval `j` uses ChaCha stream `j`.
pub fn trader_sample_lambda(
    dp: &DensityPanel<'_>,
    level: &Level,
    draws: usize,
    seed: u64,
) -> Vec<f64> {
    let m = dp.n_paths();
    let idx = &level.indices;
    let per_interval = par::map_indexed(level.k(), |j| {
        let mut cum = Vec::with_capacity(m);
        let mut total = 0.0;
        for i in 0..m {
            total += dp.density(i, idx[j]);
            cum.push(total);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        (0..draws)
            .map(|_| {
                let u = rng.gen::<f64>() * total;
                let i = cum.partition_point(|&c| c <= u).min(m - 1);
                (dp.density(i, idx[j + 1]) / dp.density(i, idx[j])).ln()
            })
            .collect::<Vec<f64>>()
    });
    let mut lambda = vec![0.0; draws];
    for inc in per_interval {
        for (l, x) in lambda.iter_mut().zip(inc) {
            *l += x;
        }
    }
    lambda
}
