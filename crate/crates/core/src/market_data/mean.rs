use serde::{Deserialize, Serialize};

use super::panel::PricePanel;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanSource {
    /// Cross-path arithmetic mean at each grid time.
    EmpiricalEnsemble,
    /// `exp(a + b t)` fitted by least squares on `ln S_t`.
    ExponentialTrend,
    /// Supplied by the caller, e.g. the analytic mean of a simulated model.
    Exact,
}

/// The mean function `m(t) = E S_t` on `[t0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFunction {
    source: MeanSource,
    grid: Vec<f64>,
    values: Vec<f64>,
    /// `(a, b)` with `m(t) = exp(a + b t)` when the function is log-linear.
    trend: Option<(f64, f64)>,
}

impl MeanFunction {
    /// `m(t) = s0 * exp(mu * t)` tabulated on `grid`.
    pub fn exponential(s0: f64, mu: f64, grid: &[f64]) -> Self {
        let a = s0.ln();
        MeanFunction {
            source: MeanSource::Exact,
            grid: grid.to_vec(),
            values: grid.iter().map(|&t| s0 * (mu * t).exp()).collect(),
            trend: Some((a, mu)),
        }
    }

    /// A caller-supplied mean function tabulated on `grid`.
    pub fn from_values(grid: &[f64], values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.is_empty() {
            return Err(Error::InvalidArgument(
                "mean values must match the grid length".into(),
            ));
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("mean values must be positive".into()));
        }
        Ok(MeanFunction {
            source: MeanSource::Exact,
            grid: grid.to_vec(),
            values,
            trend: None,
        })
    }

    pub fn source(&self) -> MeanSource {
        self.source
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Values at the grid times.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_index(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Evaluates `m(t)`. Tabulated functions interpolate linearly in
    /// `ln m` and are flat outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        if let Some((a, b)) = self.trend {
            return (a + b * t).exp();
        }
        let g = &self.grid;
        if t <= g[0] {
            return self.values[0];
        }
        if t >= g[g.len() - 1] {
            return self.values[g.len() - 1];
        }
        let hi = g.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let w = (t - g[lo]) / (g[hi] - g[lo]);
        ((1.0 - w) * self.values[lo].ln() + w * self.values[hi].ln()).exp()
    }

    /// `ln(m(T) / m(t0))`, the log growth of the mean over the grid.
    pub fn ln_growth(&self) -> f64 {
        (self.values[self.values.len() - 1] / self.values[0]).ln()
    }

    /// Log growth of the mean per unit time.
    pub fn ln_growth_rate(&self) -> f64 {
        let (t0, t1) = self.horizon();
        self.ln_growth() / (t1 - t0)
    }
}

/// Estimates `m(t)` from a panel.
pub fn estimate_mean_function(panel: &PricePanel, method: MeanSource) -> Result<MeanFunction> {
    match method {
        MeanSource::EmpiricalEnsemble => Ok(ensemble_mean(panel)),
        MeanSource::ExponentialTrend => trend_fit(panel),
        MeanSource::Exact => Err(Error::InvalidArgument(
            "an exact mean function cannot be estimated; supply it".into(),
        )),
    }
}

fn ensemble_mean(panel: &PricePanel) -> MeanFunction {
    let n = panel.n_times();
    let m = panel.n_paths();
    let partials = par::map_chunks(m, par::CHUNK, |paths| {
        let mut acc = vec![0.0; n];
        for i in paths {
            for (a, s) in acc.iter_mut().zip(panel.path(i)) {
                *a += s;
            }
        }
        acc
    });
    let mut sums = vec![0.0; n];
    for part in partials {
        for (s, p) in sums.iter_mut().zip(part) {
            *s += p;
        }
    }
    let values = sums.into_iter().map(|s| s / m as f64).collect();
    MeanFunction {
        source: MeanSource::EmpiricalEnsemble,
        grid: panel.grid().to_vec(),
        values,
        trend: None,
    }
}

fn trend_fit(panel: &PricePanel) -> Result<MeanFunction> {
    let grid = panel.grid();
    let (mut n, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..panel.n_paths() {
        for (&t, &s) in grid.iter().zip(panel.path(i)) {
            let y = s.ln();
            n += 1.0;
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
        }
    }
    let den = n * stt - st * st;
    if grid.len() < 2 || den.abs() <= f64::EPSILON * n * stt.max(1.0) {
        return Err(Error::DegenerateFit(format!(
            "{} distinct time point(s)",
            grid.len()
        )));
    }
    let b = (n * sty - st * sy) / den;
    let a = (sy - b * st) / n;
    let values = grid.iter().map(|&t| (a + b * t).exp()).collect();
    Ok(MeanFunction {
        source: MeanSource::ExponentialTrend,
        grid: grid.to_vec(),
        values,
        trend: Some((a, b)),
    })
}
