use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{PanelMode, PricePanel};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimModel {
    #[default]
    Gbm,
    JumpDiffusion,
}

/// Normal law of the log jump factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpLaw {
    pub mean: f64,
    pub sd: f64,
}

impl Default for JumpLaw {
    fn default() -> Self {
        JumpLaw { mean: 0.0, sd: 0.1 }
    }
}

impl JumpLaw {
    /// `E[e^J - 1]`.
    pub fn kappa(&self) -> f64 {
        (self.mean + 0.5 * self.sd * self.sd).exp_m1()
    }
}

/// A GBM or Merton jump-diffusion with `E S_t = s0 e^{mu t}`, sampled on a
/// uniform grid over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub model: SimModel,
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub jump: JumpLaw,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            model: SimModel::Gbm,
            s0: 100.0,
            mu: 0.08,
            sigma: 0.2,
            lambda: 0.0,
            jump: JumpLaw::default(),
            horizon: 1.0,
            steps: 1024,
            paths: 20_000,
            seed: 42,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            return bad(format!("s0 = {} must be positive", self.s0));
        }
        if !(self.sigma >= 0.0) || !(self.lambda >= 0.0) || !(self.jump.sd >= 0.0) {
            return bad("sigma, lambda and jump sd must be non-negative".into());
        }
        if !self.mu.is_finite() || !self.jump.mean.is_finite() {
            return bad("drift and jump mean must be finite".into());
        }
        if self.model == SimModel::Gbm && self.lambda != 0.0 {
            return bad("gbm requires lambda = 0".into());
        }
        if !(self.horizon > 0.0) || self.steps == 0 || self.paths == 0 {
            return bad("horizon, steps and paths must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.steps)
    }
}

pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| horizon * i as f64 / steps as f64)
        .collect()
}

/// Exact-increment simulation. Path `i` draws from its own ChaCha stream
/// `(seed, i)`, so panels are reproducible and independent of threading.
/// Jump draws are skipped entirely when `lambda = 0`.
pub fn gen_panel(spec: &SimSpec) -> Result<PricePanel> {
    spec.validate()?;
    let grid = spec.grid();
    let n = spec.steps;
    let dt = spec.horizon / n as f64;
    let comp = if spec.lambda > 0.0 {
        spec.lambda * spec.jump.kappa()
    } else {
        0.0
    };
    let drift = (spec.mu - 0.5 * spec.sigma * spec.sigma - comp) * dt;
    let vol = spec.sigma * dt.sqrt();
    let poisson = (spec.lambda > 0.0)
        .then(|| Poisson::new(spec.lambda * dt).expect("positive intensity"));

    let chunks = par::map_chunks(spec.paths, par::CHUNK, |paths| {
        let mut out = Vec::with_capacity(paths.len() * (n + 1));
        for i in paths {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let mut log = 0.0;
            out.push(spec.s0);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                log += drift + vol * z;
                if let Some(p) = &poisson {
                    let count: f64 = p.sample(&mut rng);
                    for _ in 0..count as u64 {
                        let e: f64 = rng.sample(StandardNormal);
                        log += spec.jump.mean + spec.jump.sd * e;
                    }
                }
                out.push(spec.s0 * log.exp());
            }
        }
        out
    });
    let prices: Vec<f64> = chunks.into_iter().flatten().collect();
    let width = (spec.paths - 1).to_string().len();
    let ids = (0..spec.paths).map(|i| format!("p{i:0width$}")).collect();
    PricePanel::from_grid(grid, ids, prices, PanelMode::Ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(model: SimModel, lambda: f64) -> SimSpec {
        SimSpec {
            model,
            lambda,
            steps: 16,
            paths: 300,
            seed: 7,
            ..SimSpec::default()
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let a = gen_panel(&small(SimModel::Gbm, 0.0)).unwrap();
        let b = gen_panel(&small(SimModel::Gbm, 0.0)).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        let mut other = small(SimModel::Gbm, 0.0);
        other.seed = 8;
        assert_ne!(gen_panel(&other).unwrap(), a);
    }

    #[test]
    fn zero_intensity_jump_model_is_gbm() {
        let a = gen_panel(&small(SimModel::Gbm, 0.0)).unwrap();
        let b = gen_panel(&small(SimModel::JumpDiffusion, 0.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_without_noise() {
        let spec = SimSpec {
            sigma: 0.0,
            ..small(SimModel::Gbm, 0.0)
        };
        let p = gen_panel(&spec).unwrap();
        for (t, &time) in p.grid().iter().enumerate() {
            let exact = 100.0 * (0.08 * time).exp();
            for i in 0..p.n_paths() {
                assert!((p.price(i, t) / exact - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gbm_terminal_mean() {
        let spec = SimSpec {
            steps: 4,
            paths: 20_000,
            ..SimSpec::default()
        };
        let p = gen_panel(&spec).unwrap();
        let r: Vec<f64> = (0..p.n_paths()).map(|i| p.price(i, 4) / 100.0).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let se = crate::fluctuation::std_err(&r);
        assert!((mean - 0.08f64.exp()).abs() < 3.0 * se);
    }

    #[test]
    fn jump_model_terminal_mean() {
        let spec = SimSpec {
            model: SimModel::JumpDiffusion,
            lambda: 5.0,
            steps: 8,
            paths: 20_000,
            ..SimSpec::default()
        };
        let p = gen_panel(&spec).unwrap();
        let r: Vec<f64> = (0..p.n_paths()).map(|i| p.price(i, 8) / 100.0).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let se = crate::fluctuation::std_err(&r);
        assert!((mean - 0.08f64.exp()).abs() < 3.5 * se);
    }

    #[test]
    fn gbm_rejects_jumps() {
        assert!(small(SimModel::Gbm, 1.0).validate().is_err());
    }
}
