use serde::{Deserialize, Serialize};

use super::hist::Histogram;
use crate::error::Warning;
use crate::market_data::{DensityPanel, Level, PanelMode};
use crate::par;

/// Threshold grids and histogram resolution for level statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub eps_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub bins_per_unit: u32,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            eps_grid: vec![0.005, 0.01, 0.02, 0.05],
            tau_grid: vec![0.01, 0.02, 0.05],
            bins_per_unit: 200,
        }
    }
}

/// Fluctuations of one level, path-major: entry `i * k + j` is interval `j`
/// of path `i`. `w` holds the tilt weight `p_{t_{j-1}}` of each entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationArray {
    pub k: usize,
    pub mesh: f64,
    pub n_paths: usize,
    pub mode: PanelMode,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl FluctuationArray {
    pub fn from_values(
        n_paths: usize,
        k: usize,
        mesh: f64,
        y: Vec<f64>,
        w: Vec<f64>,
    ) -> crate::Result<Self> {
        if y.len() != n_paths * k || w.len() != y.len() || n_paths == 0 || k == 0 {
            return Err(crate::Error::InvalidArgument(
                "fluctuation array dimensions must be paths x intervals".into(),
            ));
        }
        if let Some(bad) = y.iter().find(|&&v| !(v > -1.0)) {
            return Err(crate::Error::InvalidArgument(format!(
                "fluctuation {bad} is not above -1"
            )));
        }
        let mode = if n_paths == 1 {
            PanelMode::SinglePath
        } else {
            PanelMode::Ensemble
        };
        Ok(FluctuationArray {
            k,
            mesh,
            n_paths,
            mode,
            y,
            w,
        })
    }
}

/// Tilted statistics of one partition level.
///
/// Every `E` below is the tilted expectation under `p_{t_{j-1}} dP`,
/// estimated as `(1/M) Σ_paths p_{t_{j-1}} f(Y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub k: usize,
    pub mesh: f64,
    pub n_paths: usize,
    /// `Σ_j E Y`.
    pub s1: f64,
    /// `Σ_j E Y²`.
    pub s2: f64,
    /// `(tau, Σ_j E[Y² ; |Y| <= tau])`.
    pub s2_trunc: Vec<(f64, f64)>,
    /// `(eps, Σ_j E[Y² ; |Y| > eps])`.
    pub tail: Vec<(f64, f64)>,
    pub hist: Histogram,
    /// `max_j E Y²`.
    pub max_term: f64,
    #[serde(skip)]
    pub interval_mean_y: Vec<f64>,
    #[serde(skip)]
    pub interval_mean_y2: Vec<f64>,
    /// Monte Carlo standard error of each `E Y²`.
    #[serde(skip)]
    pub interval_se_y2: Vec<f64>,
    /// Per-path `Σ_j p_{t_{j-1}} Y`; their mean is `s1`.
    #[serde(skip)]
    pub path_s1: Vec<f64>,
    /// Per-path `Σ_j p_{t_{j-1}} Y²`; their mean is `s2`.
    #[serde(skip)]
    pub path_s2: Vec<f64>,
    pub warnings: Vec<Warning>,
}

impl LevelStats {
    pub fn tail_at(&self, eps: f64) -> Option<f64> {
        self.tail.iter().find(|(e, _)| *e == eps).map(|&(_, v)| v)
    }

    /// Standard error of `s2` across paths.
    pub fn s2_se(&self) -> f64 {
        std_err(&self.path_s2)
    }

    pub fn s1_se(&self) -> f64 {
        std_err(&self.path_s1)
    }

    /// Builds statistics from a materialized fluctuation array.
    pub fn from_array(arr: &FluctuationArray, cfg: &StatsConfig) -> LevelStats {
        let k = arr.k;
        let partials = par::map_chunks(arr.n_paths, par::CHUNK, |paths| {
            let mut acc = Accumulator::new(k, paths.len(), cfg);
            for i in paths {
                for j in 0..k {
                    acc.push(j, arr.y[i * k + j], arr.w[i * k + j]);
                }
                acc.end_path();
            }
            acc
        });
        finish(partials, k, arr.mesh, arr.n_paths, arr.mode, cfg)
    }
}

pub(crate) fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

struct Accumulator<'c> {
    cfg: &'c StatsConfig,
    sum_y: Vec<f64>,
    sum_y2: Vec<f64>,
    sum_y2_sq: Vec<f64>,
    tail: Vec<f64>,
    trunc: Vec<f64>,
    hist: Histogram,
    path_s1: Vec<f64>,
    path_s2: Vec<f64>,
    cur_s1: f64,
    cur_s2: f64,
}

impl<'c> Accumulator<'c> {
    fn new(k: usize, paths: usize, cfg: &'c StatsConfig) -> Self {
        Accumulator {
            cfg,
            sum_y: vec![0.0; k],
            sum_y2: vec![0.0; k],
            sum_y2_sq: vec![0.0; k],
            tail: vec![0.0; cfg.eps_grid.len()],
            trunc: vec![0.0; cfg.tau_grid.len()],
            hist: Histogram::new(cfg.bins_per_unit),
            path_s1: Vec::with_capacity(paths),
            path_s2: Vec::with_capacity(paths),
            cur_s1: 0.0,
            cur_s2: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, j: usize, y: f64, w: f64) {
        assert!(y > -1.0, "fluctuation {y} not above -1");
        let wy = w * y;
        let wy2 = wy * y;
        self.sum_y[j] += wy;
        self.sum_y2[j] += wy2;
        self.sum_y2_sq[j] += wy2 * wy2;
        self.cur_s1 += wy;
        self.cur_s2 += wy2;
        let a = y.abs();
        for (t, &eps) in self.tail.iter_mut().zip(&self.cfg.eps_grid) {
            if a > eps {
                *t += wy2;
            }
        }
        for (t, &tau) in self.trunc.iter_mut().zip(&self.cfg.tau_grid) {
            if a <= tau {
                *t += wy2;
            }
        }
        if wy2 != 0.0 {
            self.hist.add(y, wy2);
        }
    }

    fn end_path(&mut self) {
        self.path_s1.push(self.cur_s1);
        self.path_s2.push(self.cur_s2);
        self.cur_s1 = 0.0;
        self.cur_s2 = 0.0;
    }
}

fn finish(
    partials: Vec<Accumulator<'_>>,
    k: usize,
    mesh: f64,
    n_paths: usize,
    mode: PanelMode,
    cfg: &StatsConfig,
) -> LevelStats {
    let mut it = partials.into_iter();
    let mut acc = it.next().expect("at least one path");
    for part in it {
        for (a, b) in acc.sum_y.iter_mut().zip(&part.sum_y) {
            *a += b;
        }
        for (a, b) in acc.sum_y2.iter_mut().zip(&part.sum_y2) {
            *a += b;
        }
        for (a, b) in acc.sum_y2_sq.iter_mut().zip(&part.sum_y2_sq) {
            *a += b;
        }
        for (a, b) in acc.tail.iter_mut().zip(&part.tail) {
            *a += b;
        }
        for (a, b) in acc.trunc.iter_mut().zip(&part.trunc) {
            *a += b;
        }
        acc.hist.merge(&part.hist);
        acc.path_s1.extend_from_slice(&part.path_s1);
        acc.path_s2.extend_from_slice(&part.path_s2);
    }

    let m = n_paths as f64;
    let interval_mean_y: Vec<f64> = acc.sum_y.iter().map(|s| s / m).collect();
    let interval_mean_y2: Vec<f64> = acc.sum_y2.iter().map(|s| s / m).collect();
    let interval_se_y2 = acc
        .sum_y2
        .iter()
        .zip(&acc.sum_y2_sq)
        .map(|(&s, &sq)| {
            if n_paths < 2 {
                return 0.0;
            }
            let mean = s / m;
            let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        })
        .collect();
    let mut hist = acc.hist;
    hist.scale(1.0 / m);
    let warnings = if mode == PanelMode::SinglePath {
        vec![Warning::SinglePathTilt]
    } else {
        Vec::new()
    };

    LevelStats {
        k,
        mesh,
        n_paths,
        s1: interval_mean_y.iter().sum(),
        s2: interval_mean_y2.iter().sum(),
        s2_trunc: cfg
            .tau_grid
            .iter()
            .zip(&acc.trunc)
            .map(|(&t, &v)| (t, v / m))
            .collect(),
        tail: cfg
            .eps_grid
            .iter()
            .zip(&acc.tail)
            .map(|(&e, &v)| (e, v / m))
            .collect(),
        hist,
        max_term: interval_mean_y2.iter().copied().fold(0.0, f64::max),
        interval_mean_y,
        interval_mean_y2,
        interval_se_y2,
        path_s1: acc.path_s1,
        path_s2: acc.path_s2,
        warnings,
    }
}

#[inline]
fn fluctuation(dp: &DensityPanel<'_>, path: usize, from: usize, to: usize) -> (f64, f64) {
    let prev = dp.density(path, from);
    let cur = dp.density(path, to);
    ((cur / prev).sqrt() - 1.0, prev)
}

/// Computes the level statistics without materializing the fluctuations.
pub fn level_stats(dp: &DensityPanel<'_>, level: &Level, cfg: &StatsConfig) -> LevelStats {
    let idx = &level.indices;
    let k = level.k();
    let partials = par::map_chunks(dp.n_paths(), par::CHUNK, |paths| {
        let mut acc = Accumulator::new(k, paths.len(), cfg);
        for i in paths {
            for j in 0..k {
                let (y, w) = fluctuation(dp, i, idx[j], idx[j + 1]);
                acc.push(j, y, w);
            }
            acc.end_path();
        }
        acc
    });
    finish(partials, k, level.mesh, dp.n_paths(), dp.mode(), cfg)
}

/// Materializes the fluctuations of one level along with its statistics.
pub fn compute_fluctuations(
    dp: &DensityPanel<'_>,
    level: &Level,
    cfg: &StatsConfig,
) -> (FluctuationArray, LevelStats) {
    let idx = &level.indices;
    let k = level.k();
    let m = dp.n_paths();
    let mut y = Vec::with_capacity(m * k);
    let mut w = Vec::with_capacity(m * k);
    for i in 0..m {
        for j in 0..k {
            let (yy, ww) = fluctuation(dp, i, idx[j], idx[j + 1]);
            y.push(yy);
            w.push(ww);
        }
    }
    let arr = FluctuationArray {
        k,
        mesh: level.mesh,
        n_paths: m,
        mode: dp.mode(),
        y,
        w,
    };
    let stats = LevelStats::from_array(&arr, cfg);
    (arr, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{
        build_ladder, estimate_mean_function, prices_densities, LadderScheme, MeanFunction,
        MeanSource, PricePanel,
    };
    use proptest::prelude::*;

    fn flat_panel() -> PricePanel {
        PricePanel::from_grid(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec!["a".into(), "b".into()],
            vec![3.0; 10],
            PanelMode::Ensemble,
        )
        .unwrap()
    }

    #[test]
    fn unit_density_gives_zero_fluctuations() {
        let panel = flat_panel();
        let m = MeanFunction::from_values(panel.grid(), vec![3.0; 5]).unwrap();
        let dp = prices_densities(&panel, m).unwrap();
        let ladder = build_ladder(panel.grid(), 3, LadderScheme::Dyadic).unwrap();
        let (arr, stats) = compute_fluctuations(&dp, &ladder.levels[2], &StatsConfig::default());
        assert!(arr.y.iter().all(|&y| y == 0.0));
        assert_eq!(stats.s1, 0.0);
        assert_eq!(stats.s2, 0.0);
        assert_eq!(stats.max_term, 0.0);
        assert!(stats.tail.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn single_path_is_flagged() {
        let panel = PricePanel::from_grid(
            vec![0.0, 0.5, 1.0],
            vec!["a".into()],
            vec![1.0, 1.2, 0.9],
            PanelMode::SinglePath,
        )
        .unwrap();
        let m = estimate_mean_function(&panel, MeanSource::ExponentialTrend).unwrap();
        let dp = prices_densities(&panel, m).unwrap();
        let ladder = build_ladder(panel.grid(), 2, LadderScheme::Dyadic).unwrap();
        let stats = level_stats(&dp, &ladder.levels[1], &StatsConfig::default());
        assert_eq!(stats.warnings, vec![Warning::SinglePathTilt]);
    }

    #[test]
    fn hand_computed_two_path_level() {
        // p paths: a = (1, 1.21), b = (1, 0.81); m = 1 exactly.
        let panel = PricePanel::from_grid(
            vec![0.0, 1.0],
            vec!["a".into(), "b".into()],
            vec![1.0, 1.21, 1.0, 0.81],
            PanelMode::Ensemble,
        )
        .unwrap();
        let m = MeanFunction::from_values(panel.grid(), vec![1.0, 1.0]).unwrap();
        let dp = prices_densities(&panel, m).unwrap();
        let ladder = build_ladder(panel.grid(), 1, LadderScheme::Dyadic).unwrap();
        let stats = level_stats(&dp, &ladder.levels[0], &StatsConfig::default());
        // Y = +0.1 and -0.1 with unit weights.
        assert!(stats.s1.abs() < 1e-15);
        assert!((stats.s2 - 0.01).abs() < 1e-15);
        assert!((stats.tail_at(0.05).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(stats.tail_at(0.2), None);
        assert!((stats.hist.cdf(0.0) - 0.005).abs() < 1e-15);
    }

    fn arb_array() -> impl Strategy<Value = FluctuationArray> {
        (1usize..6, 1usize..8).prop_flat_map(|(m, k)| {
            (
                proptest::collection::vec(-0.99f64..2.0, m * k),
                proptest::collection::vec(0.01f64..3.0, m * k),
            )
                .prop_map(move |(y, w)| FluctuationArray::from_values(m, k, 0.1, y, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn level_stat_invariants(arr in arb_array()) {
            let cfg = StatsConfig::default();
            let s = LevelStats::from_array(&arr, &cfg);
            let tol = 1e-12 * (1.0 + s.s2);
            for &(_, v) in &s.s2_trunc {
                prop_assert!(v >= 0.0 && v <= s.s2 + tol);
            }
            for w in s.tail.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
            prop_assert_eq!(s.hist.cdf(-1.0), 0.0);
            prop_assert!((s.hist.cdf(f64::INFINITY) - s.s2).abs() <= tol);
            let mut prev = 0.0;
            for y in [-0.5, -0.1, 0.0, 0.05, 0.3, 1.0, 3.0] {
                let h = s.hist.cdf(y);
                prop_assert!(h >= prev);
                prev = h;
            }
            let mean_s2 = s.path_s2.iter().sum::<f64>() / s.n_paths as f64;
            prop_assert!((mean_s2 - s.s2).abs() <= tol);
        }
    }
}
