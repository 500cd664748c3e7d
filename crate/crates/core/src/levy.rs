//! Unit-time Levy triple estimation, horizon scaling and the neutrality
//! (contiguity) condition `2 mu1 + sigma1² + E[Y² ; Y != 0] = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::fluctuation::LevelStats;
use crate::market_data::{DensityPanel, Level};
use crate::par;

/// How the y²-weighted histogram measure maps to jump intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JumpNormalization {
    /// The histogram mass is the jump measure itself: rate `w`, and
    /// `E[Y² ; Y != 0] = Σ w y²`.
    #[default]
    Literal,
    /// The histogram mass is `y²` times the intensity: rate `w / y²`, and
    /// `E[Y² ; Y != 0] = Σ w`.
    Intensity,
}

/// An atom of the unit-time jump measure: histogram mass `w` at `y > -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleStderr {
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub e2_unit: f64,
    pub residual_unit: f64,
    pub resamples: usize,
    pub seed: u64,
}

/// Unit-time Levy triple `(mu1, sigma1², L_tr)` with `L_tr` atomic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTripleEstimate {
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub atoms: Vec<Atom>,
    pub e2_unit: f64,
    pub normalization: JumpNormalization,
    pub stderr: Option<TripleStderr>,
}

impl LevyTripleEstimate {
    pub fn new(
        mu1: f64,
        sigma1_sq: f64,
        atoms: Vec<Atom>,
        normalization: JumpNormalization,
    ) -> Self {
        let e2_unit = second_moment(&atoms, normalization);
        LevyTripleEstimate {
            mu1,
            sigma1_sq,
            atoms,
            e2_unit,
            normalization,
            stderr: None,
        }
    }

    /// Jump rates per unit time as `(y, rate)`.
    pub fn rates(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .map(|a| (a.y, rate(a, self.normalization)))
            .collect()
    }

    /// The same triple read under another jump normalization.
    pub fn renormalized(&self, normalization: JumpNormalization) -> Self {
        let mut t = LevyTripleEstimate::new(
            self.mu1,
            self.sigma1_sq,
            self.atoms.clone(),
            normalization,
        );
        t.stderr = None;
        t
    }

    /// Scales to a horizon of length `horizon`.
    pub fn horizon(&self, horizon: f64) -> HorizonParams {
        HorizonParams {
            horizon,
            mu_h: (2.0 * self.mu1 - self.sigma1_sq) * horizon,
            sigma_sq_h: 4.0 * self.sigma1_sq * horizon,
            atoms_h: self
                .rates()
                .into_iter()
                .map(|(y, r)| (y, r * horizon))
                .collect(),
            e2_h: self.e2_unit * horizon,
        }
    }

    /// Component-wise average; atoms at equal `y` are pooled.
    pub(crate) fn average(ts: &[&LevyTripleEstimate]) -> Self {
        let n = ts.len() as f64;
        let mut atoms: Vec<Atom> = Vec::new();
        for t in ts {
            for a in &t.atoms {
                match atoms.iter_mut().find(|b| b.y == a.y) {
                    Some(b) => b.w += a.w / n,
                    None => atoms.push(Atom { y: a.y, w: a.w / n }),
                }
            }
        }
        atoms.sort_by(|a, b| a.y.total_cmp(&b.y));
        LevyTripleEstimate::new(
            ts.iter().map(|t| t.mu1).sum::<f64>() / n,
            ts.iter().map(|t| t.sigma1_sq).sum::<f64>() / n,
            atoms,
            ts[0].normalization,
        )
    }
}

fn rate(a: &Atom, normalization: JumpNormalization) -> f64 {
    match normalization {
        JumpNormalization::Literal => a.w,
        JumpNormalization::Intensity => a.w / (a.y * a.y),
    }
}

fn second_moment(atoms: &[Atom], normalization: JumpNormalization) -> f64 {
    match normalization {
        JumpNormalization::Literal => atoms.iter().map(|a| a.w * a.y * a.y).sum::<f64>() + 0.0,
        JumpNormalization::Intensity => atoms.iter().map(|a| a.w).sum::<f64>() + 0.0,
    }
}

/// Triple parameters over `[t0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonParams {
    pub horizon: f64,
    /// `(2 mu1 - sigma1²) (T - t0)`.
    pub mu_h: f64,
    /// `4 sigma1² (T - t0)`.
    pub sigma_sq_h: f64,
    /// `(y, rate)` with rates scaled to the horizon.
    pub atoms_h: Vec<(f64, f64)>,
    pub e2_h: f64,
}

impl HorizonParams {
    /// Gaussian-only parameters with total horizon variance `sigma_sq_h`.
    pub fn calm(sigma_sq_h: f64, horizon: f64) -> Self {
        HorizonParams {
            horizon,
            mu_h: -0.5 * sigma_sq_h,
            sigma_sq_h,
            atoms_h: Vec::new(),
            e2_h: 0.0,
        }
    }

    /// Evaluates `ln E e^{sΛ}` in its Levy-Khintchine form,
    /// `mu_h s + sigma_sq_h s²/2 + Σ rate [(1+y)^{2s} - 1 - 2sy]`.
    pub fn log_mgf(&self, s: f64) -> f64 {
        self.mu_h * s
            + 0.5 * self.sigma_sq_h * s * s
            + self
                .atoms_h
                .iter()
                .map(|&(y, r)| r * ((1.0 + y).powf(2.0 * s) - 1.0 - 2.0 * s * y))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripleConfig {
    /// Bins heavier than this multiple of the median outside bin become atoms.
    pub atom_median_factor: f64,
    /// Minimum histogram mass of an atom, as a fraction of the level's `S2`.
    pub atom_floor_frac: f64,
    /// Largest admissible finest-level `max_j E Y²`.
    pub max_term_limit: f64,
    pub normalization: JumpNormalization,
}

impl Default for TripleConfig {
    fn default() -> Self {
        TripleConfig {
            atom_median_factor: 5.0,
            atom_floor_frac: 0.005,
            max_term_limit: 0.01,
            normalization: JumpNormalization::Literal,
        }
    }
}

/// Atoms extracted from the finest level, with histogram masses at horizon
/// scale, and the bins they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSplit {
    pub bins: Vec<i64>,
    pub atoms: Vec<Atom>,
    pub folded: Vec<Warning>,
}

/// Splits the finest histogram into atoms and diffuse mass.
///
/// Bins outside `[-cutoff, cutoff]` whose mass exceeds both the configured
/// multiple of the median outside bin (empty bins included, over a symmetric
/// span reaching at least `|y| = 1`) and the floor `atom_floor_frac * S2`
/// become atoms at their midpoints.
pub fn split_atoms(stats: &LevelStats, cutoff: f64, cfg: &TripleConfig) -> AtomSplit {
    let h = &stats.hist;
    let outside = |k: i64| h.midpoint(k).abs() > cutoff;
    let nonempty: Vec<(i64, f64)> = h.iter().filter(|&(k, _)| outside(k)).collect();
    let reach = nonempty
        .iter()
        .map(|&(k, _)| k.unsigned_abs())
        .max()
        .unwrap_or(0)
        .max(h.bins_per_unit() as u64);
    let first_out = (cutoff * h.bins_per_unit() as f64).floor() as u64 + 1;
    let n_out = 2 * reach.saturating_sub(first_out - 1) as usize;
    let median = median_with_zeros(nonempty.iter().map(|&(_, m)| m).collect(), n_out);
    let bar = (cfg.atom_median_factor * median).max(cfg.atom_floor_frac * stats.s2);

    let mut split = AtomSplit {
        bins: Vec::new(),
        atoms: Vec::new(),
        folded: Vec::new(),
    };
    for (k, mass) in nonempty {
        if mass <= bar {
            continue;
        }
        let y = h.midpoint(k);
        if y <= -1.0 {
            split.folded.push(Warning::AtomBelowSupport { y, mass });
            continue;
        }
        split.bins.push(k);
        split.atoms.push(Atom { y, w: mass });
    }
    split
}

fn median_with_zeros(mut masses: Vec<f64>, total: usize) -> f64 {
    let total = total.max(masses.len());
    if total == 0 {
        return 0.0;
    }
    masses.sort_by(f64::total_cmp);
    let zeros = total - masses.len();
    let at = |i: usize| if i < zeros { 0.0 } else { masses[i - zeros] };
    if total % 2 == 1 {
        at(total / 2)
    } else {
        0.5 * (at(total / 2 - 1) + at(total / 2))
    }
}

/// Estimates the unit-time triple from the finest of `stats_by_level`
/// (ordered coarsest first), splitting atoms from diffuse mass at `cutoff`.
pub fn estimate_triple(
    stats_by_level: &[LevelStats],
    horizon: f64,
    cutoff: f64,
    cfg: &TripleConfig,
) -> Result<(LevyTripleEstimate, HorizonParams, Vec<Warning>)> {
    if stats_by_level.len() < 2 {
        return Err(Error::MeshTooCoarse(format!(
            "need at least 2 levels, got {}",
            stats_by_level.len()
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let finest = stats_by_level.last().unwrap();
    if finest.max_term > cfg.max_term_limit {
        return Err(Error::MeshTooCoarse(format!(
            "finest max_j E Y² = {:e} exceeds {:e}",
            finest.max_term, cfg.max_term_limit
        )));
    }
    let split = split_atoms(finest, cutoff, cfg);
    let mut warnings = split.folded.clone();
    let atom_mass: f64 = split.atoms.iter().map(|a| a.w).sum();
    let raw = (finest.s2 - atom_mass) / horizon;
    let sigma1_sq = if raw >= 0.0 {
        raw
    } else {
        if raw.abs() > 1e-12 * finest.s2.max(f64::MIN_POSITIVE) / horizon {
            warnings.push(Warning::NegativeVarianceClamped { raw });
        }
        0.0
    };
    let atoms = split
        .atoms
        .iter()
        .map(|a| Atom {
            y: a.y,
            w: a.w / horizon,
        })
        .collect();
    let triple =
        LevyTripleEstimate::new(finest.s1 / horizon, sigma1_sq, atoms, cfg.normalization);
    let hp = triple.horizon(horizon);
    Ok((triple, hp, warnings))
}

/// Path bootstrap of the triple and the unit residual. Atom bins are held at
/// the full-sample split; the mean function is not re-estimated.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_triple(
    dp: &DensityPanel<'_>,
    finest: &Level,
    stats: &LevelStats,
    triple: &LevyTripleEstimate,
    cutoff: f64,
    cfg: &TripleConfig,
    resamples: usize,
    seed: u64,
) -> TripleStderr {
    let split = split_atoms(stats, cutoff, cfg);
    let horizon = dp.grid()[finest.indices[finest.k()]] - dp.grid()[finest.indices[0]];
    let h = &stats.hist;
    let idx = &finest.indices;
    let m = dp.n_paths();

    // Per-path atom mass and atom second-moment contributions.
    let per_path: Vec<(f64, f64)> = par::map_chunks(m, par::CHUNK, |paths| {
        paths
            .map(|i| {
                let (mut mass, mut e2) = (0.0, 0.0);
                if split.bins.is_empty() {
                    return (0.0, 0.0);
                }
                for j in 0..finest.k() {
                    let prev = dp.density(i, idx[j]);
                    let y = (dp.density(i, idx[j + 1]) / prev).sqrt() - 1.0;
                    let bin = h.bin_of(y);
                    if let Some(pos) = split.bins.iter().position(|&b| b == bin) {
                        let wy2 = prev * y * y;
                        mass += wy2;
                        let a = Atom {
                            y: split.atoms[pos].y,
                            w: wy2,
                        };
                        e2 += match triple.normalization {
                            JumpNormalization::Literal => wy2 * a.y * a.y,
                            JumpNormalization::Intensity => wy2,
                        };
                    }
                }
                (mass, e2)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();

    let comps: Vec<[f64; 3]> = (0..m)
        .map(|i| {
            let (mass, e2) = per_path[i];
            [
                stats.path_s1[i] / horizon,
                (stats.path_s2[i] - mass) / horizon,
                e2 / horizon,
            ]
        })
        .collect();

    let draws: Vec<[f64; 4]> = par::map_indexed(resamples, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut acc = [0.0; 3];
        for _ in 0..m {
            let c = &comps[rng.gen_range(0..m)];
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
        let [mu, s2, e2] = acc.map(|a| a / m as f64);
        [mu, s2, e2, 2.0 * mu + s2 + e2]
    });
    let sd = |c: usize| {
        let xs: Vec<f64> = draws.iter().map(|d| d[c]).collect();
        sample_sd(&xs)
    };
    TripleStderr {
        mu1: sd(0),
        sigma1_sq: sd(1),
        e2_unit: sd(2),
        residual_unit: sd(3),
        resamples,
        seed,
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralityReport {
    /// `2 mu1 + sigma1² + E[Y² ; Y != 0]` per unit time.
    pub residual_unit: f64,
    pub residual_h: f64,
    pub horizon: f64,
    pub tolerance: f64,
    pub stderr_h: Option<f64>,
    /// Risk-neutral supporting, equivalently trader and buyer beliefs are
    /// contiguous.
    pub verdict: bool,
    pub interpretation: String,
}

pub const NEUTRALITY_TOL_FLOOR: f64 = 1e-3;

/// Tests the neutrality condition at horizon scale. Without an explicit
/// tolerance, uses `max(2 stderr(residual_h), 1e-3)`.
pub fn neutrality_check(
    triple: &LevyTripleEstimate,
    horizon: f64,
    tol: Option<f64>,
) -> NeutralityReport {
    let residual_unit = 2.0 * triple.mu1 + triple.sigma1_sq + triple.e2_unit;
    let residual_h = residual_unit * horizon;
    let stderr_h = triple.stderr.as_ref().map(|s| s.residual_unit * horizon);
    let tolerance =
        tol.unwrap_or_else(|| (2.0 * stderr_h.unwrap_or(0.0)).max(NEUTRALITY_TOL_FLOOR));
    let verdict = residual_h.abs() <= tolerance;
    let interpretation = if verdict {
        "risk-neutral supporting: trader and buyer belief sequences are contiguous; \
         the constructed Q is supported by the prices"
    } else {
        "not risk-neutral supporting: trader and buyer belief sequences are not contiguous; \
         a neutral Q can only be imposed, not supported by the prices"
    };
    NeutralityReport {
        residual_unit,
        residual_h,
        horizon,
        tolerance,
        stderr_h,
        verdict,
        interpretation: interpretation.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::{FluctuationArray, StatsConfig};

    fn zero_level(k: usize, mesh: f64) -> LevelStats {
        let arr = FluctuationArray::from_values(4, k, mesh, vec![0.0; 4 * k], vec![1.0; 4 * k])
            .unwrap();
        LevelStats::from_array(&arr, &StatsConfig::default())
    }

    #[test]
    fn zero_fluctuations_give_zero_triple() {
        let levels = vec![zero_level(4, 0.25), zero_level(8, 0.125)];
        let (t, hp, w) = estimate_triple(&levels, 1.0, 0.02, &TripleConfig::default()).unwrap();
        assert_eq!((t.mu1, t.sigma1_sq), (0.0, 0.0));
        assert!(t.atoms.is_empty());
        assert_eq!(hp.sigma_sq_h, 0.0);
        assert!(w.is_empty());
    }

    /// 1000 paths x 10 intervals, all zero except 100 entries at Y = 0.1 with
    /// unit tilt weight: histogram mass 100 * 0.01 / 1000 = 0.001 at 0.1.
    fn spiked_level() -> LevelStats {
        let (m, k) = (1000, 10);
        let mut y = vec![0.0; m * k];
        for i in 0..100 {
            y[i * k + i % k] = 0.1;
        }
        let arr = FluctuationArray::from_values(m, k, 0.1, y, vec![1.0; m * k]).unwrap();
        LevelStats::from_array(&arr, &StatsConfig::default())
    }

    #[test]
    fn injected_spikes_become_one_atom() {
        let levels = vec![zero_level(5, 0.2), spiked_level()];
        let (t, _, _) = estimate_triple(&levels, 1.0, 0.02, &TripleConfig::default()).unwrap();
        assert_eq!(t.atoms.len(), 1);
        assert_eq!(t.atoms[0].y, 0.1);
        assert!((t.atoms[0].w - 0.001).abs() < 1e-15);
        assert!((t.e2_unit - 1e-5).abs() < 1e-18);
        assert!(t.sigma1_sq.abs() < 1e-15);
        assert!((t.mu1 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn intensity_normalization_rates() {
        let t = LevyTripleEstimate::new(
            0.0,
            0.0,
            vec![Atom { y: 0.1, w: 0.001 }],
            JumpNormalization::Intensity,
        );
        assert!((t.e2_unit - 0.001).abs() < 1e-18);
        assert!((t.rates()[0].1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn one_level_is_too_coarse() {
        assert!(matches!(
            estimate_triple(&[zero_level(4, 0.25)], 1.0, 0.02, &TripleConfig::default()),
            Err(Error::MeshTooCoarse(_))
        ));
    }

    #[test]
    fn large_max_term_is_too_coarse() {
        let mut fine = zero_level(8, 0.125);
        fine.max_term = 0.5;
        assert!(matches!(
            estimate_triple(&[zero_level(4, 0.25), fine], 1.0, 0.02, &TripleConfig::default()),
            Err(Error::MeshTooCoarse(_))
        ));
    }

    #[test]
    fn horizon_scaling_is_exact() {
        let t = LevyTripleEstimate::new(
            -0.007,
            0.013,
            vec![Atom { y: 0.2, w: 0.003 }, Atom { y: -0.15, w: 0.002 }],
            JumpNormalization::Literal,
        );
        let h = 0.75;
        let hp = t.horizon(h);
        assert_eq!(hp.mu_h, (2.0 * t.mu1 - t.sigma1_sq) * h);
        assert_eq!(hp.sigma_sq_h, 4.0 * t.sigma1_sq * h);
        assert_eq!(hp.e2_h, t.e2_unit * h);
        assert_eq!(hp.atoms_h[1], (-0.15, 0.002 * h));
        let recomputed: f64 = t.atoms.iter().map(|a| a.w * a.y * a.y).sum();
        assert_eq!(t.e2_unit, recomputed);
    }

    #[test]
    fn neutrality_examples() {
        let lit = JumpNormalization::Literal;
        let r = neutrality_check(&LevyTripleEstimate::new(-0.005, 0.01, vec![], lit), 1.0, None);
        assert_eq!(r.residual_h, 0.0);
        assert!(r.verdict);
        assert_eq!(r.tolerance, NEUTRALITY_TOL_FLOOR);

        let r = neutrality_check(&LevyTripleEstimate::new(0.0, 0.01, vec![], lit), 1.0, Some(1e-3));
        assert_eq!(r.residual_h, 0.01);
        assert!(!r.verdict);

        let atoms = vec![Atom { y: 0.1, w: 0.001 }];
        let e2 = 1e-5;
        let t = LevyTripleEstimate::new(-(0.01 + e2) / 2.0, 0.01, atoms, lit);
        let r = neutrality_check(&t, 1.0, None);
        assert!(r.residual_h.abs() < 1e-18);
    }

    #[test]
    fn median_counts_empty_bins() {
        assert_eq!(median_with_zeros(vec![3.0], 10), 0.0);
        assert_eq!(median_with_zeros(vec![1.0, 2.0, 3.0], 3), 2.0);
        assert_eq!(median_with_zeros(vec![1.0, 2.0, 3.0], 4), 1.5);
    }
}
