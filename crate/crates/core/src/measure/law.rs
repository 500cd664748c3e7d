use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::normal;

/// Largest total jump rate evaluated by Poisson enumeration.
pub const ENUMERATION_MAX_RATE: f64 = 30.0;
/// Largest enumeration support before switching to Fourier inversion.
pub const ENUMERATION_MAX_SUPPORT: usize = 200_000;
/// Probability mass left out of a Poisson enumeration.
pub const ENUMERATION_TAIL: f64 = 1e-12;
/// Fourier inversion nodes.
pub const FOURIER_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Jump size `2 ln(1 + y)` on the log scale.
    pub jump: f64,
    pub rate: f64,
}

/// Infinitely divisible law on the log scale: a Gaussian, a compound Poisson
/// part with finitely many jump sizes, and a deterministic drift.
///
/// `ln E e^{sV} = s (gauss_mean + drift) + gauss_var s²/2 + Σ rate (e^{s J} - 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdLaw {
    pub gauss_mean: f64,
    pub gauss_var: f64,
    pub drift: f64,
    #[serde(rename = "atoms")]
    pub jumps: Vec<Jump>,
    #[serde(skip)]
    eval: OnceLock<Evaluator>,
}

impl PartialEq for IdLaw {
    fn eq(&self, other: &Self) -> bool {
        self.gauss_mean == other.gauss_mean
            && self.gauss_var == other.gauss_var
            && self.drift == other.drift
            && self.jumps == other.jumps
    }
}

#[derive(Debug, Clone)]
enum Evaluator {
    /// Sorted `(shift, probability)` of the jump sum.
    Mixture(Vec<(f64, f64)>),
    /// Node spacing and `(u_k, phi(u_k) / u_k)` at midpoint nodes.
    Fourier { du: f64, nodes: Vec<(f64, Complex64)> },
}

impl IdLaw {
    pub fn new(gauss_mean: f64, gauss_var: f64, drift: f64, jumps: Vec<Jump>) -> Self {
        assert!(gauss_var >= 0.0, "negative Gaussian variance {gauss_var}");
        let jumps = jumps.into_iter().filter(|j| j.rate > 0.0).collect();
        IdLaw {
            gauss_mean,
            gauss_var,
            drift,
            jumps,
            eval: OnceLock::new(),
        }
    }

    pub fn normal(mean: f64, var: f64) -> Self {
        IdLaw::new(mean, var, 0.0, Vec::new())
    }

    pub fn point_mass(at: f64) -> Self {
        IdLaw::new(at, 0.0, 0.0, Vec::new())
    }

    pub fn total_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).sum()
    }

    /// Deterministic part of the location.
    pub fn location(&self) -> f64 {
        self.gauss_mean + self.drift
    }

    pub fn mean(&self) -> f64 {
        self.location() + self.jumps.iter().map(|j| j.rate * j.jump).sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.gauss_var + self.jumps.iter().map(|j| j.rate * j.jump * j.jump).sum::<f64>()
    }

    pub fn is_degenerate(&self) -> bool {
        self.gauss_var == 0.0 && self.jumps.is_empty()
    }

    pub fn log_mgf(&self, s: f64) -> f64 {
        s * self.location()
            + 0.5 * self.gauss_var * s * s
            + self
                .jumps
                .iter()
                .map(|j| j.rate * (s * j.jump).exp_m1())
                .sum::<f64>()
    }

    pub fn char_fn(&self, u: f64) -> Complex64 {
        let mut exponent = Complex64::new(-0.5 * self.gauss_var * u * u, u * self.location());
        for j in &self.jumps {
            let (s, c) = (u * j.jump).sin_cos();
            exponent += Complex64::new(c - 1.0, s) * j.rate;
        }
        exponent.exp()
    }

    /// Exponential tilt `e^{θv} dQ(v) / E e^{θV}`.
    pub fn tilt(&self, theta: f64) -> IdLaw {
        IdLaw::new(
            self.gauss_mean + theta * self.gauss_var,
            self.gauss_var,
            self.drift,
            self.jumps
                .iter()
                .map(|j| Jump {
                    jump: j.jump,
                    rate: j.rate * (theta * j.jump).exp(),
                })
                .collect(),
        )
    }

    /// The law of `V + c`.
    pub fn shifted(&self, c: f64) -> IdLaw {
        IdLaw::new(self.gauss_mean + c, self.gauss_var, self.drift, self.jumps.clone())
    }

    /// Uses Fourier inversion rather than Poisson enumeration.
    pub fn uses_fourier(&self) -> bool {
        matches!(self.evaluator(), Evaluator::Fourier { .. })
    }

    /// Atoms of the jump sum with their probabilities, when enumerated.
    pub fn mixture(&self) -> Option<&[(f64, f64)]> {
        match self.evaluator() {
            Evaluator::Mixture(m) => Some(m),
            Evaluator::Fourier { .. } => None,
        }
    }

    fn evaluator(&self) -> &Evaluator {
        self.eval.get_or_init(|| {
            let cap = if self.gauss_var == 0.0 {
                usize::MAX
            } else if self.total_rate() > ENUMERATION_MAX_RATE {
                0
            } else {
                ENUMERATION_MAX_SUPPORT
            };
            match enumerate(&self.jumps, cap) {
                Some(m) => Evaluator::Mixture(m),
                None => self.fourier_nodes(),
            }
        })
    }

    fn fourier_nodes(&self) -> Evaluator {
        let u_max = (80.0 / self.gauss_var).sqrt();
        let du = u_max / FOURIER_NODES as f64;
        let centre = self.mean();
        let nodes = (0..FOURIER_NODES)
            .map(|k| {
                let u = (k as f64 + 0.5) * du;
                let phi = self.char_fn(u) * Complex64::from_polar(1.0, -u * centre);
                (u, phi / u)
            })
            .collect();
        Evaluator::Fourier { du, nodes }
    }

    /// `P(V <= v)`.
    pub fn cdf(&self, v: f64) -> f64 {
        self.eval_cdf(v, false)
    }

    /// `P(V < v)`; differs from [`IdLaw::cdf`] only for point masses.
    pub fn cdf_left(&self, v: f64) -> f64 {
        self.eval_cdf(v, true)
    }

    /// `P(V > v)`, computed directly for accuracy in the right tail.
    pub fn sf(&self, v: f64) -> f64 {
        let loc = self.location();
        match self.evaluator() {
            Evaluator::Mixture(m) => {
                if self.gauss_var == 0.0 {
                    m.iter().filter(|&&(x, _)| loc + x > v).map(|&(_, p)| p).sum()
                } else {
                    let sd = self.gauss_var.sqrt();
                    m.iter().map(|&(x, p)| p * normal::sf((v - loc - x) / sd)).sum()
                }
            }
            Evaluator::Fourier { .. } => 1.0 - self.cdf(v),
        }
    }

    fn eval_cdf(&self, v: f64, strict: bool) -> f64 {
        let loc = self.location();
        match self.evaluator() {
            Evaluator::Mixture(m) => {
                if self.gauss_var == 0.0 {
                    m.iter()
                        .filter(|&&(x, _)| if strict { loc + x < v } else { loc + x <= v })
                        .map(|&(_, p)| p)
                        .sum()
                } else {
                    let sd = self.gauss_var.sqrt();
                    m.iter().map(|&(x, p)| p * normal::cdf((v - loc - x) / sd)).sum()
                }
            }
            Evaluator::Fourier { du, nodes } => {
                // Gil-Pelaez on the law centred at its mean.
                let x = v - self.mean();
                // e^{-i u_k x} by rotation from the first node, renormalized
                // every block to stop drift.
                let step = Complex64::from_polar(1.0, -du * x);
                let mut rot = Complex64::new(1.0, 0.0);
                let mut integral = 0.0;
                for (k, &(u, phi_over_u)) in nodes.iter().enumerate() {
                    if k % 256 == 0 {
                        rot = Complex64::from_polar(1.0, -u * x);
                    }
                    integral += (rot * phi_over_u).im;
                    rot *= step;
                }
                (0.5 - integral * du / std::f64::consts::PI).clamp(0.0, 1.0)
            }
        }
    }
}

fn poisson_cutoff(rate: f64, tail: f64) -> usize {
    let mut p = (-rate).exp();
    let mut cum = p;
    let mut n = 0;
    while 1.0 - cum > tail && n < 100_000 {
        n += 1;
        p *= rate / n as f64;
        cum += p;
        if p == 0.0 && cum < 1.0 - tail {
            // Underflow at large rates; the caller only enumerates small ones.
            break;
        }
    }
    n
}

/// Enumerates the jump sum `Σ n_k J_k` with independent Poisson counts,
/// leaving out at most [`ENUMERATION_TAIL`] of mass. `None` if the support
/// would exceed `cap`.
fn enumerate(jumps: &[Jump], cap: usize) -> Option<Vec<(f64, f64)>> {
    if jumps.is_empty() {
        return Some(vec![(0.0, 1.0)]);
    }
    let tail = ENUMERATION_TAIL / (2.0 * jumps.len() as f64);
    let counts: Vec<usize> = jumps.iter().map(|j| poisson_cutoff(j.rate, tail)).collect();
    let size = counts
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n + 1))?;
    if size > cap {
        return None;
    }
    let mut support = vec![(0.0, 1.0)];
    for (j, &n) in jumps.iter().zip(&counts) {
        let mut probs = Vec::with_capacity(n + 1);
        let mut p = (-j.rate).exp();
        for i in 0..=n {
            if i > 0 {
                p *= j.rate / i as f64;
            }
            probs.push(p);
        }
        support = support
            .iter()
            .flat_map(|&(x, q)| {
                probs
                    .iter()
                    .enumerate()
                    .map(move |(i, &p)| (x + i as f64 * j.jump, q * p))
            })
            .filter(|&(_, q)| q > 1e-300)
            .collect();
    }
    support.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(support)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_atom() -> IdLaw {
        IdLaw::new(
            -0.02001,
            0.04,
            -0.0002,
            vec![Jump {
                jump: 2.0 * 1.1f64.ln(),
                rate: 0.001,
            }],
        )
    }

    #[test]
    fn calm_values() {
        let q = IdLaw::normal(-0.02, 0.04);
        assert!((q.cdf(-0.02) - 0.5).abs() < 1e-15);
        assert!((q.cdf(0.0) - normal::cdf(0.1)).abs() < 1e-15);
        assert_eq!(q.log_mgf(0.0), 0.0);
        assert!(q.log_mgf(1.0).abs() < 1e-15);
        assert!((q.log_mgf(0.5) + 0.005).abs() < 1e-15);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let q = one_atom();
        let j = q.jumps[0];
        for &v in &[-0.5, -0.1, 0.0, 0.2, 0.6] {
            let mut brute = 0.0;
            let mut p = (-j.rate).exp();
            for n in 0..40 {
                if n > 0 {
                    p *= j.rate / n as f64;
                }
                brute += p * normal::cdf((v - q.location() - n as f64 * j.jump) / 0.2);
            }
            assert!((q.cdf(v) - brute).abs() < 1e-10);
            assert!((q.sf(v) - (1.0 - brute)).abs() < 1e-10);
        }
    }

    #[test]
    fn one_atom_mgf_at_one_vanishes() {
        assert!(one_atom().log_mgf(1.0).abs() < 1e-10);
    }

    #[test]
    fn fourier_agrees_with_enumeration() {
        let jumps = vec![
            Jump { jump: 0.19, rate: 18.0 },
            Jump { jump: -0.1, rate: 14.0 },
        ];
        let fourier = IdLaw::new(0.1, 0.05, -1.0, jumps.clone());
        assert!(fourier.uses_fourier());
        let exact = enumerate(&jumps, usize::MAX).unwrap();
        let sd = 0.05f64.sqrt();
        for &v in &[-3.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
            let e: f64 = exact
                .iter()
                .map(|&(x, p)| p * normal::cdf((v - fourier.location() - x) / sd))
                .sum();
            assert!((fourier.cdf(v) - e).abs() < 1e-9, "v={v}: {} vs {e}", fourier.cdf(v));
        }
    }

    #[test]
    fn point_mass_steps() {
        let d = IdLaw::point_mass(0.3);
        assert_eq!(d.cdf(0.3), 1.0);
        assert_eq!(d.cdf_left(0.3), 0.0);
        assert_eq!(d.sf(0.3), 0.0);
        assert_eq!(d.cdf(0.29), 0.0);
    }

    #[test]
    fn tilt_stochastically_dominates() {
        let q = one_atom();
        let bu = q.tilt(1.0);
        for i in -40..=40 {
            let v = i as f64 * 0.025;
            assert!(bu.cdf(v) <= q.cdf(v) + 1e-15);
        }
    }

    #[test]
    fn serializes_with_atoms_key() {
        let s = serde_json::to_string(&one_atom()).unwrap();
        assert!(s.contains("\"atoms\":[{\"jump\":"));
    }
}
