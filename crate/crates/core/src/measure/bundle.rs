use serde::{Deserialize, Serialize};

use super::law::{IdLaw, Jump};
use crate::levy::{HorizonParams, NeutralityReport};

/// The four laws built from one horizon triple.
///
/// * `q0`: the limit law of the log density ratio `ln(p_T / p_{t0})`.
/// * `q`: `q0` with its Gaussian mean reset so that `E e^V = 1`.
/// * `q_bu`: the tilt `e^v dQ(v)`.
/// * `q_star`: `q` translated so that `q_star(v) = q(v + ln_a - rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QBundle {
    pub q0: IdLaw,
    pub q: IdLaw,
    pub q_bu: IdLaw,
    pub q_star: IdLaw,
    /// `ln(E S_T / E S_{t0})`.
    pub ln_a: f64,
    /// Discount exponent `ln B_[t0,T]`.
    pub rho: f64,
    pub horizon: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: HorizonParams,
    pub residual_h: f64,
    pub neutral: bool,
}

/// Builds the bundle. Jumps of size `y` at horizon rate `r` become log-scale
/// jumps `2 ln(1 + y)` with compensating drift `-2 Σ r y`.
pub fn build_bundle(hp: &HorizonParams, nr: &NeutralityReport, ln_a: f64, rho: f64) -> QBundle {
    let jumps: Vec<Jump> = hp
        .atoms_h
        .iter()
        .map(|&(y, rate)| Jump {
            jump: 2.0 * y.ln_1p(),
            rate,
        })
        .collect();
    let drift = -2.0 * hp.atoms_h.iter().map(|&(y, r)| r * y).sum::<f64>();
    let var = hp.sigma_sq_h;
    let q0 = IdLaw::new(hp.mu_h, var, drift, jumps.clone());
    let q = IdLaw::new(-0.5 * var - hp.e2_h, var, drift, jumps);
    let q_bu = q.tilt(1.0);
    let q_star = q.shifted(rho - ln_a);
    QBundle {
        q0,
        q,
        q_bu,
        q_star,
        ln_a,
        rho,
        horizon: hp.horizon,
        provenance: Provenance {
            params: hp.clone(),
            residual_h: nr.residual_h,
            neutral: nr.verdict,
        },
    }
}

impl QBundle {
    /// Calm bundle: `q = Normal(-sigma_sq_h / 2, sigma_sq_h)`.
    pub fn calm(sigma_sq_h: f64, horizon: f64, ln_a: f64, rho: f64) -> Self {
        let hp = HorizonParams::calm(sigma_sq_h, horizon);
        let nr = NeutralityReport {
            residual_unit: 0.0,
            residual_h: 0.0,
            horizon,
            tolerance: 0.0,
            stderr_h: None,
            verdict: true,
            interpretation: String::new(),
        };
        build_bundle(&hp, &nr, ln_a, rho)
    }

    /// `P*(S_T <= x)` given the spot `s_t0`.
    pub fn pstar_cdf(&self, x: f64, s_t0: f64) -> f64 {
        self.q.cdf((x / s_t0).ln() - self.rho)
    }

    /// `E_{P*} S_T` by quadrature against the cdf.
    pub fn pstar_mean(&self, s_t0: f64) -> f64 {
        let rho = self.rho;
        super::quad::expect(
            &self.q,
            |v| s_t0 * (rho + v).exp(),
            |v| s_t0 * (rho + v).exp(),
            super::quad::DEFAULT_INTERVALS,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{neutrality_check, Atom, JumpNormalization, LevyTripleEstimate};

    #[test]
    fn calm_bundle_laws() {
        let b = QBundle::calm(0.04, 1.0, 0.08, 0.05);
        assert_eq!(b.q, IdLaw::normal(-0.02, 0.04));
        assert_eq!(b.q_bu.gauss_mean, 0.02);
        assert_eq!(b.q_bu.gauss_var, 0.04);
        for i in -20..=20 {
            let v = i as f64 * 0.03;
            assert!((b.q_star.cdf(v) - b.q.cdf(v + b.ln_a - b.rho)).abs() < 1e-15);
        }
    }

    #[test]
    fn translation_vanishes_when_growth_is_discount() {
        let b = QBundle::calm(0.04, 1.0, 0.05, 0.05);
        assert_eq!(b.q_star, b.q);
    }

    #[test]
    fn one_atom_construction() {
        let t = LevyTripleEstimate::new(
            -0.5 * (0.01 + 1e-5),
            0.01,
            vec![Atom { y: 0.1, w: 0.001 }],
            JumpNormalization::Literal,
        );
        let hp = t.horizon(1.0);
        let b = build_bundle(&hp, &neutrality_check(&t, 1.0, None), 0.0, 0.0);
        assert!((b.q.jumps[0].jump - 0.190_620_359_608_649_7).abs() < 1e-15);
        assert_eq!(b.q.jumps[0].rate, 0.001);
        assert!((b.q.drift + 0.0002).abs() < 1e-18);
        assert!((b.q.gauss_mean + 0.02001).abs() < 1e-15);
        assert!(b.q.log_mgf(1.0).abs() < 1e-10);
        assert!(b.q0.log_mgf(1.0).abs() < 1e-12);
    }

    #[test]
    fn q0_mgf_at_one_is_the_residual() {
        let t = LevyTripleEstimate::new(0.01, 0.02, vec![Atom { y: -0.2, w: 0.003 }], JumpNormalization::Literal);
        let nr = neutrality_check(&t, 0.5, None);
        let b = build_bundle(&t.horizon(0.5), &nr, 0.0, 0.0);
        assert!((b.q0.log_mgf(1.0) - nr.residual_h).abs() < 1e-14);
        assert!(b.q.log_mgf(1.0).abs() < 1e-14);
    }

    #[test]
    fn pstar_median_and_mean() {
        let b = QBundle::calm(0.04, 1.0, 0.0, 0.05);
        let s = 100.0;
        let x = s * (0.05f64 - 0.02).exp();
        assert!((b.pstar_cdf(x, s) - 0.5).abs() < 1e-12);
        assert!((b.pstar_mean(s) / (s * 0.05f64.exp()) - 1.0).abs() < 1e-9);
        assert!((b.pstar_cdf(1e12, s) - 1.0).abs() < 1e-15);
    }
}
