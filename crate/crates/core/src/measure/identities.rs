use serde::{Deserialize, Serialize};

use super::bundle::QBundle;
use super::quad::{expect, CdfGrid, DEFAULT_INTERVALS};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `|∫ e^v dQ - 1|`.
    pub martingale: f64,
    /// `max_x |Q_bu(x) - ∫_{v<=x} e^v dQ(v)|`.
    pub tilt: f64,
    /// `max_x |∫_{v>x} e^v dQ(v) - (1 - Q_bu(x))|`.
    pub tail: f64,
    /// `∫ e^v dQ0`, equal to `exp(residual_h)`.
    pub q0_exp_moment: f64,
    pub grid: Vec<f64>,
    pub tol: f64,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.martingale.max(self.tilt).max(self.tail)
    }
}

/// `n` points spanning four standard deviations either side of the mean of `q`.
pub fn default_grid(bundle: &QBundle, n: usize) -> Vec<f64> {
    let q = &bundle.q;
    let (c, sd) = (q.mean(), q.variance().sqrt().max(1e-3));
    (0..n)
        .map(|i| c + sd * (-4.0 + 8.0 * i as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// Checks `E_Q e^V = 1`, `dQ_bu = e^v dQ` and the tail form of the tilt on
/// `grid` by quadrature against the cdfs.
pub fn verify_identities(bundle: &QBundle, grid: &[f64], tol: f64) -> Result<IdentityReport> {
    let report = identity_report(bundle, grid, tol);
    for (check, deviation) in [
        ("martingale", report.martingale),
        ("tilt", report.tilt),
        ("tail", report.tail),
    ] {
        if !(deviation <= tol) {
            return Err(Error::IdentityViolation {
                check,
                deviation,
                tol,
            });
        }
    }
    Ok(report)
}

/// As [`verify_identities`] without failing on a deviation.
pub fn identity_report(bundle: &QBundle, grid: &[f64], tol: f64) -> IdentityReport {
    let q = &bundle.q;
    let exp = |v: f64| v.exp();
    let martingale = (expect(q, exp, exp, DEFAULT_INTERVALS) - 1.0).abs();
    let q0_exp_moment = expect(&bundle.q0, exp, exp, DEFAULT_INTERVALS);

    let (lower, upper): (Vec<f64>, Vec<f64>) = if q.gauss_var == 0.0 && q.mixture().is_some() {
        let m = q.mixture().unwrap();
        let loc = q.location();
        grid.iter()
            .map(|&x| {
                let (mut lo, mut hi) = (0.0, 0.0);
                for &(s, p) in m {
                    let v = loc + s;
                    if v <= x {
                        lo += p * v.exp();
                    } else {
                        hi += p * v.exp();
                    }
                }
                (lo, hi)
            })
            .unzip()
    } else {
        let cg = CdfGrid::new(q, DEFAULT_INTERVALS);
        grid.iter()
            .map(|&x| {
                let lo = x.exp() * q.cdf(x) - cg.int_cdf_below(exp, x);
                let hi = x.exp() * q.sf(x) + cg.int_sf_above(exp, x);
                (lo, hi)
            })
            .unzip()
    };
    let bu = &bundle.q_bu;
    let tilt = grid
        .iter()
        .zip(&lower)
        .map(|(&x, l)| (bu.cdf(x) - l).abs())
        .fold(0.0, f64::max);
    let tail = grid
        .iter()
        .zip(&upper)
        .map(|(&x, u)| (u - bu.sf(x)).abs())
        .fold(0.0, f64::max);
    IdentityReport {
        martingale,
        tilt,
        tail,
        q0_exp_moment,
        grid: grid.to_vec(),
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{neutrality_check, Atom, JumpNormalization, LevyTripleEstimate};
    use crate::measure::build_bundle;
    use crate::normal;

    fn one_atom(residual: f64) -> QBundle {
        let t = LevyTripleEstimate::new(
            -0.5 * (0.01 + 1e-5) + 0.5 * residual,
            0.01,
            vec![Atom { y: 0.1, w: 0.001 }],
            JumpNormalization::Literal,
        );
        build_bundle(&t.horizon(1.0), &neutrality_check(&t, 1.0, None), 0.0, 0.05)
    }

    #[test]
    fn calm_identities() {
        let b = QBundle::calm(0.04, 1.0, 0.0, 0.05);
        let r = verify_identities(&b, &default_grid(&b, DEFAULT_GRID_POINTS), 1e-6).unwrap();
        assert!(r.martingale < 1e-8);
        let upper_at_zero = 0.0f64.exp() * b.q.sf(0.0)
            + CdfGrid::new(&b.q, DEFAULT_INTERVALS).int_sf_above(|v| v.exp(), 0.0);
        assert!((upper_at_zero - normal::sf(-0.1)).abs() < 1e-9);
        assert!((b.q_bu.sf(0.0) - 0.539_827_837_277_028_9).abs() < 1e-12);
    }

    #[test]
    fn one_atom_identities() {
        let b = one_atom(0.0);
        let r = verify_identities(&b, &default_grid(&b, DEFAULT_GRID_POINTS), 1e-6).unwrap();
        assert!(r.martingale < 1e-8, "{r:?}");
        assert!((r.q0_exp_moment - 1.0).abs() < 1e-8);
    }

    #[test]
    fn q0_exp_moment_carries_residual() {
        let b = one_atom(0.01);
        let r = identity_report(&b, &[0.0], 1e-6);
        assert!((r.q0_exp_moment - 0.01f64.exp()).abs() < 1e-8);
        assert!(r.martingale < 1e-8);
    }

    #[test]
    fn broken_tilt_is_reported() {
        let mut b = QBundle::calm(0.04, 1.0, 0.0, 0.05);
        b.q_bu = b.q.shifted(0.01);
        let err = verify_identities(&b, &default_grid(&b, 11), 1e-6).unwrap_err();
        assert!(matches!(err, Error::IdentityViolation { check: "tilt", .. }));
    }
}
