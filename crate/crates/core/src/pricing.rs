//! European call prices under the constructed risk-neutral law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::ClusterSet;
use crate::market_data::RateCurve;
use crate::measure::{default_grid, verify_identities, QBundle, DEFAULT_GRID_POINTS};
use crate::normal;

/// Tolerance of the pre-pricing identity check.
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CallSpec {
    pub s_t0: f64,
    pub strike: f64,
    pub rate: RateCurve,
    pub t0: f64,
    pub maturity: f64,
}

impl CallSpec {
    pub fn new(s_t0: f64, strike: f64, rate: RateCurve, t0: f64, maturity: f64) -> Result<Self> {
        if !(s_t0 > 0.0) || !(strike > 0.0) || !s_t0.is_finite() || !strike.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spot {s_t0} and strike {strike} must be positive"
            )));
        }
        if !(maturity > t0) {
            return Err(Error::InvalidArgument(format!(
                "maturity {maturity} must exceed t0 {t0}"
            )));
        }
        rate.integral(t0, maturity)?;
        Ok(CallSpec {
            s_t0,
            strike,
            rate,
            t0,
            maturity,
        })
    }

    /// Discount exponent `∫_{t0}^T r`.
    pub fn rho(&self) -> f64 {
        self.rate
            .integral(self.t0, self.maturity)
            .expect("coverage checked at construction")
    }

    pub fn with_strike(&self, strike: f64) -> Result<Self> {
        CallSpec::new(self.s_t0, strike, self.rate.clone(), self.t0, self.maturity)
    }

    /// `ln(X / s) - rho`, the log-scale exercise boundary.
    fn boundary(&self) -> f64 {
        (self.strike / self.s_t0).ln() - self.rho()
    }

    fn discounted_strike(&self) -> f64 {
        self.strike * (-self.rho()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingMethod {
    Levy,
    Calm,
    Mixture,
    Intrinsic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteNeutrality {
    pub residual: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub quote: CallQuote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallQuote {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "R_tr")]
    pub r_tr: f64,
    #[serde(rename = "R_bu")]
    pub r_bu: f64,
    #[serde(rename = "C_bu")]
    pub c_bu: f64,
    pub premium: f64,
    pub method: PricingMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neutrality: Option<QuoteNeutrality>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub clusters: Vec<MixtureComponent>,
}

fn quote(spec: &CallSpec, r_tr: f64, r_bu: f64, c_bu: f64, method: PricingMethod) -> CallQuote {
    let c = spec.s_t0 * r_bu - spec.discounted_strike() * r_tr;
    CallQuote {
        c,
        r_tr,
        r_bu,
        c_bu,
        premium: c_bu - c,
        method,
        neutrality: None,
        clusters: Vec::new(),
    }
}

/// Prices the call under the bundle's `P*`:
/// `C = s R_bu - X e^{-rho} R_tr` with `R_tr = 1 - Q(k)`, `R_bu = 1 - Q_bu(k)`
/// and `k = ln(X/s) - rho`. The buyer price uses the tilt of `Q_bu`.
///
/// The bundle's identities are checked first.
pub fn price_call(bundle: &QBundle, spec: &CallSpec) -> Result<CallQuote> {
    verify_identities(bundle, &default_grid(bundle, DEFAULT_GRID_POINTS), IDENTITY_TOL)?;
    Ok(price_call_unchecked(bundle, spec))
}

/// [`price_call`] without the identity pre-flight.
pub fn price_call_unchecked(bundle: &QBundle, spec: &CallSpec) -> CallQuote {
    let k = spec.boundary();
    let q = &bundle.q;
    let r_tr = q.sf(k);
    let r_bu = bundle.q_bu.sf(k);
    let c_bu = spec.s_t0 * q.log_mgf(2.0).exp() * q.tilt(2.0).sf(k)
        - spec.discounted_strike() * r_bu;
    let method = if q.is_degenerate() {
        PricingMethod::Intrinsic
    } else {
        PricingMethod::Levy
    };
    let mut out = quote(spec, r_tr, r_bu, c_bu, method);
    out.neutrality = Some(QuoteNeutrality {
        residual: bundle.provenance.residual_h,
        verdict: bundle.provenance.neutral,
    });
    out
}

/// Closed form for a calm stock with total horizon volatility `sigma_h`.
pub fn price_call_calm(sigma_h: f64, spec: &CallSpec) -> CallQuote {
    assert!(sigma_h >= 0.0, "negative volatility {sigma_h}");
    let (r_tr, r_bu, c_bu) = calm_coefficients(sigma_h, spec);
    let method = if sigma_h == 0.0 {
        PricingMethod::Intrinsic
    } else {
        PricingMethod::Calm
    };
    quote(spec, r_tr, r_bu, c_bu, method)
}

fn calm_coefficients(sigma_h: f64, spec: &CallSpec) -> (f64, f64, f64) {
    let x = (spec.s_t0 / spec.strike).ln() + spec.rho();
    let var = sigma_h * sigma_h;
    let dx = spec.discounted_strike();
    if sigma_h == 0.0 {
        let itm = if x > 0.0 { 1.0 } else { 0.0 };
        let c = spec.s_t0 * itm - dx * itm;
        return (itm, itm, c);
    }
    let d = |shift: f64| normal::cdf((x + shift * var) / sigma_h);
    let (r_tr, r_bu) = (d(-0.5), d(0.5));
    let c_bu = spec.s_t0 * var.exp() * d(1.5) - dx * r_bu;
    (r_tr, r_bu, c_bu)
}

/// Buyer price `s e^{σ²} Φ(d + σ) - X e^{-rho} Φ(d)` and the premium over
/// the calm price.
pub fn buyer_price_and_premium(sigma_h: f64, spec: &CallSpec) -> (f64, f64) {
    let q = price_call_calm(sigma_h, spec);
    (q.c_bu, q.premium)
}

/// Weighted sum of component prices, one bundle per cluster.
pub fn mixture_price(
    clusters: &ClusterSet,
    spec: &CallSpec,
    bundles: &[QBundle],
) -> Result<CallQuote> {
    let weights = clusters.weights();
    if weights.len() != bundles.len() {
        return Err(Error::InvalidArgument(format!(
            "{} clusters but {} bundles",
            weights.len(),
            bundles.len()
        )));
    }
    let components = crate::par::map_indexed(bundles.len(), |i| price_call(&bundles[i], spec));
    let mut out = CallQuote {
        c: 0.0,
        r_tr: 0.0,
        r_bu: 0.0,
        c_bu: 0.0,
        premium: 0.0,
        method: PricingMethod::Mixture,
        neutrality: None,
        clusters: Vec::new(),
    };
    for (w, q) in weights.into_iter().zip(components) {
        let q = q?;
        out.c += w * q.c;
        out.r_tr += w * q.r_tr;
        out.r_bu += w * q.r_bu;
        out.c_bu += w * q.c_bu;
        out.premium += w * q.premium;
        out.clusters.push(MixtureComponent { weight: w, quote: q });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::cluster_detect;
    use crate::levy::{Atom, JumpNormalization, LevyTripleEstimate};
    use proptest::prelude::*;

    fn spec(strike: f64) -> CallSpec {
        CallSpec::new(100.0, strike, RateCurve::constant(0.05).unwrap(), 0.0, 1.0).unwrap()
    }

    fn one_atom_bundle() -> QBundle {
        let t = LevyTripleEstimate::new(
            0.0,
            0.01,
            vec![Atom { y: 0.1, w: 0.001 }],
            JumpNormalization::Literal,
        );
        let nr = crate::levy::neutrality_check(&t, 1.0, None);
        crate::measure::build_bundle(&t.horizon(1.0), &nr, 0.08, 0.05)
    }

    #[test]
    fn calm_reference_prices() {
        let s = spec(100.0);
        assert!((price_call_calm(0.2, &s).c - 10.450_583_572_185_565).abs() < 1e-9);
        let q0 = price_call_calm(0.0, &s);
        assert!((q0.c - (100.0 - 100.0 * (-0.05f64).exp())).abs() < 1e-12);
        assert!((q0.c - 4.8771).abs() < 1e-4);
        assert_eq!(q0.method, PricingMethod::Intrinsic);
        assert!(price_call_calm(0.2, &spec(1e6)).c.abs() < 1e-12);
    }

    #[test]
    fn premium_reference() {
        let (c_bu, premium) = buyer_price_and_premium(0.2, &spec(100.0));
        assert!((c_bu - 13.2).abs() < 1e-3);
        assert!((premium - 2.749).abs() < 1e-3);
        assert_eq!(buyer_price_and_premium(0.0, &spec(100.0)).1, 0.0);
    }

    #[test]
    fn bundle_and_closed_form_agree() {
        let b = QBundle::calm(0.04, 1.0, 0.0, 0.05);
        for x in [50.0, 90.0, 100.0, 130.0, 300.0] {
            let s = spec(x);
            let a = price_call(&b, &s).unwrap();
            let c = price_call_calm(0.2, &s);
            assert!((a.c - c.c).abs() < 1e-12, "X={x}");
            assert!((a.c_bu - c.c_bu).abs() < 1e-11, "X={x}");
        }
    }

    #[test]
    fn degenerate_bundle_is_intrinsic() {
        let b = QBundle::calm(0.0, 1.0, 0.0, 0.05);
        let q = price_call(&b, &spec(100.0)).unwrap();
        assert_eq!(q.method, PricingMethod::Intrinsic);
        assert!((q.c - 4.8771).abs() < 1e-4);
        assert_eq!(q.premium, 0.0);
    }

    #[test]
    fn one_atom_price_matches_quadrature() {
        let b = one_atom_bundle();
        let s = spec(105.0);
        let q = price_call(&b, &s).unwrap();
        // e^{-rho} ∫_X^∞ P*(S_T > x) dx with x = X e^u, by Simpson.
        let n = 40_000;
        let h = 12.0 / n as f64;
        let f = |u: f64| 105.0 * u.exp() * (1.0 - b.pstar_cdf(105.0 * u.exp(), 100.0));
        let mut c = f(0.0) + f(12.0);
        for i in 1..n {
            c += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let c = c * h / 3.0 * (-0.05f64).exp();
        assert!((q.c / c - 1.0).abs() < 1e-6, "{} vs {c}", q.c);
        assert!(q.premium > 0.0);
        assert!(q.r_bu >= q.r_tr);
        assert!((b.pstar_mean(100.0) / (100.0 * 0.05f64.exp()) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn deep_strikes() {
        let b = one_atom_bundle();
        assert!((price_call(&b, &spec(1e-9)).unwrap().c - 100.0).abs() < 1e-6);
        let s = spec(1.0);
        assert!((price_call(&b, &s).unwrap().c - (100.0 - (-0.05f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn calm_mixture() {
        let t = |v: f64| LevyTripleEstimate::new(-0.5 * v, v, vec![], JumpNormalization::Literal);
        let set = cluster_detect(&[("a".into(), t(0.01)), ("b".into(), t(0.0225))], 1e-3).unwrap();
        assert_eq!(set.clusters.len(), 2);
        let bundles = [QBundle::calm(0.04, 1.0, 0.0, 0.05), QBundle::calm(0.09, 1.0, 0.0, 0.05)];
        let s = spec(100.0);
        let m = mixture_price(&set, &s, &bundles).unwrap();
        assert!((m.c - 12.3410).abs() < 1e-4, "{}", m.c);
        assert!((price_call_calm(0.3, &s).c - 14.2313).abs() < 1e-4);
        let first = mixture_price(&set.clone().with_weights(&[1.0, 0.0]).unwrap(), &s, &bundles)
            .unwrap();
        assert_eq!(first.c, price_call(&bundles[0], &s).unwrap().c);
        let single = cluster_detect(&[("a".into(), t(0.01))], 1e-3).unwrap();
        let one = mixture_price(&single, &s, &bundles[..1]).unwrap();
        assert_eq!(one.c, price_call(&bundles[0], &s).unwrap().c);
    }

    #[test]
    fn strike_grid_properties() {
        let b = one_atom_bundle();
        let mut prev = f64::INFINITY;
        for i in 0..21 {
            let x = 60.0 + 4.0 * i as f64;
            let s = spec(x);
            let q = price_call_unchecked(&b, &s);
            let lower = (100.0 - x * (-0.05f64).exp()).max(0.0);
            assert!(q.c >= lower - 1e-12 && q.c <= 100.0);
            assert!(q.c < prev);
            assert!(q.c_bu >= q.c);
            assert!((0.0..=1.0).contains(&q.r_tr) && (0.0..=1.0).contains(&q.r_bu));
            prev = q.c;
        }
    }

    proptest! {
        #[test]
        fn calm_no_arbitrage(sigma in 0.0f64..1.5, x in 1.0f64..400.0) {
            let s = spec(x);
            let q = price_call_calm(sigma, &s);
            let lower = (100.0 - x * (-0.05f64).exp()).max(0.0);
            prop_assert!(q.c >= lower - 1e-9 && q.c <= 100.0 + 1e-9);
            prop_assert!(q.premium >= -1e-9);
        }

        #[test]
        fn calm_vega_positive(sigma in 0.05f64..0.5, x in 80.0f64..125.0) {
            let s = spec(x);
            let h = 1e-4;
            let vega = (price_call_calm(sigma + h, &s).c - price_call_calm(sigma - h, &s).c) / (2.0 * h);
            prop_assert!(vega > 0.0);
            prop_assert!(buyer_price_and_premium(sigma, &s).1 > 0.0);
        }

        #[test]
        fn calm_strike_monotone(sigma in 0.05f64..1.0, x in 20.0f64..300.0) {
            prop_assert!(price_call_calm(sigma, &spec(x)).c > price_call_calm(sigma, &spec(x * 1.01)).c);
        }
    }
}
