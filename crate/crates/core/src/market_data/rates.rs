use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

/// Piecewise-constant short rate. Segments are contiguous and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    segments: Vec<RateSegment>,
}

impl RateCurve {
    /// A constant rate covering every horizon.
    pub fn constant(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("rate {rate} is not finite")));
        }
        Ok(RateCurve {
            segments: vec![RateSegment {
                start: f64::NEG_INFINITY,
                end: f64::INFINITY,
                rate,
            }],
        })
    }

    pub fn piecewise(segments: Vec<RateSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("rate curve has no segments".into()));
        }
        for s in &segments {
            if !s.rate.is_finite() || s.start.is_nan() || s.end.is_nan() || s.end <= s.start {
                return Err(Error::InvalidArgument(format!(
                    "bad rate segment [{}, {}] r={}",
                    s.start, s.end, s.rate
                )));
            }
        }
        for w in segments.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::CoverageGap {
                    from: w[0].end,
                    to: w[1].start,
                });
            }
        }
        Ok(RateCurve { segments })
    }

    pub fn segments(&self) -> &[RateSegment] {
        &self.segments
    }

    /// `∫_t^T r_s ds`.
    pub fn integral(&self, t: f64, maturity: f64) -> Result<f64> {
        if maturity < t {
            return Err(Error::InvalidArgument(format!(
                "discounting needs t <= T, got {t} > {maturity}"
            )));
        }
        let lo = self.segments[0].start;
        let hi = self.segments[self.segments.len() - 1].end;
        if t < lo || maturity > hi {
            return Err(Error::CoverageGap {
                from: t,
                to: maturity,
            });
        }
        if t == maturity {
            return Ok(0.0);
        }
        Ok(self
            .segments
            .iter()
            .map(|s| {
                let a = s.start.max(t);
                let b = s.end.min(maturity);
                if b > a {
                    s.rate * (b - a)
                } else {
                    0.0
                }
            })
            .sum())
    }
}

/// `B_[t,T] = exp(∫_t^T r_s ds)`.
pub fn discount_factor(rc: &RateCurve, t: f64, maturity: f64) -> Result<f64> {
    Ok(rc.integral(t, maturity)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_piece() -> RateCurve {
        RateCurve::piecewise(vec![
            RateSegment {
                start: 0.0,
                end: 0.5,
                rate: 0.04,
            },
            RateSegment {
                start: 0.5,
                end: 1.0,
                rate: 0.06,
            },
        ])
        .unwrap()
    }

    #[test]
    fn constant_rate() {
        let rc = RateCurve::constant(0.05).unwrap();
        let b = discount_factor(&rc, 0.0, 1.0).unwrap();
        assert!((b - 1.051_271_096_376_024).abs() < 1e-15);
    }

    #[test]
    fn piecewise_rate() {
        let b = discount_factor(&two_piece(), 0.0, 1.0).unwrap();
        assert!((b - 0.05f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn same_time_is_one() {
        assert_eq!(discount_factor(&two_piece(), 0.3, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn outside_coverage() {
        assert!(matches!(
            discount_factor(&two_piece(), 0.0, 1.5),
            Err(Error::CoverageGap { .. })
        ));
    }

    #[test]
    fn gap_between_segments() {
        let r = RateCurve::piecewise(vec![
            RateSegment {
                start: 0.0,
                end: 0.4,
                rate: 0.01,
            },
            RateSegment {
                start: 0.5,
                end: 1.0,
                rate: 0.01,
            },
        ]);
        assert!(matches!(r, Err(Error::CoverageGap { .. })));
    }

    proptest! {
        #[test]
        fn multiplicative(t in 0.0f64..1.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let mut x = [t, u, v];
            x.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rc = two_piece();
            let whole = discount_factor(&rc, x[0], x[2]).unwrap();
            let split = discount_factor(&rc, x[0], x[1]).unwrap() * discount_factor(&rc, x[1], x[2]).unwrap();
            prop_assert!(((whole - split) / whole).abs() < 1e-14);
        }
    }
}
