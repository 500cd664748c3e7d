//! Standard normal distribution helpers.

use libm::erfc;

/// Standard normal cdf, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - cdf(x)`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(cdf(0.0), 0.5);
        assert!((cdf(0.1) - 0.539_827_837_277_028_9).abs() < 1e-15);
        assert!((cdf(0.35) - 0.636_830_651_175_619).abs() < 1e-14);
        assert!((sf(8.0) / 6.220_960_574_271_784e-16 - 1.0).abs() < 1e-14);
        assert!((cdf(-1.0) + cdf(1.0) - 1.0).abs() < 1e-16);
    }
}
