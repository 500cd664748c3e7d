//! Expectations under an [`IdLaw`] computed from its cdf alone, by
//! integration by parts and composite Simpson quadrature.

use super::law::IdLaw;

pub const DEFAULT_INTERVALS: usize = 8192;
const SPAN_SDS: f64 = 14.0;
const MAX_INTERVALS: usize = 1 << 20;

/// Cdf and survival values on an even Simpson grid covering the law.
pub struct CdfGrid<'a> {
    law: &'a IdLaw,
    pub lo: f64,
    pub h: f64,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl<'a> CdfGrid<'a> {
    pub fn new(law: &'a IdLaw, intervals: usize) -> Self {
        let sd_total = law.variance().sqrt();
        let sd_gauss = law.gauss_var.sqrt();
        let (mut lo, mut hi) = (law.mean() - SPAN_SDS * sd_total, law.mean() + SPAN_SDS * sd_total);
        if let Some(m) = law.mixture() {
            let loc = law.location();
            let live = m.iter().filter(|&&(_, p)| p > 1e-16);
            for &(x, _) in live {
                lo = lo.min(loc + x - SPAN_SDS * sd_gauss);
                hi = hi.max(loc + x + SPAN_SDS * sd_gauss);
            }
        }
        let mut n = intervals.max(2);
        if sd_gauss > 0.0 {
            n = n.max(((hi - lo) / (sd_gauss / 40.0)).ceil() as usize);
        }
        let n = (n.min(MAX_INTERVALS) + 1) & !1;
        let h = (hi - lo) / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
        CdfGrid {
            law,
            lo,
            h,
            cdf: nodes.iter().map(|&v| law.cdf(v)).collect(),
            sf: nodes.iter().map(|&v| law.sf(v)).collect(),
        }
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.h * (self.cdf.len() - 1) as f64
    }

    fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    /// Simpson over nodes `[2a, 2b]` of `f(v) * vals[i]`.
    fn simpson(&self, vals: &[f64], f: &impl Fn(f64) -> f64, a: usize, b: usize) -> f64 {
        let mut acc = 0.0;
        for m in a..b {
            let i = 2 * m;
            acc += f(self.node(i)) * vals[i]
                + 4.0 * f(self.node(i + 1)) * vals[i + 1]
                + f(self.node(i + 2)) * vals[i + 2];
        }
        acc * self.h / 3.0
    }

    /// Simpson on `[a, b]` with two panels, evaluating the law directly.
    fn tail_piece(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, survival: bool) -> f64 {
        let g = |v: f64| f(v) * if survival { self.law.sf(v) } else { self.law.cdf(v) };
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b))
    }

    fn even_index_below(&self, x: f64) -> usize {
        let pairs = (self.cdf.len() - 1) / 2;
        (((x - self.lo) / (2.0 * self.h)).floor().max(0.0) as usize).min(pairs)
    }

    /// `∫_lo^x f(v) Q(v) dv`.
    pub fn int_cdf_below(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi());
        let m = self.even_index_below(x);
        self.simpson(&self.cdf, &f, 0, m) + self.tail_piece(&f, self.node(2 * m), x, false)
    }

    /// `∫_x^hi f(v) (1 - Q(v)) dv`.
    pub fn int_sf_above(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi());
        let pairs = (self.sf.len() - 1) / 2;
        let m = (self.even_index_below(x) + 1).min(pairs);
        let start = self.node(2 * m).max(x);
        self.simpson(&self.sf, &f, m, pairs) + self.tail_piece(&f, x, start, true)
    }
}

/// `E g(V)` from the cdf: `g(c) + ∫_c g'(1 - Q) - ∫^c g' Q` with `c` the mean.
/// Point-mass laws are summed exactly.
pub fn expect(
    law: &IdLaw,
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    intervals: usize,
) -> f64 {
    if law.gauss_var == 0.0 {
        if let Some(m) = law.mixture() {
            let loc = law.location();
            return m.iter().map(|&(x, p)| p * g(loc + x)).sum();
        }
    }
    let grid = CdfGrid::new(law, intervals);
    let c = law.mean();
    g(c) + grid.int_sf_above(&dg, c) - grid.int_cdf_below(&dg, c)
}

/// `E e^{sV}` by quadrature.
pub fn integrated_mgf(law: &IdLaw, s: f64) -> f64 {
    expect(law, |v| (s * v).exp(), |v| s * (s * v).exp(), DEFAULT_INTERVALS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::law::Jump;

    #[test]
    fn normal_moments() {
        let q = IdLaw::normal(0.3, 0.25);
        let mean = expect(&q, |v| v, |_| 1.0, DEFAULT_INTERVALS);
        let second = expect(&q, |v| v * v, |v| 2.0 * v, DEFAULT_INTERVALS);
        assert!((mean - 0.3).abs() < 1e-12);
        assert!((second - 0.34).abs() < 1e-11);
    }

    #[test]
    fn mgf_pins_closed_form() {
        let q = IdLaw::new(
            -0.3,
            0.09,
            -0.4,
            vec![Jump { jump: 0.3, rate: 2.0 }, Jump { jump: -0.2, rate: 1.0 }],
        );
        for &s in &[0.25, 0.5, 0.75, 1.0] {
            let rel = integrated_mgf(&q, s) / q.log_mgf(s).exp() - 1.0;
            assert!(rel.abs() < 1e-9, "s={s}: {rel}");
        }
    }

    #[test]
    fn point_mass_expectation_is_exact() {
        let d = IdLaw::point_mass(0.5);
        assert_eq!(expect(&d, |v| v.exp(), |v| v.exp(), 10), 0.5f64.exp());
    }
}
