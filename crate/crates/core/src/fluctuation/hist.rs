use std::collections::BTreeMap;

use serde::Serialize;

/// Bins with midpoints in `[-DENSE, DENSE]` (in bin units) live in a dense
/// vector; the rest, in a map.
const DENSE: i64 = 400;

/// The weighted atom histogram `H(y) = Σ_j E[Y² ; Y <= y]`.
///
/// Bin `k` covers `[(k - 1/2) / b, (k + 1/2) / b)` with `b` bins per unit, so
/// bin midpoints `k / b` are exact multiples of the bin width.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins_per_unit: u32,
    dense: Vec<f64>,
    sparse: BTreeMap<i64, f64>,
}

impl Serialize for Histogram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let bins: Vec<(f64, f64)> = self.iter().map(|(k, m)| (self.midpoint(k), m)).collect();
        let mut st = s.serialize_struct("Histogram", 2)?;
        st.serialize_field("bin_width", &self.bin_width())?;
        st.serialize_field("bins", &bins)?;
        st.end()
    }
}

impl Histogram {
    pub fn new(bins_per_unit: u32) -> Self {
        Histogram {
            bins_per_unit,
            dense: vec![0.0; (2 * DENSE + 1) as usize],
            sparse: BTreeMap::new(),
        }
    }

    pub fn bins_per_unit(&self) -> u32 {
        self.bins_per_unit
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins_per_unit as f64
    }

    #[inline]
    pub fn bin_of(&self, y: f64) -> i64 {
        (y * self.bins_per_unit as f64).round() as i64
    }

    pub fn midpoint(&self, bin: i64) -> f64 {
        bin as f64 / self.bins_per_unit as f64
    }

    fn upper_edge(&self, bin: i64) -> f64 {
        (bin as f64 + 0.5) / self.bins_per_unit as f64
    }

    #[inline]
    pub fn add(&mut self, y: f64, mass: f64) {
        self.add_bin(self.bin_of(y), mass);
    }

    #[inline]
    pub fn add_bin(&mut self, bin: i64, mass: f64) {
        if (-DENSE..=DENSE).contains(&bin) {
            self.dense[(bin + DENSE) as usize] += mass;
        } else {
            *self.sparse.entry(bin).or_insert(0.0) += mass;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.bins_per_unit, other.bins_per_unit);
        for (a, b) in self.dense.iter_mut().zip(&other.dense) {
            *a += b;
        }
        for (&k, &m) in &other.sparse {
            *self.sparse.entry(k).or_insert(0.0) += m;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.dense.iter_mut().for_each(|m| *m *= factor);
        self.sparse.values_mut().for_each(|m| *m *= factor);
    }

    /// Non-empty bins in increasing order as `(bin, mass)`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let below = self.sparse.range(..-DENSE).map(|(&k, &m)| (k, m));
        let dense = self
            .dense
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(|(i, &m)| (i as i64 - DENSE, m));
        let above = self.sparse.range(DENSE + 1..).map(|(&k, &m)| (k, m));
        below.chain(dense).chain(above)
    }

    pub fn mass(&self, bin: i64) -> f64 {
        if (-DENSE..=DENSE).contains(&bin) {
            self.dense[(bin + DENSE) as usize]
        } else {
            self.sparse.get(&bin).copied().unwrap_or(0.0)
        }
    }

    pub fn total(&self) -> f64 {
        self.iter().map(|(_, m)| m).sum()
    }

    /// `H(y)`: mass of the bins lying entirely at or below `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return self.total();
        }
        self.iter()
            .take_while(|&(k, _)| self.upper_edge(k) <= y)
            .map(|(_, m)| m)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_are_exact() {
        let h = Histogram::new(200);
        assert_eq!(h.bin_of(0.1), 20);
        assert_eq!(h.midpoint(20), 0.1);
        assert_eq!(h.bin_of(-0.0024), 0);
        assert_eq!(h.bin_of(3.0), 600);
    }

    #[test]
    fn cdf_is_monotone_with_total_mass() {
        let mut h = Histogram::new(200);
        for (y, m) in [(-0.9, 1.0), (0.0, 2.0), (0.1, 0.5), (5.0, 0.25)] {
            h.add(y, m);
        }
        assert_eq!(h.cdf(-1.0), 0.0);
        assert_eq!(h.cdf(-0.5), 1.0);
        assert_eq!(h.cdf(0.2), 3.5);
        assert_eq!(h.cdf(f64::INFINITY), 3.75);
        assert_eq!(h.iter().count(), 4);
        assert_eq!(h.mass(1000), 0.25);
    }
}
