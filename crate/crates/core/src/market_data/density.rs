use super::mean::MeanFunction;
use super::panel::{PanelMode, PricePanel};
use crate::error::{Error, Result};

/// Prices-densities `p_t = S_t / m(t)` over a panel.
///
/// Values are computed on access from the borrowed panel, so the density view
/// costs one vector of grid length beyond the panel itself.
#[derive(Debug, Clone)]
pub struct DensityPanel<'a> {
    panel: &'a PricePanel,
    mean: MeanFunction,
}

impl<'a> DensityPanel<'a> {
    pub fn panel(&self) -> &'a PricePanel {
        self.panel
    }

    pub fn mean(&self) -> &MeanFunction {
        &self.mean
    }

    pub fn mode(&self) -> PanelMode {
        self.panel.mode()
    }

    pub fn grid(&self) -> &'a [f64] {
        self.panel.grid()
    }

    pub fn n_paths(&self) -> usize {
        self.panel.n_paths()
    }

    pub fn n_times(&self) -> usize {
        self.panel.n_times()
    }

    #[inline]
    pub fn density(&self, path: usize, time_index: usize) -> f64 {
        self.panel.price(path, time_index) / self.mean.at_index(time_index)
    }

    /// Densities of one path across the grid.
    pub fn path_densities(&self, path: usize) -> impl Iterator<Item = f64> + '_ {
        self.panel
            .path(path)
            .iter()
            .zip(self.mean.values())
            .map(|(s, m)| s / m)
    }

    /// `ln(p_T / p_{t0})` per path: the realized value of the embedded
    /// log-likelihood ratio, which telescopes over any partition.
    pub fn log_ratio_endpoints(&self) -> Vec<f64> {
        let last = self.n_times() - 1;
        (0..self.n_paths())
            .map(|i| (self.density(i, last) / self.density(i, 0)).ln())
            .collect()
    }
}

/// Forms prices-densities from a panel and a mean function tabulated on the
/// panel's grid.
pub fn prices_densities(panel: &PricePanel, m: MeanFunction) -> Result<DensityPanel<'_>> {
    if m.grid().len() != panel.n_times()
        || m.grid().iter().zip(panel.grid()).any(|(a, b)| a != b)
    {
        return Err(Error::InvalidArgument(
            "mean function is not tabulated on the panel grid".into(),
        ));
    }
    if let Some(v) = m.values().iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "mean function must be positive, found {v}"
        )));
    }
    Ok(DensityPanel { panel, mean: m })
}
