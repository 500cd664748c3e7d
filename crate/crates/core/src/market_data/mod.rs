//! Price ingestion and validation, the mean function `m(t)`, prices-densities,
//! partition ladders and discounting.

mod density;
mod ladder;
mod mean;
mod panel;
mod rates;

pub use density::{prices_densities, DensityPanel};
pub use ladder::{build_ladder, LadderScheme, Level, PartitionLadder};
pub use mean::{estimate_mean_function, MeanFunction, MeanSource};
pub use panel::{ingest_panel, PanelMode, PricePanel, PricePath};
pub use rates::{discount_factor, RateCurve, RateSegment};
