//! Nonparametric extraction of the risk-neutral law supported by observed
//! price paths, and European call pricing under it.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`market_data`]: ingest a [`PricePanel`], estimate the mean function
//!    `m(t)`, form prices-densities `p_t = S_t / m(t)` and build nested
//!    partitions of the time grid.
//! 2. [`fluctuation`]: per partition level, the fluctuations
//!    `Y = sqrt(p_{t_j} / p_{t_{j-1}}) - 1` and their tilted moments,
//!    the calm-stock diagnostic, and cluster detection.
//! 3. [`levy`]: the unit-time Levy triple, its horizon scaling and the
//!    neutrality residual `2 mu1 + sigma1^2 + E[Y^2; Y != 0]`.
//! 4. [`measure`]: the infinitely divisible laws `Q0`, `Q`, `Q_bu` and `Q*`.
//! 5. [`pricing`]: call prices, the buyer price and the risk premium.
//!
//! [`pipeline`] chains these steps; [`sim`] generates synthetic panels and runs
//! the closed-form checks.
//!
//! Data-parallel loops go through rayon when the `parallel` feature is on
//! (the default). Work is split into fixed-size chunks and reduced in chunk
//! order, so results are bit-identical with and without the feature.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fluctuation;
pub mod ks;
pub mod levy;
pub mod market_data;
pub mod measure;
pub mod normal;
mod par;
pub mod pipeline;
pub mod pricing;
pub mod sim;

pub use error::{Error, Result, Warning};
pub use fluctuation::{
    calm_diagnostic, cluster_detect, compute_fluctuations, level_stats, CalmConfig, CalmVerdict,
    ClusterSet, FluctuationArray, LevelStats, StatsConfig, Verdict,
};
pub use levy::{
    bootstrap_triple, estimate_triple, neutrality_check, HorizonParams, JumpNormalization,
    LevyTripleEstimate, NeutralityReport, TripleConfig,
};
pub use market_data::{
    build_ladder, discount_factor, estimate_mean_function, ingest_panel, prices_densities,
    DensityPanel, LadderScheme, Level, MeanFunction, MeanSource, PanelMode, PartitionLadder,
    PricePanel, PricePath, RateCurve,
};
pub use measure::{build_bundle, verify_identities, IdLaw, IdentityReport, QBundle};
pub use pipeline::{run_estimate, Estimate, EstimateConfig, Priced};
pub use pricing::{
    buyer_price_and_premium, mixture_price, price_call, price_call_calm, CallQuote, CallSpec,
    PricingMethod,
};
pub use sim::{gen_panel, JumpLaw, SimModel, SimSpec};
