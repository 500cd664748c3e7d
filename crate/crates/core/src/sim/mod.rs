//! Synthetic panels and the closed-form checks they admit.

mod checks;
mod generate;

pub use checks::{
    gbm_interval_closed_form, gbm_theory_check, lambda_distribution_check, qmd_diagnostic,
    trader_sample_lambda, GbmCheckReport, GbmLevelCheck, QmdReport, QmdVerdict,
};
pub use generate::{gen_panel, uniform_grid, JumpLaw, SimModel, SimSpec};
