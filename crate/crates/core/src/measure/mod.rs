//! The infinitely divisible laws `Q0`, `Q`, `Q_bu`, `Q*` and the identities
//! tying them together.

mod bundle;
mod identities;
mod law;
pub mod quad;

pub use bundle::{build_bundle, Provenance, QBundle};
pub use identities::{
    default_grid, identity_report, verify_identities, IdentityReport, DEFAULT_GRID_POINTS,
};
pub use law::{
    IdLaw, Jump, ENUMERATION_MAX_RATE, ENUMERATION_MAX_SUPPORT, ENUMERATION_TAIL, FOURIER_NODES,
};
