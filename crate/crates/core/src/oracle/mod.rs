//! Independent reference profiles: quadrature of the scalar reduced profile
//! equation and time-marched steady states of the full relaxation system.

mod march;
mod quadrature;

pub use march::{march_to_steady, march_to_steady_with_phase, MarchConfig, MarchResult, MarchScheme, SchemeId};
pub use quadrature::quadrature_profile;
