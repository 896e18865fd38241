//! Posterior state for item-level and parameter-level models.

mod beta;
mod ellipsoid;
mod gaussian;
mod mvn;
mod radius;

pub use beta::{regularized_incomplete_beta, BetaItemPosterior};
pub use ellipsoid::EllipsoidState;
pub use gaussian::GaussianItemPosterior;
pub use mvn::{mvn_sample, mvn_sample_precision};
pub use radius::{delta_schedule, radius_beta_t, RadiusParams, RadiusPrefactor};
