//! Heteroscedastic (GLS) estimation with a diagonal residual covariance.

mod covariance;
mod two_step;

pub use covariance::{
    estimate_residual_covariance, estimate_residual_covariance_with, weighted_loss, weighted_mse, ResidualCovariance,
    VARIANCE_FLOOR,
};
pub use two_step::{fit_two_step, return_covariance, GlsConfig, GlsFitResult};
