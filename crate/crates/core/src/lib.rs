//! Deep fundamental factor models.
//!
//! Cross-sectional factor models where the map from standardized factor
//! exposures to asset returns is a feedforward network. With no hidden layers
//! the fit is the classical linear (OLS/GLS) factor model; with hidden layers
//! the fitted network is interpreted through its exact input Jacobian and
//! Hessian.
//!
//! The numerical core ([`nn`], [`interpret`], the quadratic forms in [`gls`]
//! and the closed forms in [`bounds`]) is generic over the scalar type. The
//! aliases at the crate root fix the common `f64` instantiation.

pub mod backtest;
pub mod bounds;
pub mod cli;
pub mod data;
pub mod error;
pub mod gls;
pub mod interpret;
pub mod linear;
pub mod nn;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision network.
pub type Network = nn::NetworkParams<f64>;
/// Single-precision network.
pub type Network32 = nn::NetworkParams<f32>;
