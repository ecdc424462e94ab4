//! Moments and tail bounds for the Jacobian of a single-hidden-layer ReLU
//! network, which is a weighted sum of indicator functions `Σ_k a_k 1_k`.
//!
//! The closed forms in [`ReluJacobianSpec`] are generic over any ordered
//! numeric field, so identities can be checked in exact rational arithmetic.
//! The Monte Carlo harness checks them against sampled networks.

mod chernoff;
mod monte_carlo;
mod partition;
mod spec;

pub use chernoff::{bound_sweep, chernoff_lower, chernoff_upper, write_bound_sweep_csv, SweepRow, TailBound, TailSide};
pub use monte_carlo::{
    bernoulli_tails_mc, compare_variances, relu_jacobian_mc, BernoulliTails, McMoments, VarianceComparison, MC_BLOCK,
};
pub use partition::{relu_partition, unit_contributions, InputDistribution};
pub use spec::ReluJacobianSpec;
