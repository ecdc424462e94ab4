//! White-box interpretability of fitted networks: exact input Jacobians and
//! Hessians, their empirical distributions over the training inputs, and the
//! Garson, Olden and partial-dependence baselines.

mod baselines;
mod derivatives;
mod pdp;
pub mod report;
mod sensitivity;

pub use baselines::{garson, jacobian_importance, olden, ImportanceMethod, ImportanceTable};
pub use derivatives::{hessian, jacobian, path_sensitivity_box, weight_product_box};
pub use pdp::{default_grid, partial_dependence, PartialDependence};
pub use sensitivity::{
    rank_interactions, sensitivity_distribution, sensitivity_distribution_with, Aggregation, InputSensitivity,
    InteractionReport, SensitivityReport,
};
