//! Feedforward network engine: forward evaluation, exact backpropagation of
//! the weighted penalized loss, and minibatch SGD.

mod activation;
mod backprop;
mod cv;
mod forward;
mod io;
mod params;
mod train;

pub use activation::Activation;
pub use backprop::{backprop, objective, Backprop, Gradient, Penalty};
pub use cv::{cross_validate, cross_validated_r2, kfold_indices, out_of_fold_predictions, select_best, CvCandidate, CvScore};
pub use forward::{forward, predict, predict_batch, LayerState};
pub use io::{LayerDocument, NetworkDocument, NETWORK_FORMAT, NETWORK_VERSION};
pub use params::{Architecture, InitRule, Layer, NetworkParams};
pub use train::{train, train_from, TrainConfig, TrainOutcome};
