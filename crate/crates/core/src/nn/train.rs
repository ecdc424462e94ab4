use ndarray::{ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop::{backprop_unchecked, validate_batch, Penalty};
use super::params::{Architecture, InitRule, NetworkParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Plain minibatch SGD settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l1_lambda: f64,
    pub l2_lambda: f64,
    pub seed: u64,
    /// RNG stream id, so concurrent fits sharing a seed draw independent numbers.
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub init: InitRule,
    /// Penalize biases as well as weights.
    #[serde(default)]
    pub penalize_bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            batch_size: 32,
            l1_lambda: 0.0,
            l2_lambda: 0.0,
            seed: 0,
            stream: 0,
            init: InitRule::Glorot,
            penalize_bias: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.l1_lambda >= 0.0) || !(self.l2_lambda >= 0.0) {
            return Err(Error::InvalidArgument("penalties must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn penalty<T: Scalar>(&self) -> Penalty<T> {
        Penalty {
            l1: T::lit(self.l1_lambda),
            l2: T::lit(self.l2_lambda),
            include_bias: self.penalize_bias,
        }
    }

    /// Same settings on another RNG stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Fitted parameters and the per-epoch objective.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: NetworkParams<T>,
    /// Sample-weighted mean of the minibatch objectives seen during each epoch.
    pub loss_trace: Vec<T>,
}

/// Initializes a network for `architecture` and fits it to `(x, y)`.
///
/// `loss_weights` are per-sample inverse residual variances; `None` means
/// homoscedastic (all ones). Deterministic for a given seed and stream.
pub fn train<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    architecture: &Architecture,
    config: &TrainConfig,
    loss_weights: Option<ArrayView1<T>>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let mut rng = config.rng();
    let params = NetworkParams::init(x.ncols(), architecture, config.init, &mut rng)?;
    sgd(params, x, y, config, loss_weights, &mut rng)
}

/// Continues fitting from existing parameters.
pub fn train_from<T: Scalar>(
    initial: NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    config: &TrainConfig,
    loss_weights: Option<ArrayView1<T>>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let mut rng = config.rng();
    sgd(initial, x, y, config, loss_weights, &mut rng)
}

fn sgd<T: Scalar>(
    mut params: NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    config: &TrainConfig,
    loss_weights: Option<ArrayView1<T>>,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome<T>> {
    validate_batch(&params, x, y, loss_weights)?;
    let n = x.nrows();
    let lr = T::lit(config.learning_rate);
    let penalty = config.penalty::<T>();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut last_finite: Option<usize> = None;

    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut epoch_loss = T::zero();
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let xb = x.select(Axis(0), chunk);
            let yb = y.select(Axis(0), chunk);
            let wb = loss_weights.map(|w| w.select(Axis(0), chunk));
            let step = backprop_unchecked(&params, xb.view(), yb.view(), wb.as_ref().map(|w| w.view()), &penalty)
                .map_err(|stage| {
                    log::warn!("non-finite {stage} at epoch {epoch}, batch {b}");
                    Error::Diverged {
                        last_finite_epoch: last_finite,
                    }
                })?;
            epoch_loss += step.loss * T::from_usize(chunk.len()).expect("batch len");
            for (l, layer) in params.layers_mut().iter_mut().enumerate() {
                Zip::from(&mut layer.weights)
                    .and(&step.gradient.weights[l])
                    .for_each(|w, &g| *w -= lr * g);
                Zip::from(&mut layer.bias)
                    .and(&step.gradient.biases[l])
                    .for_each(|w, &g| *w -= lr * g);
            }
        }
        let epoch_loss = epoch_loss / T::from_usize(n).expect("n");
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged {
                last_finite_epoch: last_finite,
            });
        }
        last_finite = Some(epoch);
        loss_trace.push(epoch_loss);
    }
    if params
        .layers()
        .iter()
        .any(|l| l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
    {
        return Err(Error::Diverged {
            last_finite_epoch: last_finite,
        });
    }
    Ok(TrainOutcome { params, loss_trace })
}
