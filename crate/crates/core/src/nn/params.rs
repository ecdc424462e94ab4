use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One semi-affine layer: `activation(weights · input + bias)`.
///
/// `weights` has shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: Array2<T>, bias: Array1<T>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::DimensionMismatch {
                context: "layer bias".into(),
                expected: weights.nrows(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Hidden-layer widths plus the hidden activation. The output layer is always
/// a single identity unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    /// Zero hidden layers: the network is an affine map (a linear factor model).
    pub fn linear() -> Self {
        Self {
            hidden: Vec::new(),
            activation: Activation::Identity,
        }
    }

    pub fn tanh(hidden: &[usize]) -> Self {
        Self {
            hidden: hidden.to_vec(),
            activation: Activation::Tanh,
        }
    }
}

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    /// Uniform on `[-s, s]`, `s = sqrt(6 / (in_dim + out_dim))`.
    #[default]
    Glorot,
    /// Uniform on `[-s, s]` for a fixed `s`.
    Uniform(f64),
}

/// Ordered layers of a feedforward network with a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> NetworkParams<T> {
    /// Validates dimension chaining, the scalar output, finiteness, and the
    /// identity-activation rule for networks without hidden layers.
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i,
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        let last = layers.last().expect("nonempty");
        if last.out_dim() != 1 {
            return Err(Error::InvalidNetwork(format!(
                "final layer must have one output, has {}",
                last.out_dim()
            )));
        }
        if layers.len() == 1 && last.activation != Activation::Identity {
            return Err(Error::InvalidNetwork(
                "a network without hidden layers must use the identity activation".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidNetwork(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// Random initialization for `architecture` on `input_dim` inputs; biases start at zero.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        architecture: &Architecture,
        rule: InitRule,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input dimension must be positive".into()));
        }
        if architecture.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidArgument("hidden layer widths must be positive".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend(&architecture.hidden);
        dims.push(1);
        let n_layers = dims.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (dims[l], dims[l + 1]);
                let s = match rule {
                    InitRule::Glorot => (6.0 / (fan_in + fan_out) as f64).sqrt(),
                    InitRule::Uniform(s) => s,
                };
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    T::lit(rng.random_range(-s..=s))
                });
                let activation = if l + 1 == n_layers {
                    Activation::Identity
                } else {
                    architecture.activation
                };
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        Self::new(layers)
    }

    /// Affine model `w · x + b` as a network without hidden layers.
    pub fn linear(weights: &[T], bias: T) -> Result<Self> {
        let w = Array2::from_shape_vec((1, weights.len()), weights.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(vec![Layer::new(w, Array1::from_elem(1, bias), Activation::Identity)?])
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn n_hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Hidden widths and the first hidden layer's activation.
    pub fn architecture(&self) -> Architecture {
        let hidden: Vec<usize> = self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::out_dim)
            .collect();
        let activation = self
            .layers
            .first()
            .filter(|_| !hidden.is_empty())
            .map_or(Activation::Identity, |l| l.activation);
        Architecture { hidden, activation }
    }

    pub fn has_relu(&self) -> bool {
        self.layers.iter().any(|l| l.activation == Activation::Relu)
    }

    /// `W^(L) · … · W^(1)`, a `1 × input_dim` row.
    pub fn weight_product(&self) -> Array1<T> {
        let mut acc = self.layers[0].weights.clone();
        for layer in &self.layers[1..] {
            acc = layer.weights.dot(&acc);
        }
        acc.row(0).to_owned()
    }

    /// `|W^(L)| · … · |W^(1)|`: the summed magnitude of every input-to-output path.
    pub fn abs_weight_product(&self) -> Array1<T> {
        let mut acc = self.layers[0].weights.mapv(T::abs);
        for layer in &self.layers[1..] {
            acc = layer.weights.mapv(T::abs).dot(&acc);
        }
        acc.row(0).to_owned()
    }

    /// Number of scalar parameters.
    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Element type conversion (e.g. `f64` → `f32`).
    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        NetworkParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.mapv(|v| U::lit(v.as_f64())),
                    bias: l.bias.mapv(|v| U::lit(v.as_f64())),
                    activation: l.activation,
                })
                .collect(),
        }
    }

    /// Sum of absolute weights (biases excluded).
    pub fn l1_norm_weights(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w.abs())
            .sum()
    }
}
