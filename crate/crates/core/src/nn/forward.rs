use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::NetworkParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-layer pre-activations `Z^(l)` and post-activations from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState<T> {
    pub pre_activations: Vec<Array1<T>>,
    pub post_activations: Vec<Array1<T>>,
}

/// Evaluates the network on one input vector and records every layer's state.
pub fn forward<T: Scalar>(params: &NetworkParams<T>, x: ArrayView1<T>) -> Result<(T, LayerState<T>)> {
    let mut pre = Vec::with_capacity(params.layers().len());
    let mut post: Vec<Array1<T>> = Vec::with_capacity(params.layers().len());
    for (l, layer) in params.layers().iter().enumerate() {
        let input = if l == 0 { x } else { post[l - 1].view() };
        if input.len() != layer.in_dim() {
            return Err(Error::LayerDimension {
                layer: l,
                expected: layer.in_dim(),
                actual: input.len(),
            });
        }
        let z = layer.weights.dot(&input) + &layer.bias;
        let a = z.mapv(|v| layer.activation.apply(v));
        pre.push(z);
        post.push(a);
    }
    let prediction = post.last().expect("at least one layer")[0];
    Ok((
        prediction,
        LayerState {
            pre_activations: pre,
            post_activations: post,
        },
    ))
}

/// Scalar prediction for one input.
pub fn predict<T: Scalar>(params: &NetworkParams<T>, x: ArrayView1<T>) -> Result<T> {
    forward(params, x).map(|(y, _)| y)
}

/// Row-wise predictions for an `n × K` input matrix.
pub fn predict_batch<T: Scalar>(params: &NetworkParams<T>, x: ArrayView2<T>) -> Result<Array1<T>> {
    if x.ncols() != params.input_dim() {
        return Err(Error::LayerDimension {
            layer: 0,
            expected: params.input_dim(),
            actual: x.ncols(),
        });
    }
    let (_, post) = forward_batch(params, x);
    Ok(post.last().expect("layers").column(0).to_owned())
}

/// Batched forward pass. Row `i` of each matrix belongs to sample `i`.
/// Caller guarantees the input width.
pub(crate) fn forward_batch<T: Scalar>(
    params: &NetworkParams<T>,
    x: ArrayView2<T>,
) -> (Vec<Array2<T>>, Vec<Array2<T>>) {
    let n_layers = params.layers().len();
    let mut pre: Vec<Array2<T>> = Vec::with_capacity(n_layers);
    let mut post: Vec<Array2<T>> = Vec::with_capacity(n_layers);
    for (l, layer) in params.layers().iter().enumerate() {
        let input = if l == 0 { x } else { post[l - 1].view() };
        let mut z = input.dot(&layer.weights.t());
        z += &layer.bias.view().insert_axis(Axis(0));
        let a = z.mapv(|v| layer.activation.apply(v));
        pre.push(z);
        post.push(a);
    }
    (pre, post)
}
