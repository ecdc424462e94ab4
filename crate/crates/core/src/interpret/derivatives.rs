//! Exact input derivatives of a fitted network.
//!
//! The Jacobian is the chain-rule product
//! `f'_L(Z^(L)) W^(L) D(Z^(L-1)) W^(L-1) … D(Z^(1)) W^(1)` with
//! `D(Z)_ii = f'(Z_i)`, evaluated by one backward sweep.
//!
//! The Hessian of a single-hidden-layer net with identity output has the
//! closed form `H_ij = Σ_k W^(2)_k f''(Z_k) W^(1)_ki W^(1)_kj`. Deeper nets use
//! forward-over-reverse differentiation: each input direction `e_i` is pushed
//! forward as a tangent `dZ^(l) = W^(l) dA^(l-1)`, `dA^(l) = f'(Z^(l)) dZ^(l)`,
//! and the backward sweep is differentiated along it,
//!
//! ```text
//! r^(l-1)  = f'(Z^(l-1)) ⊙ W^(l)ᵀ r^(l)
//! dr^(l-1) = f''(Z^(l-1)) ⊙ dZ^(l-1) ⊙ W^(l)ᵀ r^(l) + f'(Z^(l-1)) ⊙ W^(l)ᵀ dr^(l)
//! ```
//!
//! giving column `i` of the Hessian as `W^(1)ᵀ dr^(1)`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::nn::{forward, Activation, LayerState, NetworkParams};
use crate::scalar::Scalar;

fn require_smooth<T: Scalar>(params: &NetworkParams<T>) -> Result<()> {
    if params.has_relu() {
        return Err(Error::NonDifferentiable);
    }
    Ok(())
}

fn backward_rows<T: Scalar>(params: &NetworkParams<T>, state: &LayerState<T>) -> Vec<Array1<T>> {
    // r[l] = dŷ/dZ^(l)
    let layers = params.layers();
    let n = layers.len();
    let mut r: Vec<Array1<T>> = vec![Array1::zeros(0); n];
    r[n - 1] = state.pre_activations[n - 1].mapv(|z| layers[n - 1].activation.derivative(z));
    for l in (1..n).rev() {
        let g = layers[l].weights.t().dot(&r[l]);
        let act = layers[l - 1].activation;
        r[l - 1] = &g * &state.pre_activations[l - 1].mapv(|z| act.derivative(z));
    }
    r
}

/// Gradient of the scalar output with respect to the inputs at `x`.
pub fn jacobian<T: Scalar>(params: &NetworkParams<T>, x: ArrayView1<T>) -> Result<Array1<T>> {
    require_smooth(params)?;
    let (_, state) = forward(params, x)?;
    let r = backward_rows(params, &state);
    Ok(params.layers()[0].weights.t().dot(&r[0]))
}

/// Symmetric `K × K` Hessian of the scalar output with respect to the inputs.
pub fn hessian<T: Scalar>(params: &NetworkParams<T>, x: ArrayView1<T>) -> Result<Array2<T>> {
    require_smooth(params)?;
    let layers = params.layers();
    let (_, state) = forward(params, x)?;
    let raw = if layers.len() == 2 && layers[1].activation == Activation::Identity {
        single_layer_hessian(params, &state)
    } else {
        forward_over_reverse(params, &state)
    };
    Ok(symmetrize(raw))
}

fn single_layer_hessian<T: Scalar>(params: &NetworkParams<T>, state: &LayerState<T>) -> Array2<T> {
    let (hidden, out) = (&params.layers()[0], &params.layers()[1]);
    let k = hidden.in_dim();
    let mut h = Array2::zeros((k, k));
    for unit in 0..hidden.out_dim() {
        let c = out.weights[[0, unit]] * hidden.activation.second_derivative(state.pre_activations[0][unit]);
        if c == T::zero() {
            continue;
        }
        let row = hidden.weights.row(unit);
        for i in 0..k {
            for j in 0..k {
                h[[i, j]] += c * (row[i] * row[j]);
            }
        }
    }
    h
}

fn forward_over_reverse<T: Scalar>(params: &NetworkParams<T>, state: &LayerState<T>) -> Array2<T> {
    let layers = params.layers();
    let n = layers.len();
    let k = params.input_dim();
    let z = &state.pre_activations;
    let r = backward_rows(params, state);
    let mut h = Array2::zeros((k, k));
    for i in 0..k {
        let mut dz: Vec<Array1<T>> = Vec::with_capacity(n);
        let mut da = Array1::zeros(k);
        da[i] = T::one();
        for (l, layer) in layers.iter().enumerate() {
            let d = layer.weights.dot(&da);
            da = &d * &z[l].mapv(|v| layer.activation.derivative(v));
            dz.push(d);
        }
        let out_act = layers[n - 1].activation;
        let mut dr = &dz[n - 1] * &z[n - 1].mapv(|v| out_act.second_derivative(v));
        for l in (1..n).rev() {
            let g = layers[l].weights.t().dot(&r[l]);
            let dg = layers[l].weights.t().dot(&dr);
            let act = layers[l - 1].activation;
            let f1 = z[l - 1].mapv(|v| act.derivative(v));
            let f2 = z[l - 1].mapv(|v| act.second_derivative(v));
            dr = &(&(&f2 * &dz[l - 1]) * &g) + &(&f1 * &dg);
        }
        let col = layers[0].weights.t().dot(&dr);
        h.column_mut(i).assign(&col);
    }
    h
}

/// Upper triangle averaged with the lower and mirrored, so `H == Hᵀ` exactly.
fn symmetrize<T: Scalar>(mut h: Array2<T>) -> Array2<T> {
    let k = h.nrows();
    let half = T::lit(0.5);
    for i in 0..k {
        for j in (i + 1)..k {
            let v = (h[[i, j]] + h[[j, i]]) * half;
            h[[i, j]] = v;
            h[[j, i]] = v;
        }
    }
    h
}

/// Box `[min(W̃, 0), max(W̃, 0)]` built from the plain weight product
/// `W̃ = W^(L) ⋯ W^(1)`, as a `(lower, upper)` pair per input.
///
/// Only guaranteed to contain the Jacobian when every path from an input to
/// the output has the same sign (e.g. one hidden unit); with mixed-sign paths
/// cancellation in `W̃` can make it too narrow. See [`path_sensitivity_box`].
pub fn weight_product_box<T: Scalar>(params: &NetworkParams<T>) -> (Array1<T>, Array1<T>) {
    let w = params.weight_product();
    (w.mapv(|v| v.min(T::zero())), w.mapv(|v| v.max(T::zero())))
}

/// Box from summing the negative and positive input-to-output path products
/// separately: `lower = (W̃ − |W|̃)/2`, `upper = (W̃ + |W|̃)/2` where `|W|̃`
/// multiplies absolute weight matrices. Valid for any network whose
/// activations have derivatives in `[0, 1]` (tanh, identity).
pub fn path_sensitivity_box<T: Scalar>(params: &NetworkParams<T>) -> (Array1<T>, Array1<T>) {
    let w = params.weight_product();
    let a = params.abs_weight_product();
    let half = T::lit(0.5);
    (
        (&w - &a).mapv(|v| v * half),
        (&w + &a).mapv(|v| v * half),
    )
}
