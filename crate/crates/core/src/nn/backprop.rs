//! Exact gradient of the weighted, penalized squared-error objective
//!
//! ```text
//! (1/B) Σ_i w_i (y_i - ŷ_i)²  +  λ₁ Σ|W|  +  λ₂ Σ W²
//! ```
//!
//! over a batch of `B` samples. Biases join the penalty only when
//! [`Penalty::include_bias`] is set.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::forward::forward_batch;
use super::params::NetworkParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Regularization strengths for the weight penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty<T> {
    pub l1: T,
    pub l2: T,
    pub include_bias: bool,
}

impl<T: Scalar> Penalty<T> {
    pub fn none() -> Self {
        Self {
            l1: T::zero(),
            l2: T::zero(),
            include_bias: false,
        }
    }

    pub fn value(&self, params: &NetworkParams<T>) -> T {
        let mut total = T::zero();
        for layer in params.layers() {
            let mut acc = |v: T| {
                total += self.l1 * v.abs() + self.l2 * v * v;
            };
            layer.weights.iter().copied().for_each(&mut acc);
            if self.include_bias {
                layer.bias.iter().copied().for_each(&mut acc);
            }
        }
        total
    }
}

/// Gradient with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros_like(params: &NetworkParams<T>) -> Self {
        Self {
            weights: params.layers().iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: params.layers().iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Objective value and its gradient at the current parameters.
#[derive(Debug, Clone)]
pub struct Backprop<T> {
    pub loss: T,
    pub gradient: Gradient<T>,
}

#[inline]
fn l1_subgradient<T: Scalar>(w: T) -> T {
    if w > T::zero() {
        T::one()
    } else if w < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Loss and gradient over the batch `(x, y, weights)`; `weights` are the
/// per-sample inverse variances σ⁻² and default to one.
pub fn backprop<T: Scalar>(
    params: &NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    weights: Option<ArrayView1<T>>,
    penalty: &Penalty<T>,
) -> Result<Backprop<T>> {
    validate_batch(params, x, y, weights)?;
    backprop_unchecked(params, x, y, weights, penalty).map_err(|stage| Error::NonFinite {
        epoch: 0,
        batch: 0,
        context: stage.into(),
    })
}

pub(crate) fn validate_batch<T: Scalar>(
    params: &NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    weights: Option<ArrayView1<T>>,
) -> Result<()> {
    if x.ncols() != params.input_dim() {
        return Err(Error::LayerDimension {
            layer: 0,
            expected: params.input_dim(),
            actual: x.ncols(),
        });
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            context: "targets".into(),
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::Empty("batch has no samples".into()));
    }
    if let Some(w) = weights {
        if w.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                context: "loss weights".into(),
                expected: x.nrows(),
                actual: w.len(),
            });
        }
        if let Some(i) = w.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loss weight {} at sample {i} is not strictly positive",
                w[i]
            )));
        }
    }
    Ok(())
}

/// Hot-path version without shape checks; `Err` names the stage that went non-finite.
pub(crate) fn backprop_unchecked<T: Scalar>(
    params: &NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    weights: Option<ArrayView1<T>>,
    penalty: &Penalty<T>,
) -> std::result::Result<Backprop<T>, &'static str> {
    let layers = params.layers();
    let n = T::from_usize(x.nrows()).expect("batch size");
    let (pre, post) = forward_batch(params, x);
    let y_hat = post.last().expect("layers").column(0);

    // dL/dŷ_i = -2 w_i (y_i - ŷ_i) / B
    let mut data_loss = T::zero();
    let mut delta = Array2::<T>::zeros((x.nrows(), 1));
    for i in 0..x.nrows() {
        let w = weights.map_or(T::one(), |w| w[i]);
        let r = y[i] - y_hat[i];
        data_loss += w * r * r;
        delta[[i, 0]] = -T::lit(2.0) * w * r / n;
    }
    let loss = data_loss / n + penalty.value(params);
    if !loss.is_finite() {
        return Err("loss");
    }

    let mut grad = Gradient::zeros_like(params);
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        // delta currently holds dL/dA^(l); convert to dL/dZ^(l).
        if layer.activation != super::Activation::Identity {
            Zip::from(&mut delta)
                .and(&pre[l])
                .and(&post[l])
                .for_each(|d, &z, &a| *d *= layer.activation.derivative_from_output(z, a));
        }
        let input = if l == 0 { x } else { post[l - 1].view() };
        grad.weights[l] = delta.t().dot(&input);
        grad.biases[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            delta = delta.dot(&layer.weights);
        }
    }

    let two = T::lit(2.0);
    for (l, layer) in layers.iter().enumerate() {
        if penalty.l1 != T::zero() || penalty.l2 != T::zero() {
            Zip::from(&mut grad.weights[l])
                .and(&layer.weights)
                .for_each(|g, &w| *g += penalty.l1 * l1_subgradient(w) + two * penalty.l2 * w);
            if penalty.include_bias {
                Zip::from(&mut grad.biases[l])
                    .and(&layer.bias)
                    .for_each(|g, &b| *g += penalty.l1 * l1_subgradient(b) + two * penalty.l2 * b);
            }
        }
    }
    if !grad.max_abs().is_finite() {
        return Err("gradient");
    }
    Ok(Backprop { loss, gradient: grad })
}

/// Objective value only, sharing the conventions of [`backprop`].
pub fn objective<T: Scalar>(
    params: &NetworkParams<T>,
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    weights: Option<ArrayView1<T>>,
    penalty: &Penalty<T>,
) -> Result<T> {
    validate_batch(params, x, y, weights)?;
    let (_, post) = forward_batch(params, x);
    let y_hat = post.last().expect("layers").column(0);
    let mut total = T::zero();
    for i in 0..x.nrows() {
        let w = weights.map_or(T::one(), |w| w[i]);
        let r = y[i] - y_hat[i];
        total += w * r * r;
    }
    Ok(total / T::from_usize(x.nrows()).expect("n") + penalty.value(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_sample_linear_gradient() {
        let net = NetworkParams::linear(&[0.0, 0.0], 0.0).unwrap();
        let x = array![[1.0, 0.0]];
        let y = array![1.0];
        let w = array![1.0];
        let bp = backprop(&net, x.view(), y.view(), Some(w.view()), &Penalty::none()).unwrap();
        assert_eq!(bp.gradient.weights[0], array![[-2.0, 0.0]]);
        assert_eq!(bp.gradient.biases[0], array![-2.0]);
        assert_eq!(bp.loss, 1.0);
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let net = NetworkParams::linear(&[2.0, -1.0], 0.5).unwrap();
        let x = array![[1.0, 1.0], [0.0, 3.0], [-2.0, 0.5]];
        let y = x.dot(&array![2.0, -1.0]) + 0.5;
        let bp = backprop(&net, x.view(), y.view(), None, &Penalty::none()).unwrap();
        assert_eq!(bp.gradient.max_abs(), 0.0);
    }

    #[test]
    fn l1_subgradient_zero_at_zero() {
        let net = NetworkParams::linear(&[0.0, 1.0], 0.0).unwrap();
        let x = array![[0.0, 0.0]];
        let y = array![0.0];
        let pen = Penalty { l1: 0.5, l2: 0.0, include_bias: false };
        let bp = backprop(&net, x.view(), y.view(), None, &pen).unwrap();
        assert_eq!(bp.gradient.weights[0], array![[0.0, 0.5]]);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let net = NetworkParams::linear(&[1.0], 0.0).unwrap();
        let x = array![[1.0]];
        let y = array![1.0];
        let w = array![0.0];
        assert!(backprop(&net, x.view(), y.view(), Some(w.view()), &Penalty::none()).is_err());
    }

    #[test]
    fn non_finite_is_reported() {
        let net = NetworkParams::linear(&[1e200], 0.0).unwrap();
        let x = array![[1e200]];
        let y = array![0.0];
        match backprop(&net, x.view(), y.view(), None, &Penalty::none()) {
            Err(Error::NonFinite { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn gradient_matches_finite_differences(seed in 0u64..500, depth in 0usize..3) {
            use crate::nn::{Architecture, InitRule};
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..5)).collect();
            let mut net = NetworkParams::<f64>::init(3, &Architecture::tanh(&hidden), InitRule::Uniform(1.0), &mut rng).unwrap();
            for layer in net.layers_mut() {
                layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            }
            let x = ndarray::Array2::from_shape_simple_fn((7, 3), || rng.random_range(-2.0..2.0));
            let y = ndarray::Array1::from_shape_simple_fn(7, || rng.random_range(-1.0..1.0));
            let w = ndarray::Array1::from_shape_simple_fn(7, || rng.random_range(0.5..2.0));
            let pen = Penalty { l1: 0.01, l2: 0.02, include_bias: true };
            let bp = backprop(&net, x.view(), y.view(), Some(w.view()), &pen).unwrap();
            let h = 1e-6;
            for l in 0..net.layers().len() {
                let (rows, cols) = net.layers()[l].weights.dim();
                for r in 0..rows {
                    for c in 0..cols {
                        let mut plus = net.clone();
                        plus.layers_mut()[l].weights[[r, c]] += h;
                        let mut minus = net.clone();
                        minus.layers_mut()[l].weights[[r, c]] -= h;
                        let fd = (objective(&plus, x.view(), y.view(), Some(w.view()), &pen).unwrap()
                            - objective(&minus, x.view(), y.view(), Some(w.view()), &pen).unwrap())
                            / (2.0 * h);
                        proptest::prop_assert!((fd - bp.gradient.weights[l][[r, c]]).abs() < 1e-6 * (1.0 + fd.abs()));
                    }
                    let mut plus = net.clone();
                    plus.layers_mut()[l].bias[r] += h;
                    let mut minus = net.clone();
                    minus.layers_mut()[l].bias[r] -= h;
                    let fd = (objective(&plus, x.view(), y.view(), Some(w.view()), &pen).unwrap()
                        - objective(&minus, x.view(), y.view(), Some(w.view()), &pen).unwrap())
                        / (2.0 * h);
                    proptest::prop_assert!((fd - bp.gradient.biases[l][r]).abs() < 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }
}
