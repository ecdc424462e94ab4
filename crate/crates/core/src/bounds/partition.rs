use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use super::spec::ReluJacobianSpec;
use crate::error::{Error, Result};
use crate::nn::{Activation, NetworkParams};

/// Distribution of each network input coordinate (drawn independently).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputDistribution {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl InputDistribution {
    pub fn standard_normal() -> Self {
        InputDistribution::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InputDistribution::Normal { mean, sd } if mean.is_finite() && sd > 0.0 && sd.is_finite() => Ok(()),
            InputDistribution::Uniform { low, high } if low.is_finite() && high.is_finite() && low < high => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid input distribution {other:?}"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            InputDistribution::Normal { mean, sd } => {
                NormalCdf::new(mean, sd).expect("validated normal").cdf(x)
            }
            InputDistribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
        }
    }

    pub(crate) fn sampler(&self) -> Result<InputSampler> {
        self.validate()?;
        Ok(match *self {
            InputDistribution::Normal { mean, sd } => InputSampler::Normal(Normal::new(mean, sd).expect("validated")),
            InputDistribution::Uniform { low, high } => {
                InputSampler::Uniform(Uniform::new(low, high).expect("validated"))
            }
        })
    }
}

pub(crate) enum InputSampler {
    Normal(Normal<f64>),
    Uniform(Uniform<f64>),
}

impl InputSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InputSampler::Normal(d) => d.sample(rng),
            InputSampler::Uniform(d) => d.sample(rng),
        }
    }
}

pub(crate) fn require_single_relu_layer(params: &NetworkParams<f64>) -> Result<()> {
    let layers = params.layers();
    if layers.len() != 2 || layers[0].activation != Activation::Relu || layers[1].activation != Activation::Identity {
        return Err(Error::Unsupported(
            "indicator decomposition needs one ReLU hidden layer and an identity output".into(),
        ));
    }
    Ok(())
}

/// `c_k = W^(2)_k W^(1)_kj`: the contribution of hidden unit `k` to `∂ŷ/∂x_j`
/// while it is active.
pub fn unit_contributions(params: &NetworkParams<f64>, input: usize) -> Result<Vec<f64>> {
    require_single_relu_layer(params)?;
    if input >= params.input_dim() {
        return Err(Error::InvalidArgument(format!("input {input} out of range")));
    }
    let (hidden, out) = (&params.layers()[0], &params.layers()[1]);
    Ok((0..hidden.out_dim())
        .map(|k| out.weights[[0, k]] * hidden.weights[[k, input]])
        .collect())
}

/// Interval decomposition of the Jacobian of a scalar-input ReLU network.
///
/// Unit `k` switches at `x_k = −b_k / W_k`. Sorting the switch points splits
/// the real line into intervals on which `J` is constant; interval `k` gets
/// coefficient `a_k` (the Jacobian there) and probability `p_k` under `dist`.
/// Empty intervals (tied switch points, zero mass) are dropped, so the events
/// are mutually exclusive with `Σ p_k = 1` up to rounding. `thresholds` holds
/// each interval's lower endpoint (`−∞` for the first).
pub fn relu_partition(params: &NetworkParams<f64>, dist: &InputDistribution) -> Result<ReluJacobianSpec<f64>> {
    require_single_relu_layer(params)?;
    dist.validate()?;
    if params.input_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "interval partition needs a scalar input, network has {}",
            params.input_dim()
        )));
    }
    let c = unit_contributions(params, 0)?;
    let hidden = &params.layers()[0];
    let mut cuts: Vec<f64> = (0..hidden.out_dim())
        .filter(|&k| hidden.weights[[k, 0]] != 0.0)
        .map(|k| -hidden.bias[k] / hidden.weights[[k, 0]])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let jacobian_at = |x: f64| -> f64 {
        (0..hidden.out_dim())
            .filter(|&k| hidden.weights[[k, 0]] * x + hidden.bias[k] > 0.0)
            .map(|k| c[k])
            .sum()
    };
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend(&cuts);
    edges.push(f64::INFINITY);

    let (mut a, mut p, mut lower) = (Vec::new(), Vec::new(), Vec::new());
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let prob = dist.cdf(hi) - dist.cdf(lo);
        if prob <= 0.0 {
            continue;
        }
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (false, true) => hi - 1.0,
            (true, false) => lo + 1.0,
            (false, false) => 0.0,
        };
        a.push(jacobian_at(probe));
        p.push(prob);
        lower.push(lo);
    }
    let mut spec = ReluJacobianSpec::new(a, p)?;
    spec.thresholds = Some(lower);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use ndarray::array;

    fn relu_net(w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>) -> NetworkParams<f64> {
        let h = w1.len();
        NetworkParams::new(vec![
            Layer::new(
                ndarray::Array2::from_shape_vec((h, 1), w1).unwrap(),
                ndarray::Array1::from(b1),
                Activation::Relu,
            )
            .unwrap(),
            Layer::new(
                ndarray::Array2::from_shape_vec((1, h), w2).unwrap(),
                array![0.0],
                Activation::Identity,
            )
            .unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn one_unit_is_bernoulli_half() {
        let net = relu_net(vec![1.0], vec![0.0], vec![1.0]);
        let spec = relu_partition(&net, &InputDistribution::standard_normal()).unwrap();
        assert_eq!(spec.coefficients, vec![0.0, 1.0]);
        assert_eq!(spec.probabilities, vec![0.5, 0.5]);
        assert_eq!(spec.mean(), 0.5);
        assert_eq!(spec.variance_partition(), 0.25);
    }

    #[test]
    fn staircase_on_uniform() {
        // Units switch on at 0.25, 0.5, 0.75 with unit contributions.
        let net = relu_net(vec![1.0, 1.0, 1.0], vec![-0.25, -0.5, -0.75], vec![1.0, 1.0, 1.0]);
        let spec = relu_partition(&net, &InputDistribution::Uniform { low: 0.0, high: 1.0 }).unwrap();
        assert_eq!(spec.coefficients, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(spec.probabilities, vec![0.25, 0.25, 0.25, 0.25]);
        assert_eq!(spec.thresholds.as_ref().unwrap()[1..], [0.25, 0.5, 0.75]);
        assert_eq!(spec.mean(), 1.5);
        assert_eq!(spec.variance_partition(), 1.25);
    }

    #[test]
    fn ties_and_empty_intervals_dropped() {
        let net = relu_net(vec![1.0, 2.0, 1.0], vec![-0.5, -1.0, -5.0], vec![1.0, 1.0, 1.0]);
        let spec = relu_partition(&net, &InputDistribution::Uniform { low: 0.0, high: 1.0 }).unwrap();
        assert_eq!(spec.len(), 2);
        assert!((spec.probability_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn never_active_units() {
        let net = relu_net(vec![0.0, 0.0], vec![-1e6, -1e6], vec![1.0, -2.0]);
        let spec = relu_partition(&net, &InputDistribution::standard_normal()).unwrap();
        assert_eq!(spec.coefficients, vec![0.0]);
        assert_eq!(spec.variance_partition(), 0.0);
    }

    #[test]
    fn rejects_tanh_and_multi_input() {
        let net = NetworkParams::new(vec![
            Layer::new(array![[1.0]], array![0.0], Activation::Tanh).unwrap(),
            Layer::new(array![[1.0]], array![0.0], Activation::Identity).unwrap(),
        ])
        .unwrap();
        assert!(relu_partition(&net, &InputDistribution::standard_normal()).is_err());
        let wide = NetworkParams::new(vec![
            Layer::new(array![[1.0, 1.0]], array![0.0], Activation::Relu).unwrap(),
            Layer::new(array![[1.0]], array![0.0], Activation::Identity).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            relu_partition(&wide, &InputDistribution::standard_normal()),
            Err(Error::Unsupported(_))
        ));
        assert_eq!(unit_contributions(&wide, 1).unwrap(), vec![1.0]);
    }
}
