use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{require_single_relu_layer, unit_contributions, InputDistribution};
use super::spec::ReluJacobianSpec;
use crate::error::{Error, Result};
use crate::nn::NetworkParams;

/// Samples per RNG stream. Results depend on the seed and this layout only,
/// not on the thread count.
pub const MC_BLOCK: usize = 1 << 16;

/// Sample moments of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McMoments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

impl McMoments {
    /// `sqrt(variance / n)`.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    n: usize,
    mean: f64,
    m2: f64,
    upper: usize,
    lower: usize,
}

impl Partial {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Partial) -> Partial {
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Partial {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
            upper: self.upper + other.upper,
            lower: self.lower + other.lower,
        }
    }

    fn moments(&self) -> McMoments {
        McMoments {
            n: self.n,
            mean: self.mean,
            variance: self.m2 / (self.n - 1) as f64,
        }
    }
}

fn run_blocks<F>(n_samples: usize, seed: u64, block: F) -> Partial
where
    F: Fn(&mut ChaCha8Rng, usize) -> Partial + Sync,
{
    let n_blocks = n_samples.div_ceil(MC_BLOCK);
    let partials: Vec<Partial> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            block(&mut rng, len)
        })
        .collect();
    partials.into_iter().fold(Partial::default(), Partial::merge)
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n_samples}")));
    }
    Ok(())
}

/// Sample moments of `∂ŷ/∂x_input` for a single-hidden-layer ReLU network,
/// with every input coordinate drawn independently from `dist` and the
/// Jacobian evaluated through its indicator decomposition `Σ_k c_k 1{Z_k > 0}`.
pub fn relu_jacobian_mc(
    params: &NetworkParams<f64>,
    input: usize,
    dist: &InputDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<McMoments> {
    require_single_relu_layer(params)?;
    check_samples(n_samples)?;
    let sampler = dist.sampler()?;
    let c = unit_contributions(params, input)?;
    let hidden = &params.layers()[0];
    let k = params.input_dim();
    let stats = run_blocks(n_samples, seed, |rng, len| {
        let mut part = Partial::default();
        let mut x = vec![0.0; k];
        for _ in 0..len {
            x.iter_mut().for_each(|v| *v = sampler.sample(rng));
            let j: f64 = (0..hidden.out_dim())
                .filter(|&u| {
                    let z: f64 = hidden.weights.row(u).iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + hidden.bias[u];
                    z > 0.0
                })
                .map(|u| c[u])
                .sum();
            part.push(j);
        }
        part
    });
    Ok(stats.moments())
}

/// Monte Carlo of `J = Σ a_k X_k` with independent `X_k ~ Bernoulli(p_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliTails {
    pub moments: McMoments,
    /// Observed frequency of `J > (1+δ)μ`.
    pub upper_frequency: f64,
    /// Observed frequency of `J − μ < −γμ`.
    pub lower_frequency: f64,
}

pub fn bernoulli_tails_mc(
    spec: &ReluJacobianSpec<f64>,
    delta: f64,
    gamma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<BernoulliTails> {
    check_samples(n_samples)?;
    let mu = spec.mean();
    let (hi, lo) = ((1.0 + delta) * mu, mu - gamma * mu);
    let stats = run_blocks(n_samples, seed, |rng, len| {
        let mut part = Partial::default();
        for _ in 0..len {
            let j: f64 = spec
                .coefficients
                .iter()
                .zip(&spec.probabilities)
                .filter(|(_, &p)| rng.random::<f64>() < p)
                .map(|(a, _)| a)
                .sum();
            part.upper += usize::from(j > hi);
            part.lower += usize::from(j < lo);
            part.push(j);
        }
        part
    });
    let n = stats.n as f64;
    Ok(BernoulliTails {
        moments: stats.moments(),
        upper_frequency: stats.upper as f64 / n,
        lower_frequency: stats.lower as f64 / n,
    })
}

/// Mean and variance of a ReLU Jacobian entry three ways: the printed
/// closed form, the exact partition moments, and Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComparison {
    pub mean_formula: f64,
    pub variance_paper: f64,
    pub variance_partition: f64,
    pub monte_carlo: McMoments,
}

pub fn compare_variances(
    params: &NetworkParams<f64>,
    dist: &InputDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<VarianceComparison> {
    let spec = super::partition::relu_partition(params, dist)?;
    Ok(VarianceComparison {
        mean_formula: spec.mean(),
        variance_paper: spec.variance_paper(),
        variance_partition: spec.variance_partition(),
        monte_carlo: relu_jacobian_mc(params, 0, dist, n_samples, seed)?,
    })
}
