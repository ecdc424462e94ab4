use num_traits::Num;

use crate::error::{Error, Result};

/// ReLU Jacobian entry written as `J = Σ_k a_k 1_k` over indicator events
/// with probabilities `p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluJacobianSpec<T> {
    pub coefficients: Vec<T>,
    pub probabilities: Vec<T>,
    /// Lower interval endpoints when the events partition a scalar input.
    pub thresholds: Option<Vec<T>>,
}

impl<T: Num + PartialOrd + Clone> ReluJacobianSpec<T> {
    pub fn new(coefficients: Vec<T>, probabilities: Vec<T>) -> Result<Self> {
        if coefficients.len() != probabilities.len() {
            return Err(Error::DimensionMismatch {
                context: "indicator probabilities".into(),
                expected: coefficients.len(),
                actual: probabilities.len(),
            });
        }
        if coefficients.is_empty() {
            return Err(Error::Empty("indicator coefficients".into()));
        }
        if let Some(k) = probabilities.iter().position(|p| *p < T::zero() || *p > T::one()) {
            return Err(Error::InvalidArgument(format!("probability {k} outside [0, 1]")));
        }
        Ok(Self {
            coefficients,
            probabilities,
            thresholds: None,
        })
    }

    /// Weights chosen so the mean is `mu`: `a_k = μ / (n p_k)`.
    pub fn constrained(mu: T, probabilities: Vec<T>) -> Result<Self> {
        if probabilities.iter().any(|p| *p == T::zero()) {
            return Err(Error::InvalidArgument("constrained weights need p_k > 0".into()));
        }
        let n = probabilities.iter().fold(T::zero(), |acc, _| acc + T::one());
        let coefficients = probabilities
            .iter()
            .map(|p| mu.clone() / (n.clone() * p.clone()))
            .collect();
        Self::new(coefficients, probabilities)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn probability_sum(&self) -> T {
        self.probabilities.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// `μ = Σ a_k p_k`.
    pub fn mean(&self) -> T {
        self.terms(|a, p| a * p)
    }

    /// `Σ a_k p_k (1 − p_k)`, linear in `a_k`.
    pub fn variance_paper(&self) -> T {
        self.terms(|a, p| a * p.clone() * (T::one() - p))
    }

    /// Exact variance when the events are mutually exclusive and exhaustive
    /// (`Σ p_k = 1`): `Σ a_k² p_k − μ²`.
    pub fn variance_partition(&self) -> T {
        let mu = self.mean();
        self.terms(|a, p| a.clone() * a * p) - mu.clone() * mu
    }

    /// Exact variance for independent Bernoulli events: `Σ a_k² p_k (1 − p_k)`.
    pub fn variance_independent(&self) -> T {
        self.terms(|a, p| a.clone() * a * p.clone() * (T::one() - p))
    }

    /// `¼ Σ a_k`, the general bound on [`Self::variance_paper`] for `a_k > 0`.
    pub fn variance_bound(&self) -> T {
        let four = T::one() + T::one() + T::one() + T::one();
        self.coefficients.iter().cloned().fold(T::zero(), |a, b| a + b) / four
    }

    fn terms(&self, f: impl Fn(T, T) -> T) -> T {
        self.coefficients
            .iter()
            .zip(&self.probabilities)
            .fold(T::zero(), |acc, (a, p)| acc + f(a.clone(), p.clone()))
    }
}

impl ReluJacobianSpec<f64> {
    /// Coefficients divided by `max |a_k|`, so they lie in `[−1, 1]`, and the
    /// factor that was divided out.
    pub fn rescaled(&self) -> (Self, f64) {
        let scale = self.coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            return (self.clone(), 1.0);
        }
        let spec = Self {
            coefficients: self.coefficients.iter().map(|a| a / scale).collect(),
            probabilities: self.probabilities.clone(),
            thresholds: self.thresholds.clone(),
        };
        (spec, scale)
    }
}
