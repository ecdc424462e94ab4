use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::derivatives::{hessian, jacobian};
use crate::error::{Error, Result};
use crate::nn::NetworkParams;
use crate::scalar::Scalar;
use crate::stats;

/// How per-point sensitivities are collapsed into one importance score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

/// Empirical distribution summary of one input's sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSensitivity {
    pub input: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub q01: f64,
    pub q99: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `n_points × K` matrix of ∂ŷ/∂x_j at each evaluation point.
    pub per_input_jacobians: Array2<f64>,
    pub inputs: Vec<InputSensitivity>,
    /// Inputs ordered by descending importance score.
    pub ranking: Vec<usize>,
    pub aggregation: Aggregation,
}

impl SensitivityReport {
    /// |mean| or |median| per input, depending on the aggregation.
    pub fn importance(&self) -> Vec<f64> {
        self.inputs
            .iter()
            .map(|s| match self.aggregation {
                Aggregation::Mean => s.mean.abs(),
                Aggregation::Median => s.median.abs(),
            })
            .collect()
    }

    /// 1-based rank of each input.
    pub fn rank_of(&self, input: usize) -> usize {
        self.ranking.iter().position(|&i| i == input).expect("input in ranking") + 1
    }
}

/// Jacobian at every row of `inputs`, summarized per input with mean,
/// median, sample standard deviation and the empirical 1%/99% quantiles.
pub fn sensitivity_distribution<T: Scalar>(
    params: &NetworkParams<T>,
    inputs: ArrayView2<T>,
) -> Result<SensitivityReport> {
    sensitivity_distribution_with(params, inputs, Aggregation::Mean)
}

pub fn sensitivity_distribution_with<T: Scalar>(
    params: &NetworkParams<T>,
    inputs: ArrayView2<T>,
    aggregation: Aggregation,
) -> Result<SensitivityReport> {
    let n = inputs.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sensitivity distribution needs at least 2 points, got {n}"
        )));
    }
    let k = params.input_dim();
    let mut jac = Array2::zeros((n, k));
    for (i, row) in inputs.rows().into_iter().enumerate() {
        let j = jacobian(params, row)?;
        jac.row_mut(i).assign(&j.mapv(|v| v.as_f64()));
    }
    let summaries: Vec<InputSensitivity> = (0..k)
        .map(|j| {
            let mut col = jac.column(j).to_vec();
            col.sort_by(f64::total_cmp);
            InputSensitivity {
                input: j,
                mean: stats::mean(&col),
                median: stats::quantile_sorted(&col, 0.5),
                std: stats::std_dev(&col),
                q01: stats::quantile_sorted(&col, 0.01),
                q99: stats::quantile_sorted(&col, 0.99),
            }
        })
        .collect();
    let mut report = SensitivityReport {
        per_input_jacobians: jac,
        inputs: summaries,
        ranking: Vec::new(),
        aggregation,
    };
    report.ranking = stats::rank_descending(&report.importance());
    Ok(report)
}

/// Mean absolute Hessian entries over a set of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionReport {
    /// Symmetric `K × K` mean |∂²ŷ/∂x_i∂x_j|, zero on the diagonal.
    pub pair_scores: Array2<f64>,
    /// Mean |∂²ŷ/∂x_i²| per input.
    pub own_curvature: Vec<f64>,
    /// Off-diagonal pairs `(i, j, score)`, `i < j`, by descending score.
    pub ranking: Vec<(usize, usize, f64)>,
}

impl InteractionReport {
    pub fn top_pair(&self) -> Option<(usize, usize)> {
        self.ranking.first().map(|&(i, j, _)| (i, j))
    }
}

pub fn rank_interactions<T: Scalar>(params: &NetworkParams<T>, inputs: ArrayView2<T>) -> Result<InteractionReport> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    let k = params.input_dim();
    let mut acc = Array2::<f64>::zeros((k, k));
    for row in inputs.rows() {
        let h = hessian(params, row)?;
        acc.zip_mut_with(&h, |a, v| *a += v.as_f64().abs());
    }
    acc /= n as f64;
    let own_curvature = (0..k).map(|i| acc[[i, i]]).collect();
    let mut pair_scores = acc;
    for i in 0..k {
        pair_scores[[i, i]] = 0.0;
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j))).collect();
    let scores: Vec<f64> = pairs.iter().map(|&(i, j)| pair_scores[[i, j]]).collect();
    let ranking = stats::rank_descending(&scores)
        .into_iter()
        .map(|p| (pairs[p].0, pairs[p].1, scores[p]))
        .collect();
    Ok(InteractionReport {
        pair_scores,
        own_curvature,
        ranking,
    })
}
