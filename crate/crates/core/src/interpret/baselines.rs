//! Weight-based importance baselines for single-hidden-layer networks.

use serde::{Deserialize, Serialize};

use super::sensitivity::SensitivityReport;
use crate::error::{Error, Result};
use crate::nn::NetworkParams;
use crate::scalar::Scalar;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMethod {
    Jacobian,
    Garson,
    Olden,
    Pdp,
}

impl ImportanceMethod {
    pub fn name(self) -> &'static str {
        match self {
            ImportanceMethod::Jacobian => "jacobian",
            ImportanceMethod::Garson => "garson",
            ImportanceMethod::Olden => "olden",
            ImportanceMethod::Pdp => "pdp",
        }
    }
}

/// One score per input from an importance method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub method: ImportanceMethod,
    pub scores: Vec<f64>,
    /// False for methods built on absolute weights (Garson).
    pub signed: bool,
}

impl ImportanceTable {
    /// Inputs by descending |score|, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mags: Vec<f64> = self.scores.iter().map(|s| s.abs()).collect();
        stats::rank_descending(&mags)
    }
}

fn single_hidden<T: Scalar>(params: &NetworkParams<T>, method: &str) -> Result<()> {
    if params.n_hidden_layers() != 1 {
        return Err(Error::Unsupported(format!(
            "{method} importance is defined for exactly one hidden layer, network has {}",
            params.n_hidden_layers()
        )));
    }
    Ok(())
}

/// Garson's decomposition: each hidden unit's output weight is split across
/// inputs in proportion to `|W^(1)_kj|·|W^(2)_k|`, normalized per hidden unit,
/// summed over units, and normalized to sum to one.
pub fn garson<T: Scalar>(params: &NetworkParams<T>) -> Result<ImportanceTable> {
    single_hidden(params, "garson")?;
    let (hidden, out) = (&params.layers()[0], &params.layers()[1]);
    let k = hidden.in_dim();
    let mut totals = vec![0.0; k];
    for unit in 0..hidden.out_dim() {
        let w_out = out.weights[[0, unit]].as_f64().abs();
        let contrib: Vec<f64> = (0..k)
            .map(|j| hidden.weights[[unit, j]].as_f64().abs() * w_out)
            .collect();
        let unit_total: f64 = contrib.iter().sum();
        if unit_total > 0.0 {
            totals.iter_mut().zip(&contrib).for_each(|(t, c)| *t += c / unit_total);
        }
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        totals.iter_mut().for_each(|t| *t /= sum);
    }
    Ok(ImportanceTable {
        method: ImportanceMethod::Garson,
        scores: totals,
        signed: false,
    })
}

/// Olden's connection-weight score `R_j = Σ_k W^(2)_k W^(1)_kj`.
pub fn olden<T: Scalar>(params: &NetworkParams<T>) -> Result<ImportanceTable> {
    single_hidden(params, "olden")?;
    let (hidden, out) = (&params.layers()[0], &params.layers()[1]);
    let scores = (0..hidden.in_dim())
        .map(|j| {
            (0..hidden.out_dim())
                .map(|unit| (out.weights[[0, unit]] * hidden.weights[[unit, j]]).as_f64())
                .sum()
        })
        .collect();
    Ok(ImportanceTable {
        method: ImportanceMethod::Olden,
        scores,
        signed: true,
    })
}

/// Sensitivity-based importance table (signed mean or median Jacobian).
pub fn jacobian_importance(report: &SensitivityReport) -> ImportanceTable {
    let scores = report
        .inputs
        .iter()
        .map(|s| match report.aggregation {
            super::Aggregation::Mean => s.mean,
            super::Aggregation::Median => s.median,
        })
        .collect();
    ImportanceTable {
        method: ImportanceMethod::Jacobian,
        scores,
        signed: true,
    }
}
