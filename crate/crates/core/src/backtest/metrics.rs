use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Annualized information ratio. Zero tracking error with a nonzero mean
/// active return has no finite value and is reported as `Unbounded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationRatio {
    Finite(f64),
    Unbounded { positive: bool },
}

impl InformationRatio {
    /// The finite value, or `±∞`, for ordering and aggregation.
    pub fn value(&self) -> f64 {
        match *self {
            InformationRatio::Finite(v) => v,
            InformationRatio::Unbounded { positive: true } => f64::INFINITY,
            InformationRatio::Unbounded { positive: false } => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, InformationRatio::Finite(_))
    }
}

impl fmt::Display for InformationRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InformationRatio::Finite(v) => write!(f, "{v}"),
            InformationRatio::Unbounded { positive: true } => f.write_str("unbounded"),
            InformationRatio::Unbounded { positive: false } => f.write_str("-unbounded"),
        }
    }
}

/// Tracking error below this fraction of |mean| counts as zero.
const ZERO_TRACKING_REL: f64 = 1e-9;

/// `mean·12 / (std·√12)` of monthly active returns `portfolio − benchmark`,
/// with the sample standard deviation.
pub fn information_ratio(portfolio: &[f64], benchmark: &[f64]) -> Result<InformationRatio> {
    if portfolio.len() != benchmark.len() {
        return Err(Error::DimensionMismatch {
            context: "benchmark returns".into(),
            expected: portfolio.len(),
            actual: benchmark.len(),
        });
    }
    let active: Vec<f64> = portfolio.iter().zip(benchmark).map(|(p, b)| p - b).collect();
    information_ratio_active(&active)
}

/// As [`information_ratio`], from active returns directly.
pub fn information_ratio_active(active: &[f64]) -> Result<InformationRatio> {
    if active.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "information ratio needs at least 2 periods, got {}",
            active.len()
        )));
    }
    if active.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite {
            epoch: 0,
            batch: 0,
            context: "active returns".into(),
        });
    }
    if active.iter().all(|a| *a == 0.0) {
        return Ok(InformationRatio::Finite(0.0));
    }
    let mean = stats::mean(active);
    let sd = stats::std_dev(active);
    if sd <= ZERO_TRACKING_REL * mean.abs() {
        if mean == 0.0 {
            return Ok(InformationRatio::Finite(0.0));
        }
        return Ok(InformationRatio::Unbounded { positive: mean > 0.0 });
    }
    Ok(InformationRatio::Finite(mean * 12.0 / (sd * 12f64.sqrt())))
}

/// Indices of the `n` largest predictions, ties to the lower index, in
/// ascending index order.
pub fn select_top_n(predictions: &[f64], n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > predictions.len() {
        return Err(Error::InvalidArgument(format!(
            "portfolio size {n} outside 1..={}",
            predictions.len()
        )));
    }
    let mut chosen = stats::rank_descending(predictions);
    chosen.truncate(n);
    chosen.sort_unstable();
    Ok(chosen)
}
