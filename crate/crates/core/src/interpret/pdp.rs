use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{predict_batch, NetworkParams};
use crate::scalar::Scalar;
use crate::stats;

/// Averaged model response over a grid of values for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDependence {
    pub feature: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl PartialDependence {
    /// Finite-difference slopes between consecutive grid points.
    pub fn slopes(&self) -> Vec<f64> {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0]))
            .collect()
    }
}

/// `points` equally spaced values between the 1st and 99th percentiles of
/// column `feature`.
pub fn default_grid<T: Scalar>(inputs: ArrayView2<T>, feature: usize, points: usize) -> Result<Vec<f64>> {
    if feature >= inputs.ncols() {
        return Err(Error::InvalidArgument(format!("feature {feature} out of range")));
    }
    if inputs.nrows() == 0 || points == 0 {
        return Err(Error::InvalidArgument("empty inputs or grid".into()));
    }
    let col: Vec<f64> = inputs.column(feature).iter().map(|v| v.as_f64()).collect();
    let lo = stats::quantile(&col, 0.01);
    let hi = stats::quantile(&col, 0.99);
    if points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// For each grid value `v`, the mean prediction over all rows of `inputs`
/// with feature `feature` replaced by `v`.
pub fn partial_dependence<T: Scalar>(
    params: &NetworkParams<T>,
    inputs: ArrayView2<T>,
    feature: usize,
    grid: &[f64],
) -> Result<PartialDependence> {
    if feature >= inputs.ncols() {
        return Err(Error::InvalidArgument(format!(
            "feature {feature} out of range for {} inputs",
            inputs.ncols()
        )));
    }
    if grid.is_empty() || inputs.nrows() == 0 {
        return Err(Error::InvalidArgument("partial dependence needs a grid and inputs".into()));
    }
    let mut work = inputs.to_owned();
    let values = grid
        .iter()
        .map(|&v| {
            work.column_mut(feature).fill(T::lit(v));
            let preds = predict_batch(params, work.view())?;
            Ok(preds.iter().map(|p| p.as_f64()).sum::<f64>() / preds.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialDependence {
        feature,
        grid: grid.to_vec(),
        values,
    })
}
