//! Closed-form linear factor fits (OLS / diagonal-weight GLS) by a direct
//! matrix solve. Serves as the classical baseline for networks without
//! hidden layers.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Array1<f64>,
    /// Standard errors, intercept first.
    pub std_errors: Array1<f64>,
    pub residuals: Array1<f64>,
    /// Weighted R² (one minus weighted SSE over weighted total SS).
    pub r_squared: f64,
}

impl LinearFit {
    /// t-statistics of the slope coefficients.
    pub fn t_stats(&self) -> Array1<f64> {
        Array1::from_iter(
            self.coefficients
                .iter()
                .zip(self.std_errors.iter().skip(1))
                .map(|(b, se)| b / se),
        )
    }
}

pub fn ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<LinearFit> {
    wls(x, y, None)
}

/// Minimizes `Σ w_i (y_i - α - x_i·β)²` with an intercept.
pub fn wls(x: ArrayView2<f64>, y: ArrayView1<f64>, weights: Option<ArrayView1<f64>>) -> Result<LinearFit> {
    let (n, k) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "wls targets".into(),
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                context: "wls weights".into(),
                expected: n,
                actual: w.len(),
            });
        }
        if w.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("wls weights must be positive".into()));
        }
    }
    let p = k + 1;
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "need more than {p} samples for {k} regressors, got {n}"
        )));
    }
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] });
    let w = DVector::from_fn(n, |i, _| weights.map_or(1.0, |w| w[i]));
    let yv = DVector::from_fn(n, |i, _| y[i]);

    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    let mut xtwy = DVector::<f64>::zeros(p);
    for i in 0..n {
        let row = design.row(i);
        for a in 0..p {
            xtwy[a] += w[i] * row[a] * yv[i];
            for b in 0..p {
                xtwx[(a, b)] += w[i] * row[a] * row[b];
            }
        }
    }
    let chol = xtwx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    let beta = chol.solve(&xtwy);
    let fitted = &design * &beta;
    let resid = &yv - fitted;

    let wsum: f64 = w.iter().sum();
    let ybar: f64 = w.iter().zip(yv.iter()).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let sse: f64 = w.iter().zip(resid.iter()).map(|(w, r)| w * r * r).sum();
    let sst: f64 = w.iter().zip(yv.iter()).map(|(w, y)| w * (y - ybar) * (y - ybar)).sum();
    let sigma2 = sse / (n - p) as f64;
    let inv = chol.inverse();
    let std_errors = Array1::from_iter((0..p).map(|j| (sigma2 * inv[(j, j)]).sqrt()));

    Ok(LinearFit {
        intercept: beta[0],
        coefficients: Array1::from_iter(beta.iter().skip(1).copied()),
        std_errors,
        residuals: Array1::from_iter(resid.iter().copied()),
        r_squared: if sst > 0.0 { 1.0 - sse / sst } else { 0.0 },
    })
}
