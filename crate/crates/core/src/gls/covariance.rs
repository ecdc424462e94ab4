use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to every estimated residual variance (return² units).
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Diagonal residual covariance `D = diag(σ_1², …, σ_N²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCovariance<T> {
    pub variances: Array1<T>,
    /// Number of dates the variances were estimated from.
    pub window_length: usize,
}

impl<T: Scalar> ResidualCovariance<T> {
    pub fn new(variances: Array1<T>, window_length: usize) -> Result<Self> {
        check_positive(variances.view())?;
        Ok(Self {
            variances,
            window_length,
        })
    }

    /// `D = I`.
    pub fn identity(n: usize) -> Self {
        Self {
            variances: Array1::ones(n),
            window_length: 0,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.variances.len()
    }

    /// `σ_i⁻²` per asset.
    pub fn precisions(&self) -> Array1<T> {
        self.variances.mapv(|v| T::one() / v)
    }
}

fn check_positive<T: Scalar>(variances: ArrayView1<T>) -> Result<()> {
    match variances.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
        Some(index) => Err(Error::NonPositiveVariance {
            index,
            value: variances[index].as_f64(),
        }),
        None => Ok(()),
    }
}

/// Squared Mahalanobis length `(y − ŷ)ᵀ D⁻¹ (y − ŷ) = Σ (y_i − ŷ_i)² / σ_i²`.
pub fn weighted_loss<T: Scalar>(y: ArrayView1<T>, y_hat: ArrayView1<T>, cov: &ResidualCovariance<T>) -> Result<T> {
    for (context, actual) in [("predictions", y_hat.len()), ("variances", cov.n_assets())] {
        if actual != y.len() {
            return Err(Error::DimensionMismatch {
                context: context.into(),
                expected: y.len(),
                actual,
            });
        }
    }
    check_positive(cov.variances.view())?;
    Ok(y
        .iter()
        .zip(y_hat.iter())
        .zip(cov.variances.iter())
        .map(|((&a, &b), &v)| {
            let e = a - b;
            e * e / v
        })
        .fold(T::zero(), |acc, x| acc + x))
}

/// Mean of `ε_{t,i}² / σ_i²` over a `T × N` residual matrix.
pub fn weighted_mse<T: Scalar>(residuals: ArrayView2<T>, cov: &ResidualCovariance<T>) -> Result<T> {
    if residuals.ncols() != cov.n_assets() {
        return Err(Error::DimensionMismatch {
            context: "residual columns".into(),
            expected: cov.n_assets(),
            actual: residuals.ncols(),
        });
    }
    if residuals.is_empty() {
        return Err(Error::Empty("residual matrix".into()));
    }
    let mut total = T::zero();
    for row in residuals.rows() {
        total += weighted_loss(row, Array1::zeros(row.len()).view(), cov)?;
    }
    Ok(total / T::from_usize(residuals.len()).expect("count"))
}

/// `σ_i² = (1/(T−1)) Σ_t ε_{t,i}²`, floored at [`VARIANCE_FLOOR`].
pub fn estimate_residual_covariance<T: Scalar>(residuals: ArrayView2<T>) -> Result<ResidualCovariance<T>> {
    estimate_residual_covariance_with(residuals, T::lit(VARIANCE_FLOOR), false)
}

/// As [`estimate_residual_covariance`], with an explicit floor and optional
/// per-asset mean subtraction.
pub fn estimate_residual_covariance_with<T: Scalar>(
    residuals: ArrayView2<T>,
    floor: T,
    centered: bool,
) -> Result<ResidualCovariance<T>> {
    let t = residuals.nrows();
    if t < 2 {
        return Err(Error::InsufficientWindows { got: t });
    }
    if !(floor > T::zero()) {
        return Err(Error::InvalidArgument("variance floor must be positive".into()));
    }
    let denom = T::from_usize(t - 1).expect("count");
    let variances = residuals
        .columns()
        .into_iter()
        .map(|col| {
            let center = if centered {
                col.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_usize(t).expect("count")
            } else {
                T::zero()
            };
            let ss = col.iter().fold(T::zero(), |acc, &e| {
                let d = e - center;
                acc + d * d
            });
            (ss / denom).max(floor)
        })
        .collect();
    Ok(ResidualCovariance {
        variances,
        window_length: t,
    })
}
