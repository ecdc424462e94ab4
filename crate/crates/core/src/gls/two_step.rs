use chrono::NaiveDate;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::covariance::{estimate_residual_covariance_with, weighted_mse, ResidualCovariance, VARIANCE_FLOOR};
use crate::data::FactorPanel;
use crate::error::{Error, Result};
use crate::nn::{predict_batch, train, train_from, Architecture, NetworkParams, TrainConfig};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlsConfig {
    pub train: TrainConfig,
    pub variance_floor: f64,
    /// Subtract each asset's mean residual before squaring.
    pub centered: bool,
    /// Start the weighted refit from the unweighted fit instead of a fresh draw.
    pub warm_start: bool,
    /// Fit on returns rescaled to zero mean and unit variance over the window.
    pub standardize_targets: bool,
    /// Replace the estimated first-pass covariance by the identity.
    #[doc(hidden)]
    pub force_identity_covariance: bool,
}

impl Default for GlsConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            variance_floor: VARIANCE_FLOOR,
            centered: false,
            warm_start: false,
            standardize_targets: true,
            force_identity_covariance: false,
        }
    }
}

/// Artifacts of the unweighted fit, covariance estimate, weighted refit and
/// refined covariance.
#[derive(Debug, Clone)]
pub struct GlsFitResult {
    /// Weighted refit `(Ŵ′, b̂′)`, in return units.
    pub params: NetworkParams<f64>,
    /// Unweighted fit `(Ŵ, b̂)`, in return units.
    pub params_first_pass: NetworkParams<f64>,
    /// `T × N` residuals `ε_t` of the unweighted fit.
    pub residuals_unweighted: Array2<f64>,
    /// `T × N` residuals `ε′_t` of the refit.
    pub residuals_refined: Array2<f64>,
    pub covariance_first_pass: ResidualCovariance<f64>,
    pub covariance_refined: ResidualCovariance<f64>,
    /// Training residual MSE of each fit, weighted by the first-pass covariance.
    pub weighted_mse_first_pass: f64,
    pub weighted_mse_refined: f64,
    /// Set when the refit did not lower the weighted training MSE.
    pub flagged: bool,
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
}

/// Folds `y = μ + s·ŷ_z` into the identity output layer.
fn rescale_output(mut params: NetworkParams<f64>, mu: f64, scale: f64) -> NetworkParams<f64> {
    let out = params.layers_mut().last_mut().expect("output layer");
    out.weights.mapv_inplace(|w| w * scale);
    out.bias.mapv_inplace(|b| b * scale + mu);
    params
}

fn residual_matrix(params: &NetworkParams<f64>, x: &Array2<f64>, y: ArrayView1<f64>, n: usize) -> Result<Array2<f64>> {
    let pred = predict_batch(params, x.view())?;
    let t = y.len() / n;
    Ok((&y - &pred).into_shape_with_order((t, n)).expect("window shape"))
}

/// Unweighted fit, residual covariance, weighted refit with `σ_i⁻²` loss
/// weights, and refined covariance, on a window of dates. Loss weights are
/// normalized to mean one.
pub fn fit_two_step(window: &FactorPanel, architecture: &Architecture, config: &GlsConfig) -> Result<GlsFitResult> {
    let t = window.n_dates();
    if t < 2 {
        return Err(Error::InsufficientWindows { got: t });
    }
    let n = window.n_assets();
    let (x, y) = window.pooled(0..t);
    let (mu, scale) = if config.standardize_targets {
        let ys = y.as_slice().expect("contiguous");
        let s = stats::population_std(ys);
        if s > 0.0 && s.is_finite() {
            (stats::mean(ys), s)
        } else {
            (stats::mean(ys), 1.0)
        }
    } else {
        (0.0, 1.0)
    };
    let yz = y.mapv(|v| (v - mu) / scale);

    let first = train(x.view(), yz.view(), architecture, &config.train, None)?;
    let params_first_pass = rescale_output(first.params.clone(), mu, scale);
    let residuals_unweighted = residual_matrix(&params_first_pass, &x, y.view(), n)?;

    let covariance_first_pass = if config.force_identity_covariance {
        ResidualCovariance {
            window_length: t,
            ..ResidualCovariance::identity(n)
        }
    } else {
        estimate_residual_covariance_with(residuals_unweighted.view(), config.variance_floor, config.centered)?
    };

    let precision = covariance_first_pass.precisions();
    let mean_precision = precision.sum() / n as f64;
    let per_asset = precision.mapv(|p| p / mean_precision);
    let weights: Array1<f64> = per_asset
        .broadcast((t, n))
        .expect("broadcast weights")
        .iter()
        .copied()
        .collect();

    let refit = if config.warm_start {
        train_from(first.params, x.view(), yz.view(), &config.train, Some(weights.view()))?
    } else {
        train(x.view(), yz.view(), architecture, &config.train, Some(weights.view()))?
    };
    let params = rescale_output(refit.params, mu, scale);
    let residuals_refined = residual_matrix(&params, &x, y.view(), n)?;
    let covariance_refined =
        estimate_residual_covariance_with(residuals_refined.view(), config.variance_floor, config.centered)?;

    let weighted_mse_first_pass = weighted_mse(residuals_unweighted.view(), &covariance_first_pass)?;
    let weighted_mse_refined = weighted_mse(residuals_refined.view(), &covariance_first_pass)?;
    let flagged = weighted_mse_refined > weighted_mse_first_pass;
    if flagged {
        log::warn!(
            "weighted refit did not improve training fit ({weighted_mse_refined:.6e} > {weighted_mse_first_pass:.6e})"
        );
    }
    Ok(GlsFitResult {
        params,
        params_first_pass,
        residuals_unweighted,
        residuals_refined,
        covariance_first_pass,
        covariance_refined,
        weighted_mse_first_pass,
        weighted_mse_refined,
        flagged,
        dates: window.dates.clone(),
        assets: window.assets.clone(),
    })
}

/// `𝕍(r) = 𝕍[F(B)] + D̂′`: the over-window sample covariance of the refit's
/// fitted values across assets plus the refined residual variances.
pub fn return_covariance(fit: &GlsFitResult, window: &FactorPanel) -> Result<Array2<f64>> {
    let (t, n) = (window.n_dates(), window.n_assets());
    if n != fit.covariance_refined.n_assets() {
        return Err(Error::DimensionMismatch {
            context: "return covariance assets".into(),
            expected: fit.covariance_refined.n_assets(),
            actual: n,
        });
    }
    if t < 2 {
        return Err(Error::InsufficientWindows { got: t });
    }
    let mut fitted = Array2::zeros((t, n));
    for d in 0..t {
        fitted
            .row_mut(d)
            .assign(&predict_batch(&fit.params, window.exposures_at(d))?);
    }
    // Shifting by the first date first keeps constant columns exactly zero.
    let shifted = &fitted - &fitted.row(0);
    let mean = shifted.mean_axis(Axis(0)).expect("non-empty");
    let centered = &shifted - &mean;
    let mut cov = centered.t().dot(&centered) / (t - 1) as f64;
    for i in 0..n {
        cov[[i, i]] += fit.covariance_refined.variances[i];
    }
    Ok(cov)
}

#[derive(Serialize)]
struct GlsExport<'a> {
    window_start: String,
    window_end: String,
    window_length: usize,
    assets: &'a [String],
    variances_first_pass: Vec<f64>,
    variances_refined: Vec<f64>,
    residuals_unweighted: Vec<Vec<f64>>,
    residuals_refined: Vec<Vec<f64>>,
    weighted_mse_first_pass: f64,
    weighted_mse_refined: f64,
    flagged: bool,
}

impl GlsFitResult {
    /// Residual matrices and variances with window metadata, as JSON.
    pub fn to_json(&self) -> Result<String> {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        let export = GlsExport {
            window_start: self.dates.first().ok_or_else(|| Error::Empty("window dates".into()))?.to_string(),
            window_end: self.dates.last().ok_or_else(|| Error::Empty("window dates".into()))?.to_string(),
            window_length: self.dates.len(),
            assets: &self.assets,
            variances_first_pass: self.covariance_first_pass.variances.to_vec(),
            variances_refined: self.covariance_refined.variances.to_vec(),
            residuals_unweighted: rows(&self.residuals_unweighted),
            residuals_refined: rows(&self.residuals_refined),
            weighted_mse_first_pass: self.weighted_mse_first_pass,
            weighted_mse_refined: self.weighted_mse_refined,
            flagged: self.flagged,
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }
}
