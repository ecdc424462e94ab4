use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{information_ratio_active, select_top_n, InformationRatio};
use crate::data::FactorPanel;
use crate::error::{Error, Result};
use crate::gls::{fit_two_step, GlsConfig, ResidualCovariance};
use crate::interpret::jacobian;
use crate::nn::{predict_batch, Architecture, NetworkParams};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktestMode {
    /// Network with the configured architecture under two-step GLS.
    #[default]
    Model,
    /// Zero-hidden-layer network under the same two-step GLS.
    Linear,
    /// Portfolios drawn uniformly at random, no model.
    Random,
    /// Predictions replaced by the realized returns.
    #[doc(hidden)]
    PerfectForesight,
}

impl BacktestMode {
    pub fn name(self) -> &'static str {
        match self {
            BacktestMode::Model => "model",
            BacktestMode::Linear => "linear",
            BacktestMode::Random => "random",
            BacktestMode::PerfectForesight => "perfect_foresight",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Fitting window length `m` in dates.
    pub window: usize,
    pub portfolio_sizes: Vec<usize>,
    pub architecture: Architecture,
    pub gls: GlsConfig,
    /// Benchmark return per panel date; the equal-weighted universe if absent.
    pub benchmark: Option<Vec<f64>>,
    pub mode: BacktestMode,
    pub n_random_trials: usize,
    pub seed: u64,
}

impl BacktestConfig {
    pub fn new(window: usize, portfolio_sizes: Vec<usize>, architecture: Architecture) -> Self {
        Self {
            window,
            portfolio_sizes,
            architecture,
            gls: GlsConfig::default(),
            benchmark: None,
            mode: BacktestMode::Model,
            n_random_trials: 100,
            seed: 0,
        }
    }

    fn validate(&self, panel: &FactorPanel) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidArgument(format!("window must be at least 2, got {}", self.window)));
        }
        if panel.n_dates() <= self.window + 1 {
            return Err(Error::InsufficientWindows {
                got: panel.n_dates().saturating_sub(self.window),
            });
        }
        if self.portfolio_sizes.is_empty() {
            return Err(Error::InvalidArgument("no portfolio sizes".into()));
        }
        if let Some(&n) = self.portfolio_sizes.iter().find(|&&n| n == 0 || n > panel.n_assets()) {
            return Err(Error::InvalidArgument(format!(
                "portfolio size {n} outside 1..={}",
                panel.n_assets()
            )));
        }
        if let Some(b) = &self.benchmark {
            if b.len() != panel.n_dates() {
                return Err(Error::DimensionMismatch {
                    context: "benchmark dates".into(),
                    expected: panel.n_dates(),
                    actual: b.len(),
                });
            }
        }
        if self.mode == BacktestMode::Random && self.n_random_trials == 0 {
            return Err(Error::InvalidArgument("random mode needs n_random_trials >= 1".into()));
        }
        self.gls.train.validate()
    }
}

/// Fit diagnostics for one window and its out-of-sample date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    /// Date predicted from this window.
    pub date: NaiveDate,
    /// Refit's training MSE weighted by the first-pass covariance.
    pub in_sample_wmse: f64,
    /// Next-date weighted MSE of the refit and of the unweighted fit, both
    /// weighted by the window's first-pass covariance.
    pub out_of_sample_wmse: f64,
    pub out_of_sample_wmse_unweighted: f64,
    pub flagged: bool,
    /// Cross-sectional mean of `∂ŷ/∂x_j` over the predicted date's exposures.
    pub mean_sensitivity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSeries {
    pub n: usize,
    /// Monthly active return per prediction date.
    pub active_returns: Vec<f64>,
    pub information_ratio: InformationRatio,
    /// Per-trial IRs in random mode; the headline IR is their median.
    pub trial_information_ratios: Option<Vec<InformationRatio>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub mode: BacktestMode,
    pub assets: Vec<String>,
    pub factor_names: Vec<String>,
    /// Predicted dates, in order, excluding skipped windows.
    pub dates: Vec<NaiveDate>,
    /// `T′ × N` predicted returns (random scores in random mode).
    pub predictions: Array2<f64>,
    /// `T′ × N` realized returns.
    pub realized: Array2<f64>,
    pub benchmark: Vec<f64>,
    pub portfolios: Vec<PortfolioSeries>,
    /// Empty in random and perfect-foresight modes.
    pub windows: Vec<WindowStats>,
    /// Dates whose fitting window diverged.
    pub skipped: Vec<NaiveDate>,
}

impl BacktestResult {
    pub fn information_ratio(&self, n: usize) -> Option<InformationRatio> {
        self.portfolios.iter().find(|p| p.n == n).map(|p| p.information_ratio)
    }
}

struct WindowOutput {
    predictions: Array1<f64>,
    stats: Option<WindowStats>,
}

fn oos_wmse(realized: &Array1<f64>, predicted: &Array1<f64>, cov: &ResidualCovariance<f64>) -> Result<f64> {
    let resid = (realized - predicted).insert_axis(ndarray::Axis(0));
    crate::gls::weighted_mse(resid.view(), cov)
}

fn mean_sensitivity(params: &NetworkParams<f64>, exposures: ndarray::ArrayView2<f64>) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; params.input_dim()];
    for row in exposures.rows() {
        let j = jacobian(params, row)?;
        acc.iter_mut().zip(j.iter()).for_each(|(a, v)| *a += v);
    }
    let n = exposures.nrows() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

fn fit_window(panel: &FactorPanel, config: &BacktestConfig, start: usize, arch: &Architecture) -> Result<WindowOutput> {
    let target = start + config.window;
    let window = panel.window(start..target);
    let mut gls = config.gls.clone();
    gls.train.seed = config.seed;
    gls.train.stream = start as u64;
    let fit = fit_two_step(&window, arch, &gls)?;
    let x_next = panel.exposures_at(target);
    let realized = panel.returns.row(target).to_owned();
    let predictions = predict_batch(&fit.params, x_next)?;
    let first_pass = predict_batch(&fit.params_first_pass, x_next)?;
    let mean_sensitivity = if fit.params.has_relu() {
        Vec::new()
    } else {
        mean_sensitivity(&fit.params, x_next)?
    };
    let stats = WindowStats {
        date: panel.dates[target],
        in_sample_wmse: fit.weighted_mse_refined,
        out_of_sample_wmse: oos_wmse(&realized, &predictions, &fit.covariance_first_pass)?,
        out_of_sample_wmse_unweighted: oos_wmse(&realized, &first_pass, &fit.covariance_first_pass)?,
        flagged: fit.flagged,
        mean_sensitivity,
    };
    Ok(WindowOutput {
        predictions,
        stats: Some(stats),
    })
}

/// Rolling-window backtest. The window of dates `[s, s+m)` is fitted and used
/// to predict date `s+m`, for every `s` with `s+m < T`. Top-`n` portfolios are
/// equally weighted; active returns are measured against the benchmark.
pub fn run_backtest(panel: &FactorPanel, config: &BacktestConfig) -> Result<BacktestResult> {
    config.validate(panel)?;
    let (t_total, n_assets) = (panel.n_dates(), panel.n_assets());
    let starts: Vec<usize> = (0..t_total - config.window).collect();
    let benchmark_full = match &config.benchmark {
        Some(b) => Array1::from(b.clone()),
        None => panel.equal_weighted_benchmark(),
    };

    let outputs: Vec<(usize, Option<WindowOutput>)> = match config.mode {
        BacktestMode::Model | BacktestMode::Linear => {
            let arch = if config.mode == BacktestMode::Linear {
                Architecture::linear()
            } else {
                config.architecture.clone()
            };
            let fitted: Vec<(usize, Result<WindowOutput>)> = starts
                .par_iter()
                .map(|&s| (s, fit_window(panel, config, s, &arch)))
                .collect();
            fitted
                .into_iter()
                .map(|(s, r)| match r {
                    Ok(out) => Ok((s, Some(out))),
                    Err(Error::Diverged { last_finite_epoch }) => {
                        log::warn!(
                            "window ending {} diverged (last finite epoch {last_finite_epoch:?}); skipped",
                            panel.dates[s + config.window - 1]
                        );
                        Ok((s, None))
                    }
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?
        }
        BacktestMode::PerfectForesight => starts
            .iter()
            .map(|&s| {
                let out = WindowOutput {
                    predictions: panel.returns.row(s + config.window).to_owned(),
                    stats: None,
                };
                (s, Some(out))
            })
            .collect(),
        BacktestMode::Random => {
            // Trial 0's scores: one draw of N per date, in date order.
            let mut rng = random_rng(config.seed, 0);
            starts
                .iter()
                .map(|&s| {
                    let out = WindowOutput {
                        predictions: Array1::from_shape_simple_fn(n_assets, || rng.random()),
                        stats: None,
                    };
                    (s, Some(out))
                })
                .collect()
        }
    };

    let mut dates = Vec::new();
    let mut targets = Vec::new();
    let mut skipped = Vec::new();
    let mut windows = Vec::new();
    let mut rows = Vec::new();
    for (s, out) in outputs {
        let target = s + config.window;
        match out {
            Some(out) => {
                dates.push(panel.dates[target]);
                targets.push(target);
                rows.push(out.predictions);
                windows.extend(out.stats);
            }
            None => skipped.push(panel.dates[target]),
        }
    }
    if targets.len() < 2 {
        return Err(Error::InsufficientWindows { got: targets.len() });
    }
    let mut predictions = Array2::zeros((rows.len(), n_assets));
    for (i, r) in rows.iter().enumerate() {
        predictions.row_mut(i).assign(r);
    }
    let realized = panel.returns.select(ndarray::Axis(0), &targets);
    let benchmark: Vec<f64> = targets.iter().map(|&t| benchmark_full[t]).collect();

    let portfolios = config
        .portfolio_sizes
        .iter()
        .map(|&n| {
            let active = active_returns(&predictions, &realized, &benchmark, n)?;
            if config.mode != BacktestMode::Random {
                let ir = information_ratio_active(&active)?;
                return Ok(PortfolioSeries {
                    n,
                    active_returns: active,
                    information_ratio: ir,
                    trial_information_ratios: None,
                });
            }
            let trials = random_trial_irs(&realized, &benchmark, n_assets, n, config)?;
            let values: Vec<f64> = trials.iter().map(|ir| ir.value()).collect();
            let median = stats::median(&values);
            Ok(PortfolioSeries {
                n,
                active_returns: active,
                information_ratio: if median.is_finite() {
                    InformationRatio::Finite(median)
                } else {
                    InformationRatio::Unbounded { positive: median > 0.0 }
                },
                trial_information_ratios: Some(trials),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BacktestResult {
        mode: config.mode,
        assets: panel.assets.clone(),
        factor_names: panel.factor_names.clone(),
        dates,
        predictions,
        realized,
        benchmark,
        portfolios,
        windows,
        skipped,
    })
}

fn active_returns(predictions: &Array2<f64>, realized: &Array2<f64>, benchmark: &[f64], n: usize) -> Result<Vec<f64>> {
    predictions
        .rows()
        .into_iter()
        .zip(realized.rows())
        .zip(benchmark)
        .map(|((pred, real), b)| {
            let chosen = select_top_n(pred.as_slice().expect("row-major predictions"), n)?;
            let port = chosen.iter().map(|&i| real[i]).sum::<f64>() / n as f64;
            Ok(port - b)
        })
        .collect()
}

fn random_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - trial as u64);
    rng
}

fn random_trial_irs(
    realized: &Array2<f64>,
    benchmark: &[f64],
    n_assets: usize,
    n: usize,
    config: &BacktestConfig,
) -> Result<Vec<InformationRatio>> {
    (0..config.n_random_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = random_rng(config.seed, trial);
            let scores = Array2::from_shape_simple_fn((realized.nrows(), n_assets), || rng.random::<f64>());
            let active = active_returns(&scores, realized, benchmark, n)?;
            information_ratio_active(&active)
        })
        .collect()
}
