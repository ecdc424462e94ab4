//! Seeded synthetic data sets for every experiment: the two-factor linear
//! control, the stepped-coefficient ranking test, the Friedman benchmark, and
//! a heteroscedastic factor panel with known nonlinear structure.

use std::f64::consts::PI;

use chrono::{Months, NaiveDate};
use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::panel::FactorPanel;
use crate::error::{Error, Result};

/// Feature matrix and scalar response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset rows".into(),
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        let feature_names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self { x, y, feature_names })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    Ok(())
}

/// `Y = X₁ + X₂ + σε` with `X₁, X₂, ε ~ N(0, 1)`.
pub fn gen_linear2(n: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    require_n(n)?;
    let mut rng = rng(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let x1: f64 = rng.sample(StandardNormal);
        let x2: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        x[[i, 0]] = x1;
        x[[i, 1]] = x2;
        y[i] = x1 + x2 + noise_sigma * e;
    }
    Dataset::new(x, y)
}

/// `Y = Σ_{i=1}^{10} i·X_i + ε` with `X_i ~ U(0, 1)` and `ε ~ U(-h, h)`,
/// `h = noise_half_width` (0.5 by default).
pub fn gen_step10(n: usize, noise_half_width: f64, seed: u64) -> Result<Dataset> {
    require_n(n)?;
    if !(noise_half_width >= 0.0) {
        return Err(Error::InvalidArgument("noise half-width must be nonnegative".into()));
    }
    let mut rng = rng(seed);
    let mut x = Array2::zeros((n, 10));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..10 {
            let v: f64 = rng.random();
            x[[i, j]] = v;
            acc += (j + 1) as f64 * v;
        }
        let u: f64 = rng.random();
        y[i] = acc + noise_half_width * (2.0 * u - 1.0);
    }
    Dataset::new(x, y)
}

/// Noise-free Friedman response on the first five coordinates.
pub fn friedman_signal(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Friedman benchmark: ten `U(0,1)` inputs, five of which enter the response,
/// plus `N(0, σ²)` noise.
pub fn gen_friedman(n: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    require_n(n)?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
    }
    let mut rng = rng(seed);
    let mut x = Array2::zeros((n, 10));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        for j in 0..10 {
            x[[i, j]] = rng.random::<f64>();
        }
        let e: f64 = rng.sample(StandardNormal);
        y[i] = friedman_signal(x.row(i).as_slice().expect("contiguous")) + sigma * e;
    }
    Dataset::new(x, y)
}

/// Per-asset residual volatility profile for [`gen_het_panel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseProfile {
    /// Every asset has volatility `sigma`.
    Constant { sigma: f64 },
    /// Volatilities drawn log-uniformly on `[min, max]`.
    LogUniform { min: f64, max: f64 },
    /// Volatility `sigma` everywhere except `asset`, which is scaled by `factor`.
    Outlier { sigma: f64, asset: usize, factor: f64 },
}

/// Shape and ground truth of a synthetic factor panel.
///
/// Returns follow
///
/// ```text
/// r_{t,i} = s · ( 0.6 x₁ − 0.4 x₂ + γ x₁x₃ + κ (x₄² − 1) ) + σ_i ε_{t,i}
/// ```
///
/// on standardized exposures, where terms referencing factors beyond `k` are
/// dropped. `γ` is the interaction coefficient and `κ` the curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HetPanelSpec {
    pub t: usize,
    pub n: usize,
    pub k: usize,
    pub noise: NoiseProfile,
    pub signal_scale: f64,
    pub interaction: f64,
    pub curvature: f64,
    pub seed: u64,
}

impl HetPanelSpec {
    /// Desk-scale default: 120 months, 218 assets, 6 factors.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            t: 120,
            n: 218,
            k: 6,
            noise: NoiseProfile::LogUniform { min: 0.02, max: 0.12 },
            signal_scale: 0.02,
            interaction: 1.0,
            curvature: 0.5,
            seed,
        }
    }

    /// Expected return given one asset's standardized exposures.
    pub fn signal(&self, x: &[f64]) -> f64 {
        let get = |j: usize| x.get(j).copied();
        let mut g = 0.0;
        if let Some(x1) = get(0) {
            g += 0.6 * x1;
            if let Some(x3) = get(2) {
                g += self.interaction * x1 * x3;
            }
        }
        if let Some(x2) = get(1) {
            g -= 0.4 * x2;
        }
        if let Some(x4) = get(3) {
            g += self.curvature * (x4 * x4 - 1.0);
        }
        self.signal_scale * g
    }
}

/// Synthetic panel together with the volatilities used to generate it.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: FactorPanel,
    pub noise_sigma: Array1<f64>,
}

/// Monthly panel with standardized Gaussian exposures, a known nonlinear
/// expected-return function and per-asset heteroscedastic Gaussian noise.
pub fn gen_het_panel(spec: &HetPanelSpec) -> Result<SyntheticPanel> {
    if spec.t == 0 || spec.n < 2 || spec.k == 0 {
        return Err(Error::InvalidArgument(
            "panel needs T >= 1, N >= 2 and K >= 1".into(),
        ));
    }
    let mut rng = rng(spec.seed);
    let sigma = match spec.noise {
        NoiseProfile::Constant { sigma } => {
            check_sigma(sigma)?;
            Array1::from_elem(spec.n, sigma)
        }
        NoiseProfile::LogUniform { min, max } => {
            check_sigma(min)?;
            check_sigma(max)?;
            if max < min {
                return Err(Error::InvalidArgument("noise max below min".into()));
            }
            let (lmin, lmax) = (min.ln(), max.ln());
            Array1::from_shape_simple_fn(spec.n, || (lmin + (lmax - lmin) * rng.random::<f64>()).exp())
        }
        NoiseProfile::Outlier { sigma, asset, factor } => {
            check_sigma(sigma)?;
            if asset >= spec.n {
                return Err(Error::InvalidArgument(format!("outlier asset {asset} out of range")));
            }
            let mut s = Array1::from_elem(spec.n, sigma);
            s[asset] *= factor;
            s
        }
    };

    let mut exposures = Array3::zeros((spec.t, spec.n, spec.k));
    for v in exposures.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
    let start = NaiveDate::from_ymd_opt(2008, 11, 1).expect("valid date");
    let dates = (0..spec.t)
        .map(|t| start.checked_add_months(Months::new(t as u32)).expect("date in range"))
        .collect();
    let assets = (0..spec.n).map(|i| format!("A{i:04}")).collect();
    let factor_names = (1..=spec.k).map(|j| format!("f{j}")).collect();
    let raw = FactorPanel::new(
        dates,
        assets,
        Array2::zeros((spec.t, spec.n)),
        exposures,
        factor_names,
    )?;
    let mut panel = raw.standardize();

    for t in 0..spec.t {
        for i in 0..spec.n {
            let x: Vec<f64> = panel.exposures.slice(ndarray::s![t, i, ..]).to_vec();
            let e: f64 = rng.sample(StandardNormal);
            panel.returns[[t, i]] = spec.signal(&x) + sigma[i] * e;
        }
    }
    Ok(SyntheticPanel {
        panel,
        noise_sigma: sigma,
    })
}

fn check_sigma(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("noise volatility must be positive, got {s}")));
    }
    Ok(())
}
