//! K-fold cross-validation for architecture and penalty selection.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::predict_batch;
use super::params::Architecture;
use super::train::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::stats;

/// Fold membership from a seeded shuffle, dealt round-robin.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!("need 2 <= folds <= {n}, got {folds}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (i, idx) in order.into_iter().enumerate() {
        out[i % folds].push(idx);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// Out-of-fold predictions: each sample is predicted by the model trained
/// without its fold. Fold `f` trains on RNG stream `config.stream + f`.
pub fn out_of_fold_predictions(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    architecture: &Architecture,
    config: &TrainConfig,
    folds: &[Vec<usize>],
) -> Result<Array1<f64>> {
    let n = x.nrows();
    let per_fold: Vec<Result<(usize, Array1<f64>)>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let cfg = config.with_stream(config.stream + f as u64);
            let fit = train(
                x.select(Axis(0), &train_idx).view(),
                y.select(Axis(0), &train_idx).view(),
                architecture,
                &cfg,
                None,
            )?;
            Ok((f, predict_batch(&fit.params, x.select(Axis(0), test).view())?))
        })
        .collect();
    let mut pred = Array1::zeros(n);
    for r in per_fold {
        let (f, p) = r?;
        for (&i, v) in folds[f].iter().zip(p.iter()) {
            pred[i] = *v;
        }
    }
    Ok(pred)
}

/// Cross-validated `R² = 1 − Σ(y − ŷ_oof)² / Σ(y − ȳ)²`.
pub fn cross_validated_r2(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    architecture: &Architecture,
    config: &TrainConfig,
    n_folds: usize,
    seed: u64,
) -> Result<f64> {
    let folds = kfold_indices(x.nrows(), n_folds, seed)?;
    let pred = out_of_fold_predictions(x, y, architecture, config, &folds)?;
    let mean = y.mean().unwrap_or(0.0);
    let sse: f64 = y.iter().zip(pred.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCandidate {
    pub hidden: Vec<usize>,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub candidate: CvCandidate,
    /// Out-of-fold MSE per fold.
    pub fold_mse: Vec<f64>,
    pub mean_mse: f64,
}

/// Scores every candidate on the same folds.
pub fn cross_validate(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    activation: super::Activation,
    candidates: &[CvCandidate],
    config: &TrainConfig,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<CvScore>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no tuning candidates".into()));
    }
    let folds = kfold_indices(x.nrows(), n_folds, seed)?;
    candidates
        .iter()
        .map(|c| {
            let arch = Architecture {
                hidden: c.hidden.clone(),
                activation,
            };
            let cfg = TrainConfig {
                l1_lambda: c.l1,
                l2_lambda: c.l2,
                ..config.clone()
            };
            let pred = out_of_fold_predictions(x, y, &arch, &cfg, &folds)?;
            let fold_mse: Vec<f64> = folds
                .iter()
                .map(|f| f.iter().map(|&i| (y[i] - pred[i]).powi(2)).sum::<f64>() / f.len() as f64)
                .collect();
            Ok(CvScore {
                candidate: c.clone(),
                mean_mse: stats::mean(&fold_mse),
                fold_mse,
            })
        })
        .collect()
}

/// Minimum mean out-of-fold MSE; ties go to fewer hidden units, then to the
/// earlier candidate.
pub fn select_best(scores: &[CvScore]) -> Option<&CvScore> {
    scores.iter().min_by(|a, b| {
        a.mean_mse
            .total_cmp(&b.mean_mse)
            .then(a.candidate.hidden.iter().sum::<usize>().cmp(&b.candidate.hidden.iter().sum::<usize>()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_linear2;
    use crate::nn::Activation;

    #[test]
    fn folds_partition_the_sample() {
        let folds = kfold_indices(23, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
        assert_eq!(folds, kfold_indices(23, 5, 1).unwrap());
        assert!(kfold_indices(3, 5, 1).is_err());
        assert!(kfold_indices(10, 1, 1).is_err());
    }

    #[test]
    fn linear_data_has_high_cv_r2() {
        let d = gen_linear2(300, 0.1, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        let r2 = cross_validated_r2(d.x.view(), d.y.view(), &Architecture::linear(), &cfg, 5, 0).unwrap();
        assert!(r2 > 0.95, "{r2}");
    }

    #[test]
    fn ties_prefer_smaller_models() {
        let s = |h: usize, m: f64| CvScore {
            candidate: CvCandidate {
                hidden: vec![h],
                l1: 0.0,
                l2: 0.0,
            },
            fold_mse: vec![m],
            mean_mse: m,
        };
        let scores = vec![s(8, 1.0), s(2, 1.0), s(4, 0.5)];
        assert_eq!(select_best(&scores).unwrap().candidate.hidden, vec![4]);
        let scores = vec![s(8, 1.0), s(2, 1.0)];
        assert_eq!(select_best(&scores).unwrap().candidate.hidden, vec![2]);
    }

    #[test]
    fn cross_validate_scores_each_candidate() {
        let d = gen_linear2(120, 0.1, 3).unwrap();
        let cands = vec![
            CvCandidate { hidden: vec![], l1: 0.0, l2: 0.0 },
            CvCandidate { hidden: vec![3], l1: 0.0, l2: 1e-3 },
        ];
        let cfg = TrainConfig { epochs: 30, ..TrainConfig::default() };
        let scores = cross_validate(d.x.view(), d.y.view(), Activation::Tanh, &cands, &cfg, 3, 0).unwrap();
        assert_eq!(scores.len(), 2);
        assert!(scores.iter().all(|s| s.fold_mse.len() == 3 && s.mean_mse.is_finite()));
    }
}
