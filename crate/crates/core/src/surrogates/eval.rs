//! Train/test metrics, cross-validation and ranking.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{FittedModel, ModelSpec};
use crate::datagen::{Dataset, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_mae: f64,
    pub r2: f64,
    /// Mean of `cv_fold_mse`.
    pub cv_score: f64,
    pub cv_fold_mse: Vec<f64>,
}

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64
}

pub fn mae(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / truth.len() as f64
}

/// Coefficient of determination. With constant truth it is 1 for a perfect
/// fit and 0 otherwise.
pub fn r2_score(pred: &[f64], truth: &[f64]) -> f64 {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn gather(ds: &Dataset, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    idx.iter()
        .map(|&i| (ds.rows[i].features.clone(), ds.rows[i].label))
        .unzip()
}

fn check_split(ds: &Dataset, split: &Split) -> Result<()> {
    let n = ds.len();
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Dataset("split needs non-empty train and test sets".into()));
    }
    let out_of_range = split
        .train
        .iter()
        .chain(&split.test)
        .chain(split.folds.iter().flatten())
        .any(|&i| i >= n);
    if out_of_range {
        return Err(Error::Dataset(format!("split refers to rows beyond the dataset size {n}")));
    }
    Ok(())
}

/// Held-out MSE of each fold with the model refit on the remaining folds.
pub fn cross_validate(spec: &ModelSpec, ds: &Dataset, folds: &[Vec<usize>]) -> Result<Vec<f64>> {
    folds
        .iter()
        .enumerate()
        .map(|(i, held)| {
            let rest: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let (xt, yt) = gather(ds, &rest);
            let (xh, yh) = gather(ds, held);
            let model = FittedModel::fit(spec, &xt, &yt)?;
            Ok(mse(&model.predict_batch(&xh)?, &yh))
        })
        .collect()
}

pub fn evaluate(spec: &ModelSpec, ds: &Dataset, split: &Split) -> Result<Metrics> {
    check_split(ds, split)?;
    let (xtr, ytr) = gather(ds, &split.train);
    let (xte, yte) = gather(ds, &split.test);
    let model = FittedModel::fit(spec, &xtr, &ytr)?;
    let train_pred = model.predict_batch(&xtr)?;
    let test_pred = model.predict_batch(&xte)?;
    let cv_fold_mse = cross_validate(spec, ds, &split.folds)?;
    let cv_score = if cv_fold_mse.is_empty() {
        f64::NAN
    } else {
        cv_fold_mse.iter().sum::<f64>() / cv_fold_mse.len() as f64
    };
    Ok(Metrics {
        train_mse: mse(&train_pred, &ytr),
        test_mse: mse(&test_pred, &yte),
        test_mae: mae(&test_pred, &yte),
        r2: r2_score(&test_pred, &yte),
        cv_score,
        cv_fold_mse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub model: String,
    pub test_mse: f64,
    pub test_mae: f64,
}

/// Ranks by test MSE, then test MAE, then name.
pub fn rank_models(results: &[(String, Metrics)]) -> Vec<RankEntry> {
    let mut order: Vec<&(String, Metrics)> = results.iter().collect();
    order.sort_by(|a, b| {
        a.1.test_mse
            .total_cmp(&b.1.test_mse)
            .then(a.1.test_mae.total_cmp(&b.1.test_mae))
            .then(a.0.cmp(&b.0))
    });
    order
        .into_iter()
        .enumerate()
        .map(|(i, (name, m))| RankEntry {
            rank: i + 1,
            model: name.clone(),
            test_mse: m.test_mse,
            test_mae: m.test_mae,
        })
        .collect()
}

pub const METRICS_HEADER: &str = "Model,Train MSE,Test MSE,Test MAE,R^2 Score,CV Score";
pub const RANKING_HEADER: &str = "Rank,Model,Test MSE,Test MAE";

pub fn metrics_csv(results: &[(String, Metrics)]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for (name, m) in results {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            m.train_mse, m.test_mse, m.test_mae, m.r2, m.cv_score
        );
    }
    out
}

pub fn ranking_csv(ranking: &[RankEntry]) -> String {
    let mut out = format!("{RANKING_HEADER}\n");
    for r in ranking {
        let _ = writeln!(out, "{},{},{},{}", r.rank, r.model, r.test_mse, r.test_mae);
    }
    out
}

pub fn ranking_text(ranking: &[RankEntry]) -> String {
    let width = ranking.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:>4}  {:<width$}  {:>12}  {:>12}\n", "Rank", "Model", "Test MSE", "Test MAE");
    for r in ranking {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>12.4e}  {:>12.4e}",
            r.rank, r.model, r.test_mse, r.test_mae
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(test_mse: f64, test_mae: f64) -> Metrics {
        Metrics {
            train_mse: 0.0,
            test_mse,
            test_mae,
            r2: 0.0,
            cv_score: 0.0,
            cv_fold_mse: vec![],
        }
    }

    #[test]
    fn hand_metrics() {
        let (p, t) = ([0.5, 0.7], [0.5, 0.9]);
        assert!((mse(&p, &t) - 0.02).abs() < 1e-15);
        assert!((mae(&p, &t) - 0.1).abs() < 1e-15);
        assert_eq!(r2_score(&t, &t), 1.0);
        assert_eq!(r2_score(&[0.7, 0.7], &t), 0.0);
    }

    #[test]
    fn ranking_order() {
        let r = rank_models(&[("a".into(), m(2e-5, 0.0)), ("b".into(), m(1e-5, 0.0)), ("c".into(), m(3e-5, 0.0))]);
        let ranks: Vec<_> = r.iter().map(|e| (e.model.as_str(), e.rank)).collect();
        assert_eq!(ranks, vec![("b", 1), ("a", 2), ("c", 3)]);
        let r = rank_models(&[("x".into(), m(1.0, 0.3)), ("y".into(), m(1.0, 0.2))]);
        assert_eq!(r[0].model, "y");
    }

    #[test]
    fn table_shapes() {
        let results = vec![("linear".to_string(), m(0.5, 0.25))];
        assert_eq!(metrics_csv(&results).lines().count(), 2);
        let text = ranking_text(&rank_models(&results));
        assert!(text.lines().nth(1).unwrap().trim_start().starts_with("1  linear"));
    }
}
