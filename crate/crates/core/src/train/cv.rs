//! Stratified k-fold cross-validation and result reports.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{fit_logreg, predict_proba, LogRegConfig, Standardizer};
use super::metrics::{grid_search_tau_u, pr_auc, precision_recall_f1, DEFAULT_TAU_GRID};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// How each fold turns training rows into a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learner {
    /// Standardized features into L2 logistic regression.
    LogisticRegression(LogRegConfig),
    /// Single count feature thresholded at a user threshold picked by grid
    /// search on a stratified validation split of the training fold.
    CountThreshold { grid: Vec<usize>, validation_fraction: f64 },
}

impl Learner {
    pub fn count_threshold() -> Self {
        Learner::CountThreshold {
            grid: DEFAULT_TAU_GRID.to_vec(),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub learner: Learner,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            seed: 0,
            learner: Learner::LogisticRegression(LogRegConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pr_auc: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_test_positive: usize,
    pub zero_division: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_u: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub folds: Vec<FoldMetrics>,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub pr_auc: MeanStd,
    pub fold_seed: u64,
    pub k_folds: usize,
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
}

impl EvalReport {
    fn from_folds(method: &str, folds: Vec<FoldMetrics>, cfg: &CvConfig) -> Self {
        let col = |f: fn(&FoldMetrics) -> f64| MeanStd::of(&folds.iter().map(f).collect::<Vec<_>>());
        let mut hyperparameters = BTreeMap::new();
        hyperparameters.insert(
            "learner".to_string(),
            serde_json::to_value(&cfg.learner).expect("learner serializes"),
        );
        EvalReport {
            method: method.to_owned(),
            precision: col(|f| f.precision),
            recall: col(|f| f.recall),
            f1: col(|f| f.f1),
            pr_auc: col(|f| f.pr_auc),
            folds,
            fold_seed: cfg.seed,
            k_folds: cfg.folds,
            hyperparameters,
        }
    }

    pub fn with_hyperparameter(mut self, key: &str, value: impl Serialize) -> Self {
        self.hyperparameters
            .insert(key.to_owned(), serde_json::to_value(value).expect("hyperparameter serializes"));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header line of [`EvalReport::csv_row`].
    pub const CSV_HEADER: &'static str = "method,precision,recall,f1,prauc";

    pub fn csv_row(&self) -> String {
        let cell = |m: MeanStd| format!("{:.4}±{:.4}", m.mean, m.std);
        let method = if self.method.contains([',', '"']) {
            format!("\"{}\"", self.method.replace('"', "\"\""))
        } else {
            self.method.clone()
        };
        format!(
            "{},{},{},{},{}",
            method,
            cell(self.precision),
            cell(self.recall),
            cell(self.f1),
            cell(self.pr_auc)
        )
    }

    pub fn write_csv<W: Write>(reports: &[EvalReport], mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in reports {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// Assigns each sample a fold in `0..k` so that every class is spread as
/// evenly as possible. Within a class the order is a seeded shuffle, and
/// classes are dealt round-robin continuing where the previous class left
/// off so fold sizes also stay balanced.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64, stream: &str) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidValue(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} labeled users for {k} folds",
            labels.len()
        )));
    }
    let mut rng = seed::rng(seed, stream);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(assignment)
}

fn check_classes(y: &[bool], k: usize) -> Result<()> {
    let positives = y.iter().filter(|&&v| v).count();
    let negatives = y.len() - positives;
    if positives < k || negatives < k {
        return Err(Error::DegenerateLabels(format!(
            "{positives} positive and {negatives} negative users; each class needs at least {k} for {k}-fold CV"
        )));
    }
    Ok(())
}

/// Scores held-out rows and returns (probability-like scores, decisions, chosen tau).
fn fit_and_score<T: Scalar>(
    learner: &Learner,
    train_x: &[Vec<T>],
    train_y: &[bool],
    test_x: &[Vec<T>],
    seed: u64,
    fold: usize,
) -> Result<(Vec<T>, Vec<bool>, Option<usize>)> {
    match learner {
        Learner::LogisticRegression(cfg) => {
            let scaler = Standardizer::fit(train_x);
            let cfg = LogRegConfig {
                seed: seed::derive_indexed(seed, "logreg", &[fold as u64]),
                ..*cfg
            };
            let (model, _) = fit_logreg(&scaler.transform(train_x), train_y, &cfg)?;
            let mut scores = Vec::with_capacity(test_x.len());
            for row in test_x {
                scores.push(predict_proba(&model, &scaler.transform_row(row))?);
            }
            let decisions = scores.iter().map(|&p| p >= model.decision_threshold).collect();
            Ok((scores, decisions, None))
        }
        Learner::CountThreshold {
            grid,
            validation_fraction,
        } => {
            let count = |row: &Vec<T>| -> Result<usize> {
                match row.as_slice() {
                    [c] if *c >= T::zero() => Ok(c.to_usize().unwrap_or(usize::MAX)),
                    _ => Err(Error::DimensionMismatch {
                        expected: 1,
                        actual: row.len(),
                    }),
                }
            };
            let train_counts = train_x.iter().map(count).collect::<Result<Vec<_>>>()?;
            let validation = validation_split(train_y, *validation_fraction, seed, fold);
            let val_counts: Vec<usize> = validation.iter().map(|&i| train_counts[i]).collect();
            let val_y: Vec<bool> = validation.iter().map(|&i| train_y[i]).collect();
            let (tau, _) = grid_search_tau_u::<T>(&val_counts, &val_y, grid)?;
            let test_counts = test_x.iter().map(count).collect::<Result<Vec<_>>>()?;
            let scores = test_counts.iter().map(|&c| T::from_usize_lossy(c)).collect();
            let decisions = test_counts.iter().map(|&c| c >= tau).collect();
            Ok((scores, decisions, Some(tau)))
        }
    }
}

/// Stratified validation subset (indices into the training fold).
fn validation_split(y: &[bool], fraction: f64, seed: u64, fold: usize) -> Vec<usize> {
    let mut rng = seed::rng_indexed(seed, "validation", &[fold as u64]);
    let mut chosen = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        let take = ((members.len() as f64 * fraction).round() as usize).clamp(1.min(members.len()), members.len());
        chosen.extend_from_slice(&members[..take]);
    }
    chosen.sort_unstable();
    chosen
}

/// Stratified k-fold evaluation of `learner` on `(x, y)`.
pub fn kfold_cv<T: Scalar>(x: &[Vec<T>], y: &[bool], method: &str, cfg: &CvConfig) -> Result<EvalReport> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: x.len(),
        });
    }
    let folds = stratified_folds(y, cfg.folds, cfg.seed, "folds")?;
    check_classes(y, cfg.folds)?;
    let results: Vec<Result<FoldMetrics>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| {
            let (mut train_x, mut train_y, mut test_x, mut test_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..x.len() {
                if folds[i] == fold {
                    test_x.push(x[i].clone());
                    test_y.push(y[i]);
                } else {
                    train_x.push(x[i].clone());
                    train_y.push(y[i]);
                }
            }
            let (scores, decisions, tau_u) = fit_and_score(&cfg.learner, &train_x, &train_y, &test_x, cfg.seed, fold)?;
            let prf = precision_recall_f1::<T>(&decisions, &test_y)?;
            let ap = pr_auc(&scores, &test_y)?;
            Ok(FoldMetrics {
                fold,
                precision: prf.precision.as_f64(),
                recall: prf.recall.as_f64(),
                f1: prf.f1.as_f64(),
                pr_auc: ap.as_f64(),
                n_train: train_y.len(),
                n_test: test_y.len(),
                n_test_positive: test_y.iter().filter(|&&v| v).count(),
                zero_division: prf.zero_division,
                tau_u,
            })
        })
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_folds(method, folds, cfg))
}

/// Evaluates externally produced per-user scores and decisions on the same
/// stratified folds used by [`kfold_cv`]; `predict(fold, test_indices)`
/// returns scores and decisions for the test users.
pub fn kfold_external<F>(y: &[bool], method: &str, cfg: &CvConfig, predict: F) -> Result<EvalReport>
where
    F: Fn(&[usize], &[usize]) -> Result<(Vec<f64>, Vec<bool>)> + Sync,
{
    let folds = stratified_folds(y, cfg.folds, cfg.seed, "folds")?;
    check_classes(y, cfg.folds)?;
    let results: Vec<Result<FoldMetrics>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != fold).collect();
            let test: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == fold).collect();
            let test_y: Vec<bool> = test.iter().map(|&i| y[i]).collect();
            let (scores, decisions) = predict(&train, &test)?;
            let prf = precision_recall_f1::<f64>(&decisions, &test_y)?;
            Ok(FoldMetrics {
                fold,
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
                pr_auc: pr_auc(&scores, &test_y)?,
                n_train: train.len(),
                n_test: test.len(),
                n_test_positive: test_y.iter().filter(|&&v| v).count(),
                zero_division: prf.zero_division,
                tau_u: None,
            })
        })
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_folds(method, folds, cfg))
}
