//! Pearson correlation and Predictive Power Score (PPS) feature selection.
//!
//! PPS asks how well a single feature predicts a target on its own. A
//! one-feature decision tree is cross-validated and its error is normalised
//! against a naive predictor, giving an asymmetric score in `[0, 1]`:
//!
//! * numeric target: `1 - MAE(tree) / MAE(median)`
//! * category target: `(F1(tree) - F1(mode)) / (1 - F1(mode))`, weighted F1

mod tree;

pub use tree::{FeatureTree, TreeTask};

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FlowDataset;
use crate::seed::{derive_seed, rng};

#[derive(Debug, Error)]
pub enum PpsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("input is constant; correlation undefined")]
    ConstantInput,
    #[error("need at least {needed} rows for {folds}-fold cross-validation, got {got}")]
    InsufficientRows { needed: usize, got: usize, folds: usize },
    #[error("unknown feature or target `{0}`")]
    UnknownColumn(String),
    #[error("feature and target are both `{0}`")]
    SelfPrediction(String),
    #[error("no feature scored above {threshold}")]
    EmptySelection { threshold: f64 },
    #[error("folds must be at least 2")]
    InvalidFolds,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PpsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpsResult {
    pub feature: String,
    pub target: String,
    pub score: f64,
    pub task_kind: TaskKind,
    /// Mean out-of-fold MAE (regression) or weighted F1 (classification).
    pub model_metric: f64,
    pub baseline_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpsConfig {
    pub folds: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for PpsConfig {
    fn default() -> Self {
        Self { folds: 4, max_depth: None, seed: 0 }
    }
}

/// Pearson product-moment correlation, clamped to `[-1, 1]`.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(PpsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(PpsError::TooShort { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(PpsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean absolute error.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(PpsError::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(PpsError::TooShort { needed: 1, got: 0 });
    }
    Ok(pred.iter().zip(actual).map(|(f, y)| (f - y).abs()).sum::<f64>() / pred.len() as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

/// Support-weighted mean of per-class F1 over the classes present in `actual`.
pub fn weighted_f1(actual: &[usize], pred: &[usize], n_classes: usize) -> f64 {
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&a, &p) in actual.iter().zip(pred) {
        support[a] += 1;
        pred_count[p] += 1;
        if a == p {
            tp[a] += 1;
        }
    }
    let n = actual.len() as f64;
    (0..n_classes)
        .filter(|&c| support[c] > 0)
        .map(|c| {
            let precision = if pred_count[c] == 0 { 0.0 } else { tp[c] as f64 / pred_count[c] as f64 };
            let recall = tp[c] as f64 / support[c] as f64;
            support[c] as f64 / n * f_score(precision, recall)
        })
        .sum()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mode(labels: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (c, &k) in counts.iter().enumerate() {
        if k > counts[best] {
            best = c;
        }
    }
    best
}

enum Target {
    Numeric(Vec<f64>),
    Category(Vec<usize>, usize),
}

fn kfold(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(derive_seed(seed, "pps-folds", &[])));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

fn score_columns(
    x: &[f64],
    target: &Target,
    feature: &str,
    target_name: &str,
    config: &PpsConfig,
) -> Result<PpsResult> {
    let n = x.len();
    if config.folds < 2 {
        return Err(PpsError::InvalidFolds);
    }
    if n < 2 * config.folds {
        return Err(PpsError::InsufficientRows { needed: 2 * config.folds, got: n, folds: config.folds });
    }
    let constant = x.iter().all(|&v| v == x[0]);
    let folds = kfold(n, config.folds, config.seed);
    let train_of = |k: usize| -> Vec<usize> {
        folds.iter().enumerate().filter(|&(j, _)| j != k).flat_map(|(_, f)| f.iter().copied()).collect()
    };

    let (task_kind, model_metric, baseline_metric) = match target {
        Target::Numeric(y) => {
            let baseline = mae(&vec![median(y); n], y)?;
            let model = if constant {
                baseline
            } else {
                let mut total = 0.0;
                for (k, test) in folds.iter().enumerate() {
                    let train = train_of(k);
                    let tx: Vec<f64> = train.iter().map(|&i| x[i]).collect();
                    let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                    let tree = FeatureTree::fit(&tx, TreeTask::Regression(&ty), config.max_depth);
                    let pred: Vec<f64> = test.iter().map(|&i| tree.predict(x[i])).collect();
                    let actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
                    total += mae(&pred, &actual)?;
                }
                total / folds.len() as f64
            };
            (TaskKind::Regression, model, baseline)
        }
        Target::Category(labels, k_classes) => {
            let k_classes = *k_classes;
            let naive = vec![mode(labels, k_classes); n];
            let baseline = weighted_f1(labels, &naive, k_classes);
            let model = if constant {
                baseline
            } else {
                let mut total = 0.0;
                for (k, test) in folds.iter().enumerate() {
                    let train = train_of(k);
                    let tx: Vec<f64> = train.iter().map(|&i| x[i]).collect();
                    let tl: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
                    let tree = FeatureTree::fit(
                        &tx,
                        TreeTask::Classification { labels: &tl, n_classes: k_classes },
                        config.max_depth,
                    );
                    let pred: Vec<usize> = test.iter().map(|&i| tree.predict(x[i]) as usize).collect();
                    let actual: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
                    total += weighted_f1(&actual, &pred, k_classes);
                }
                total / folds.len() as f64
            };
            (TaskKind::Classification, model, baseline)
        }
    };
    let score = pps_from_metrics(task_kind, model_metric, baseline_metric);
    Ok(PpsResult {
        feature: feature.to_string(),
        target: target_name.to_string(),
        score,
        task_kind,
        model_metric,
        baseline_metric,
    })
}

/// Normalises a model metric against its naive baseline, clamped to `[0, 1]`.
pub fn pps_from_metrics(kind: TaskKind, model_metric: f64, baseline_metric: f64) -> f64 {
    let raw = match kind {
        TaskKind::Regression if baseline_metric > 0.0 => 1.0 - model_metric / baseline_metric,
        TaskKind::Classification if baseline_metric < 1.0 => {
            (model_metric - baseline_metric) / (1.0 - baseline_metric)
        }
        _ => 0.0,
    };
    raw.clamp(0.0, 1.0)
}

fn resolve_target(dataset: &FlowDataset, target: &str) -> Result<Target> {
    let schema = dataset.schema();
    if target == schema.label_name() {
        Ok(Target::Category(dataset.labels(), schema.n_categories()))
    } else {
        let j = schema.feature_index(target).ok_or_else(|| PpsError::UnknownColumn(target.to_string()))?;
        Ok(Target::Numeric(dataset.column(j)))
    }
}

/// PPS of `feature` predicting `target`, where `target` is either another
/// feature (regression) or the label column (classification).
pub fn pps_score(dataset: &FlowDataset, feature: &str, target: &str, config: &PpsConfig) -> Result<PpsResult> {
    if feature == target {
        return Err(PpsError::SelfPrediction(feature.to_string()));
    }
    let j = dataset.schema().feature_index(feature).ok_or_else(|| PpsError::UnknownColumn(feature.to_string()))?;
    let target_col = resolve_target(dataset, target)?;
    score_columns(&dataset.column(j), &target_col, feature, target, config)
}

/// Scores of every feature (rows) against each target (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpsMatrix {
    pub features: Vec<String>,
    pub targets: Vec<String>,
    /// `cells[i][j]` is feature i predicting target j.
    pub cells: Vec<Vec<PpsResult>>,
}

impl PpsMatrix {
    pub fn score(&self, feature: &str, target: &str) -> Option<f64> {
        let i = self.features.iter().position(|f| f == feature)?;
        let j = self.targets.iter().position(|t| t == target)?;
        Some(self.cells[i][j].score)
    }

    /// Feature→score pairs for one target column.
    pub fn column_scores(&self, target: &str) -> Option<Vec<(String, f64)>> {
        let j = self.targets.iter().position(|t| t == target)?;
        Some(self.features.iter().zip(&self.cells).map(|(f, row)| (f.clone(), row[j].score)).collect())
    }

    /// CSV with a `feature` column followed by one column per target.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("feature").chain(self.targets.iter().map(String::as_str)))?;
        for (f, row) in self.features.iter().zip(&self.cells) {
            let mut rec = vec![f.clone()];
            rec.extend(row.iter().map(|c| c.score.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full score matrix, every schema feature against each target. The diagonal
/// (feature predicting itself) is 1 by convention. Each cell uses its own
/// seed derived from `(config.seed, i, j)`, so cells are computed in parallel.
pub fn pps_matrix(dataset: &FlowDataset, targets: &[String], config: &PpsConfig) -> Result<PpsMatrix> {
    let schema = dataset.schema();
    let features = schema.names().to_vec();
    let resolved = targets.iter().map(|t| resolve_target(dataset, t)).collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<f64>> = (0..features.len()).map(|j| dataset.column(j)).collect();
    let cells = (0..features.len())
        .into_par_iter()
        .map(|i| {
            (0..targets.len())
                .map(|j| {
                    if features[i] == targets[j] {
                        return Ok(PpsResult {
                            feature: features[i].clone(),
                            target: targets[j].clone(),
                            score: 1.0,
                            task_kind: TaskKind::Regression,
                            model_metric: 0.0,
                            baseline_metric: 0.0,
                        });
                    }
                    let cell_cfg =
                        PpsConfig { seed: derive_seed(config.seed, "pps-cell", &[i as u64, j as u64]), ..config.clone() };
                    score_columns(&columns[i], &resolved[j], &features[i], &targets[j], &cell_cfg)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PpsMatrix { features, targets: targets.to_vec(), cells })
}

/// Features scoring strictly above `threshold`, by descending score and then
/// by name.
pub fn select_features<S: AsRef<str>>(scores: &[(S, f64)], threshold: f64) -> Result<Vec<String>> {
    let mut kept: Vec<(&str, f64)> =
        scores.iter().filter(|(_, s)| *s > threshold).map(|(n, s)| (n.as_ref(), *s)).collect();
    if kept.is_empty() {
        return Err(PpsError::EmptySelection { threshold });
    }
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(kept.into_iter().map(|(n, _)| n.to_string()).collect())
}
