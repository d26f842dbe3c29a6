use serde::{Deserialize, Serialize};

use super::{DatasetError, FlowDataset, FlowRecord, Result};

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    /// Always > 0; constant columns store 1.
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn select(&self, idx: &[usize]) -> NormStats {
        NormStats {
            mean: idx.iter().map(|&j| self.mean[j]).collect(),
            std: idx.iter().map(|&j| self.std[j]).collect(),
        }
    }

    fn fit(dataset: &FlowDataset) -> NormStats {
        let n = dataset.len() as f64;
        let d = dataset.n_features();
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for j in 0..d {
            let col = dataset.column(j);
            let m = col.iter().sum::<f64>() / n;
            // second pass removes most of the rounding in the first
            let m = m + col.iter().map(|x| x - m).sum::<f64>() / n;
            mean[j] = m;
            let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            if hi > lo {
                let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                if var > 0.0 {
                    std[j] = var.sqrt();
                }
            }
        }
        NormStats { mean, std }
    }
}

/// Fits z-score statistics on `dataset` and returns the normalised copy.
///
/// Panics if the dataset is empty.
pub fn fit_normalize(dataset: &FlowDataset) -> (FlowDataset, NormStats) {
    assert!(!dataset.is_empty(), "cannot normalise an empty dataset");
    let stats = NormStats::fit(dataset);
    let out = apply_normalize(dataset, &stats).expect("stats fitted on this dataset");
    (out, stats)
}

/// Normalises `dataset` with previously fitted statistics.
pub fn apply_normalize(dataset: &FlowDataset, stats: &NormStats) -> Result<FlowDataset> {
    if stats.len() != dataset.n_features() {
        return Err(DatasetError::DimensionMismatch { index: 0, got: stats.len(), expected: dataset.n_features() });
    }
    let records = dataset
        .records()
        .iter()
        .map(|r| FlowRecord { features: stats.apply(&r.features), label: r.label })
        .collect();
    Ok(FlowDataset::new(dataset.schema().clone(), records)?.with_norm_stats(Some(stats.clone())))
}
