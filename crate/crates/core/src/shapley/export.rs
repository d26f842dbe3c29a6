use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{neumaier, Result, ShapleyError, ShapleyExplanation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub index: usize,
    pub mean_abs_phi: f64,
}

fn check_consistent(explanations: &[ShapleyExplanation], names: &[String]) -> Result<()> {
    let first = explanations.first().ok_or(ShapleyError::NoExplanations)?;
    if explanations.iter().any(|e| e.active_features != first.active_features) {
        return Err(ShapleyError::InconsistentFeatures);
    }
    if names.len() != first.instance.len() {
        return Err(ShapleyError::NameCount(names.len(), first.instance.len()));
    }
    Ok(())
}

/// Mean |phi| per feature, largest first; equal means are ordered by name.
pub fn global_importance(explanations: &[ShapleyExplanation], names: &[String]) -> Result<Vec<FeatureImportance>> {
    check_consistent(explanations, names)?;
    let n = explanations.len() as f64;
    let mut out: Vec<FeatureImportance> = explanations[0]
        .active_features
        .iter()
        .enumerate()
        .map(|(k, &index)| FeatureImportance {
            feature: names[index].clone(),
            index,
            mean_abs_phi: neumaier(explanations.iter().map(|e| e.phi[k].abs())) / n,
        })
        .collect();
    out.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi).then_with(|| a.feature.cmp(&b.feature)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Bar,
    Beeswarm,
    Force,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Bar, PlotKind::Beeswarm, PlotKind::Force];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Bar => "bar",
            PlotKind::Beeswarm => "beeswarm",
            PlotKind::Force => "force",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmRow {
    pub explanation: usize,
    pub feature: String,
    pub feature_value: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRow {
    pub feature: String,
    pub feature_value: f64,
    pub phi: f64,
}

/// Tabular data behind the bar, beeswarm and force plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlotData {
    Bar(Vec<FeatureImportance>),
    Beeswarm(Vec<BeeswarmRow>),
    Force { base_value: f64, prediction: f64, rows: Vec<ForceRow> },
}

pub fn export_plot_data(explanations: &[ShapleyExplanation], kind: PlotKind, names: &[String]) -> Result<PlotData> {
    if kind == PlotKind::Force && explanations.len() != 1 {
        return Err(ShapleyError::WrongCardinality(explanations.len()));
    }
    check_consistent(explanations, names)?;
    Ok(match kind {
        PlotKind::Bar => PlotData::Bar(global_importance(explanations, names)?),
        PlotKind::Beeswarm => PlotData::Beeswarm(
            explanations
                .iter()
                .enumerate()
                .flat_map(|(e_idx, e)| {
                    e.active_features.iter().zip(&e.phi).map(move |(&i, &phi)| BeeswarmRow {
                        explanation: e_idx,
                        feature: names[i].clone(),
                        feature_value: e.instance[i],
                        phi,
                    })
                })
                .collect(),
        ),
        PlotKind::Force => {
            let e = &explanations[0];
            let mut rows: Vec<ForceRow> = e
                .active_features
                .iter()
                .zip(&e.phi)
                .map(|(&i, &phi)| ForceRow { feature: names[i].clone(), feature_value: e.instance[i], phi })
                .collect();
            rows.sort_by(|a, b| b.phi.abs().total_cmp(&a.phi.abs()).then_with(|| a.feature.cmp(&b.feature)));
            PlotData::Force { base_value: e.base_value, prediction: e.prediction, rows }
        }
    })
}

impl PlotData {
    pub fn n_rows(&self) -> usize {
        match self {
            PlotData::Bar(r) => r.len(),
            PlotData::Beeswarm(r) => r.len(),
            PlotData::Force { rows, .. } => rows.len(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match self {
            PlotData::Bar(rows) => {
                w.write_record(["feature", "mean_abs_phi"])?;
                for r in rows {
                    w.write_record([r.feature.clone(), r.mean_abs_phi.to_string()])?;
                }
            }
            PlotData::Beeswarm(rows) => {
                w.write_record(["explanation", "feature", "feature_value", "phi"])?;
                for r in rows {
                    w.write_record([
                        r.explanation.to_string(),
                        r.feature.clone(),
                        r.feature_value.to_string(),
                        r.phi.to_string(),
                    ])?;
                }
            }
            PlotData::Force { base_value, prediction, rows } => {
                w.write_record(["base_value", "prediction", "feature", "feature_value", "phi"])?;
                for r in rows {
                    w.write_record([
                        base_value.to_string(),
                        prediction.to_string(),
                        r.feature.clone(),
                        r.feature_value.to_string(),
                        r.phi.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub row: usize,
    pub target_category: usize,
    pub base_value: f64,
    pub prediction: f64,
    pub sum_phi: f64,
    pub efficiency_gap: f64,
    pub n_evaluations: u64,
}

/// Companion record for a set of plot exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub method: String,
    pub seed: Option<u64>,
    pub permutations: Option<usize>,
    pub background: String,
    pub background_size: usize,
    /// Documented bound on `efficiency_gap` for this method.
    pub efficiency_tolerance: f64,
    /// Model evaluations per explained row.
    pub n_evaluations: u64,
    pub total_evaluations: u64,
    pub files: Vec<String>,
    pub explanations: Vec<ManifestEntry>,
}

impl ManifestEntry {
    pub fn new(row: usize, e: &ShapleyExplanation) -> Self {
        Self {
            row,
            target_category: e.target_category,
            base_value: e.base_value,
            prediction: e.prediction,
            sum_phi: neumaier(e.phi.iter().copied()),
            efficiency_gap: e.efficiency_gap(),
            n_evaluations: e.n_evaluations,
        }
    }
}
