//! Flow-feature datasets: schema, CSV ingestion, normalisation, splitting and
//! a synthetic generator used as a desk-scale stand-in for real captures.

mod csv_io;
mod normalize;
mod schema;
mod split;
mod synth;

pub use csv_io::{load_csv, read_csv, write_csv, LoadReport, MissingValuePolicy};
pub use normalize::{apply_normalize, fit_normalize, NormStats};
pub use schema::{canonical_name, Category, FeatureSchema, REFERENCE_PPS_SCORES};
pub use split::{stratified_split, stratified_split_indices, SplitFractions, SplitIndices};
pub use synth::{synth_generate, SynthSpec};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("dataset has no valid rows")]
    EmptyDataset,
    #[error("line {line}: label `{value}` is not a known category")]
    LabelOutOfRange { line: u64, value: String },
    #[error("column `{0}` has no valid values to impute from")]
    NoValidValues(String),
    #[error("category {0} has fewer than 3 records")]
    CategoryTooSmall(usize),
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    InvalidFractions([f64; 3]),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("record {index} has {got} features, schema expects {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("record {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// One flow: feature values in schema order plus its category id.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub label: usize,
}

/// An immutable, validated collection of flow records.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    schema: FeatureSchema,
    records: Vec<FlowRecord>,
    norm_stats: Option<NormStats>,
}

impl FlowDataset {
    /// Validates record width, finiteness and labels against the schema.
    pub fn new(schema: FeatureSchema, records: Vec<FlowRecord>) -> Result<Self> {
        let d = schema.n_features();
        let k = schema.n_categories();
        for (index, r) in records.iter().enumerate() {
            if r.features.len() != d {
                return Err(DatasetError::DimensionMismatch { index, got: r.features.len(), expected: d });
            }
            if r.features.iter().any(|x| !x.is_finite()) {
                return Err(DatasetError::NonFinite { index });
            }
            if r.label >= k {
                return Err(DatasetError::LabelOutOfRange { line: index as u64, value: r.label.to_string() });
            }
        }
        Ok(Self { schema, records, norm_stats: None })
    }

    pub(crate) fn with_norm_stats(mut self, stats: Option<NormStats>) -> Self {
        self.norm_stats = stats;
        self
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    /// Statistics this dataset was normalised with, if any.
    pub fn norm_stats(&self) -> Option<&NormStats> {
        self.norm_stats.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.n_features()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.features[j]).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Count of records per category id (every schema category is present as a key).
    pub fn label_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h: BTreeMap<usize, usize> = (0..self.schema.n_categories()).map(|c| (c, 0)).collect();
        for r in &self.records {
            *h.entry(r.label).or_default() += 1;
        }
        h
    }

    /// Rows of the feature matrix, in record order.
    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.features.clone()).collect()
    }

    /// Keeps only the named features, in the order given.
    pub fn select_features(&self, names: &[String]) -> Result<FlowDataset> {
        let idx = self.schema.indices_of(names)?;
        let schema = self.schema.select(&idx);
        let records = self
            .records
            .iter()
            .map(|r| FlowRecord { features: idx.iter().map(|&j| r.features[j]).collect(), label: r.label })
            .collect();
        let stats = self.norm_stats.as_ref().map(|s| s.select(&idx));
        Ok(FlowDataset { schema, records, norm_stats: stats })
    }

    /// Subset of records by index, keeping schema and statistics.
    pub fn subset(&self, indices: &[usize]) -> FlowDataset {
        FlowDataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// Same features, labels replaced. Used by label-permutation checks.
    pub fn with_labels(&self, labels: &[usize]) -> Result<FlowDataset> {
        let records = self
            .records
            .iter()
            .zip(labels)
            .map(|(r, &label)| FlowRecord { features: r.features.clone(), label })
            .collect();
        Ok(FlowDataset::new(self.schema.clone(), records)?.with_norm_stats(self.norm_stats.clone()))
    }
}
