//! Darknet flow classification with stacked random-weight reservoirs.
//!
//! The crate is organised around the pipeline it serves:
//!
//! ```text
//! flow CSV -> dataset (clean, split, normalise) -> pps (feature selection)
//!          -> reservoir (encode + linear readout) <- search (weight-agnostic topology search)
//!          -> metrics (evaluation report)        -> shapley (explanations)
//! ```
//!
//! Every stochastic step takes an explicit seed; nothing reads global
//! randomness, so identical inputs always give identical outputs.

pub mod dataset;
pub mod matrix;
pub mod metrics;
pub mod pps;
pub mod reservoir;
pub mod search;
pub mod seed;
pub mod shapley;

pub use dataset::{FeatureSchema, FlowDataset, FlowRecord, NormStats};
pub use matrix::Matrix;
pub use reservoir::{ReservoirGenome, ReservoirModel};

