//! Stacked leaky reservoirs with echo-state scaling and closed-form readouts.

mod activation;
mod genome;
mod model;
mod readout;
mod weights;

pub use activation::Activation;
pub use genome::{
    ReservoirGenome, DEFAULT_DENSITY, DEFAULT_INPUT_SCALE, DEFAULT_LEAK_RATE, DEFAULT_SPECTRAL_RADIUS,
};
pub use model::{
    argmax, softmax, EncodeMode, Prediction, ReservoirModel, ReservoirState, DEFAULT_SEQUENCE_STEPS,
    MODEL_FORMAT_VERSION,
};
pub use readout::{fit_readout, random_readout, ReadoutMode, ReadoutModel, PINV_RELATIVE_TOLERANCE};
pub use weights::{instantiate, instantiate_shared, ReservoirWeights, SkipWeights};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReservoirError {
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
    #[error("cannot parse genome notation `{0}`")]
    ParseGenome(String),
    #[error("weights do not match genome: {0}")]
    InvalidWeights(String),
    #[error("recurrent matrix of layer {layer} has spectral radius 0 after resampling")]
    ZeroSpectralRadius { layer: usize },
    #[error("expected input of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state vectors do not match the genome's layer sizes")]
    StateMismatch,
    #[error("model has no readout")]
    UntrainedModel,
    #[error("model has no normalisation statistics")]
    MissingNormStats,
    #[error("ridge parameter must be positive, got {0}")]
    InvalidRidge(f64),
    #[error("random readouts are not fitted")]
    InvalidReadoutMode,
    #[error("readout system could not be solved")]
    SingularSystem,
    #[error("no training rows")]
    EmptyTraining,
    #[error("label {0} outside the category range")]
    LabelOutOfRange(usize),
    #[error("unsupported model format version {0}")]
    UnsupportedFormatVersion(u32),
    #[error(transparent)]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T, E = ReservoirError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests;
