use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    fit_readout, instantiate, Activation, ReadoutMode, ReadoutModel, ReservoirError, ReservoirGenome,
    ReservoirWeights, Result,
};
use crate::dataset::{FlowDataset, NormStats};
use crate::matrix::Matrix;

/// Bumped whenever the serialised layout changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_SEQUENCE_STEPS: usize = 10;

/// How a static flow vector becomes a hidden representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EncodeMode {
    /// One feed-forward sweep through the layers, `h = g(W x + b)`.
    #[default]
    SingleShot,
    /// Hold the input constant for `steps` updates from a zero state.
    Sequence { steps: usize },
}

/// Per-layer state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub layers: Vec<Vec<f64>>,
}

impl ReservoirState {
    pub fn zeros(genome: &ReservoirGenome) -> Self {
        Self { layers: genome.layer_sizes.iter().map(|&n| vec![0.0; n]).collect() }
    }

    pub fn concat(&self) -> Vec<f64> {
        self.layers.concat()
    }
}

/// Result of classifying one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub category: usize,
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// A deployable classifier: genome, fixed weights, readout and the
/// normalisation it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirModel {
    pub genome: ReservoirGenome,
    pub weights: ReservoirWeights,
    pub readout: Option<ReadoutModel>,
    pub encode_mode: EncodeMode,
    pub norm_stats: Option<NormStats>,
    /// Input feature names, in the order `predict` expects them.
    pub feature_names: Vec<String>,
    pub category_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: ReservoirModel,
}

impl ReservoirModel {
    pub fn new(genome: ReservoirGenome, weights: ReservoirWeights, encode_mode: EncodeMode) -> Result<Self> {
        genome.validate()?;
        weights.check_shapes(&genome)?;
        if let EncodeMode::Sequence { steps: 0 } = encode_mode {
            return Err(ReservoirError::InvalidGenome("sequence encoding needs at least one step".into()));
        }
        Ok(Self {
            genome,
            weights,
            readout: None,
            encode_mode,
            norm_stats: None,
            feature_names: Vec::new(),
            category_names: Vec::new(),
        })
    }

    /// Instantiates fresh random weights for `n_inputs` features.
    pub fn build(genome: ReservoirGenome, n_inputs: usize, encode_mode: EncodeMode) -> Result<Self> {
        let weights = instantiate(&genome, n_inputs)?;
        Self::new(genome, weights, encode_mode)
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.n_inputs()
    }

    /// Width of the concatenated hidden representation.
    pub fn hidden_dim(&self) -> usize {
        self.genome.total_units()
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_inputs() {
            return Err(ReservoirError::DimensionMismatch { expected: self.n_inputs(), got: u.len() });
        }
        Ok(())
    }

    /// Feed-forward drive of layer `l` given the current-step outputs of the
    /// layers below it.
    fn drive(&self, l: usize, u: &[f64], below: &[Vec<f64>]) -> Vec<f64> {
        let w = &self.weights;
        let mut z = w.biases[l].clone();
        if l == 0 {
            w.input_matrix.mul_vec_add(u, &mut z);
        } else {
            w.inter_layer[l - 1].mul_vec_add(&below[l - 1], &mut z);
        }
        for s in w.skips.iter().filter(|s| s.to == l) {
            s.matrix.mul_vec_add(&below[s.from], &mut z);
        }
        z
    }

    /// One state update of every layer:
    ///
    /// `x_l(t) = (1 - a_l) x_l(t-1) + a_l g_l(drive_l(t) + W_rec_l x_l(t-1))`
    ///
    /// where layer 0 is driven by `W_in u(t)` and layer `l > 0` by
    /// `W_l x_{l-1}(t)`, the already-updated state of the layer below.
    pub fn advance(&self, state: &mut ReservoirState, u: &[f64]) -> Result<()> {
        self.check_input(u)?;
        let sizes = &self.genome.layer_sizes;
        if state.layers.len() != sizes.len() || state.layers.iter().zip(sizes).any(|(s, &n)| s.len() != n) {
            return Err(ReservoirError::StateMismatch);
        }
        for l in 0..sizes.len() {
            let mut z = self.drive(l, u, &state.layers);
            self.weights.recurrent[l].mul_vec_add(&state.layers[l], &mut z);
            let a = self.genome.leak_rates[l];
            let g: Activation = self.genome.activations[l];
            for (x, zi) in state.layers[l].iter_mut().zip(z) {
                *x = (1.0 - a) * *x + a * g.apply(zi);
            }
        }
        Ok(())
    }

    /// Sequence encoding from an explicit initial state.
    pub fn encode_from(&self, flow: &[f64], steps: usize, mut state: ReservoirState) -> Result<Vec<f64>> {
        for _ in 0..steps {
            self.advance(&mut state, flow)?;
        }
        Ok(state.concat())
    }

    /// Hidden representation of a normalised flow: the concatenation of every
    /// layer's output.
    pub fn encode(&self, flow: &[f64], mode: EncodeMode) -> Result<Vec<f64>> {
        self.check_input(flow)?;
        match mode {
            EncodeMode::Sequence { steps } => self.encode_from(flow, steps, ReservoirState::zeros(&self.genome)),
            EncodeMode::SingleShot => {
                let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.genome.n_layers());
                for l in 0..self.genome.n_layers() {
                    let g = self.genome.activations[l];
                    let h = self.drive(l, flow, &outs).into_iter().map(|z| g.apply(z)).collect();
                    outs.push(h);
                }
                Ok(outs.concat())
            }
        }
    }

    /// Encodes every row with the model's own encode mode (`n x hidden_dim`).
    pub fn encode_rows(&self, rows: &[Vec<f64>]) -> Result<Matrix> {
        let encoded = rows.par_iter().map(|r| self.encode(r, self.encode_mode)).collect::<Result<Vec<_>>>()?;
        let m = self.hidden_dim();
        Matrix::from_row_major(rows.len(), m, encoded.concat()).ok_or(ReservoirError::StateMismatch)
    }

    /// Trains the readout on an already-normalised dataset and records its
    /// normalisation, feature names and category names.
    pub fn fit(&mut self, train: &FlowDataset, ridge_c: f64, mode: ReadoutMode) -> Result<()> {
        let h = self.encode_rows(&train.feature_rows())?;
        let k = train.schema().n_categories();
        self.readout = Some(fit_readout(&h, &train.labels(), k, ridge_c, mode)?);
        self.norm_stats = train.norm_stats().cloned();
        self.feature_names = train.schema().names().to_vec();
        self.category_names = train.schema().category_names();
        Ok(())
    }

    /// Classifies a flow that is already normalised.
    pub fn predict_normalized(&self, flow: &[f64]) -> Result<Prediction> {
        let readout = self.readout.as_ref().ok_or(ReservoirError::UntrainedModel)?;
        let h = self.encode(flow, self.encode_mode)?;
        let scores = readout.scores(&h);
        Ok(Prediction { category: argmax(&scores), probabilities: softmax(&scores), scores })
    }

    /// Normalises a raw flow with the stored statistics, then classifies it.
    pub fn predict(&self, flow: &[f64]) -> Result<Prediction> {
        let stats = self.norm_stats.as_ref().ok_or(ReservoirError::MissingNormStats)?;
        self.check_input(flow)?;
        self.predict_normalized(&stats.apply(flow))
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    /// Serialises to JSON. Floats are written in shortest round-trip form, so
    /// `load(save(m)) == m` bit for bit.
    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        let file = ModelFile { format_version: MODEL_FORMAT_VERSION, model: self.clone() };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ReservoirError::UnsupportedFormatVersion(file.format_version));
        }
        let m = file.model;
        m.genome.validate()?;
        m.weights.check_shapes(&m.genome)?;
        Ok(m)
    }
}
