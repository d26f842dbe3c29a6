//! Shapley-value attributions of a model's category probability.
//!
//! A feature that is "absent" from a coalition takes its value from each
//! background sample in turn and the coalition value is the mean prediction
//! (marginal expectation). Features outside `active_features` stay fixed at the
//! instance's own values and are never attributed.

mod export;

pub use export::{export_plot_data, global_importance, FeatureImportance, ManifestEntry, PlotData, PlotKind, PlotManifest};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reservoir::{ReservoirError, ReservoirModel};
use crate::seed::{derive_seed, rng};

/// Largest feature count `exact_shapley` will enumerate (2^15 coalitions).
pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Error)]
pub enum ShapleyError {
    #[error("{0} features is too many for exact enumeration (max {MAX_EXACT_FEATURES}); use sampled mode")]
    TooManyFeatures(usize),
    #[error("background set is empty")]
    EmptyBackground,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature index {0} out of range")]
    InvalidFeature(usize),
    #[error("feature index {0} listed twice")]
    DuplicateFeature(usize),
    #[error("target category {target} out of range (model has {n_categories})")]
    TargetOutOfRange { target: usize, n_categories: usize },
    #[error("n_permutations must be at least 1")]
    NoPermutations,
    #[error("force export needs exactly one explanation, got {0}")]
    WrongCardinality(usize),
    #[error("no explanations given")]
    NoExplanations,
    #[error("explanations cover different feature sets")]
    InconsistentFeatures,
    #[error("{0} feature names for {1} features")]
    NameCount(usize, usize),
    #[error("model cannot be explained: {0}")]
    Model(#[from] ReservoirError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ShapleyError> = std::result::Result<T, E>;

/// Anything that maps a feature vector to category probabilities. Must be
/// callable from many threads at once.
pub trait Predictor: Sync {
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self(x)
    }
}

/// A trained reservoir model seen as a predictor on raw (unnormalised) inputs.
pub struct ModelPredictor<'a> {
    model: &'a ReservoirModel,
}

impl<'a> ModelPredictor<'a> {
    /// Checks up front that the model can predict, so later calls cannot fail.
    pub fn new(model: &'a ReservoirModel) -> Result<Self> {
        if model.readout.is_none() {
            return Err(ReservoirError::UntrainedModel.into());
        }
        if model.norm_stats.is_none() {
            return Err(ReservoirError::MissingNormStats.into());
        }
        Ok(Self { model })
    }

    pub fn n_inputs(&self) -> usize {
        self.model.n_inputs()
    }
}

impl Predictor for ModelPredictor<'_> {
    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.model.predict(x).expect("inputs validated before explanation").probabilities
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    samples: Vec<Vec<f64>>,
    origin: String,
}

impl BackgroundSet {
    pub fn new(samples: Vec<Vec<f64>>, origin: impl Into<String>) -> Result<Self> {
        let d = samples.first().ok_or(ShapleyError::EmptyBackground)?.len();
        if let Some(bad) = samples.iter().find(|s| s.len() != d) {
            return Err(ShapleyError::DimensionMismatch { expected: d, got: bad.len() });
        }
        Ok(Self { samples, origin: origin.into() })
    }

    /// Draws `n` distinct rows (all of them when `n >= rows.len()`), kept in
    /// their original order.
    pub fn sample(rows: &[Vec<f64>], n: usize, seed: u64) -> Result<Self> {
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.shuffle(&mut rng(seed));
        idx.truncate(n);
        idx.sort_unstable();
        let samples = idx.iter().map(|&i| rows[i].clone()).collect();
        Self::new(samples, format!("{} of {} rows, seed {seed}", n.min(rows.len()), rows.len()))
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapleyMethod {
    Exact,
    Sampled { permutations: usize, seed: u64 },
    Orderings { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyExplanation {
    pub instance: Vec<f64>,
    pub target_category: usize,
    /// Feature indices the entries of `phi` refer to.
    pub active_features: Vec<usize>,
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
    /// Exact mode: coalition values (2^M). Permutation modes: model calls
    /// (orderings x features x background size).
    pub n_evaluations: u64,
    pub method: ShapleyMethod,
}

impl ShapleyExplanation {
    /// `|sum(phi) - (prediction - base_value)|`.
    pub fn efficiency_gap(&self) -> f64 {
        (neumaier(self.phi.iter().copied()) - (self.prediction - self.base_value)).abs()
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

#[derive(Debug, Clone, Copy, Default)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

fn check_inputs<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: &BackgroundSet,
    target: usize,
    active: &[usize],
) -> Result<()> {
    if background.dim() != x.len() {
        return Err(ShapleyError::DimensionMismatch { expected: x.len(), got: background.dim() });
    }
    let mut seen = vec![false; x.len()];
    for &i in active {
        if i >= x.len() {
            return Err(ShapleyError::InvalidFeature(i));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(ShapleyError::DuplicateFeature(i));
        }
    }
    let k = model.predict_proba(x).len();
    if target >= k {
        return Err(ShapleyError::TargetOutOfRange { target, n_categories: k });
    }
    Ok(())
}

/// Mean of `model(hybrid)[target]` over the background, where the hybrid
/// takes `x` on `present` and the background sample elsewhere.
pub fn coalition_value<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    present: &[usize],
    background: &BackgroundSet,
    target: usize,
) -> f64 {
    let mut acc = NeumaierSum::default();
    let mut hybrid = vec![0.0; x.len()];
    for b in background.samples() {
        hybrid.copy_from_slice(b);
        for &i in present {
            hybrid[i] = x[i];
        }
        acc.add(model.predict_proba(&hybrid)[target]);
    }
    acc.value() / background.len() as f64
}

fn inactive_features(d: usize, active: &[usize]) -> Vec<usize> {
    let mut on = vec![false; d];
    active.iter().for_each(|&i| on[i] = true);
    (0..d).filter(|&i| !on[i]).collect()
}

/// Exact Shapley values by enumerating all 2^M coalitions of the active
/// features.
pub fn exact_shapley<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: &BackgroundSet,
    target: usize,
    active_features: &[usize],
) -> Result<ShapleyExplanation> {
    let m = active_features.len();
    if m > MAX_EXACT_FEATURES {
        return Err(ShapleyError::TooManyFeatures(m));
    }
    check_inputs(model, x, background, target, active_features)?;
    let fixed = inactive_features(x.len(), active_features);
    let values: Vec<f64> = (0..1usize << m)
        .into_par_iter()
        .map(|mask| {
            let mut present = fixed.clone();
            present.extend((0..m).filter(|b| mask >> b & 1 == 1).map(|b| active_features[b]));
            coalition_value(model, x, &present, background, target)
        })
        .collect();

    // w(s) = s! (m - s - 1)! / m! = 1 / (m * C(m - 1, s))
    let mut weight = vec![0.0; m.max(1)];
    let mut binom = 1.0f64;
    for (s, w) in weight.iter_mut().enumerate().take(m) {
        *w = 1.0 / (m as f64 * binom);
        binom = binom * (m - 1 - s) as f64 / (s + 1) as f64;
    }
    let phi = (0..m)
        .map(|i| {
            let bit = 1usize << i;
            let mut acc = NeumaierSum::default();
            for mask in (0..1usize << m).filter(|mask| mask & bit == 0) {
                let s = mask.count_ones() as usize;
                acc.add(weight[s] * (values[mask | bit] - values[mask]));
            }
            acc.value()
        })
        .collect();
    Ok(ShapleyExplanation {
        instance: x.to_vec(),
        target_category: target,
        active_features: active_features.to_vec(),
        phi,
        base_value: values[0],
        prediction: values[(1usize << m) - 1],
        n_evaluations: 1u64 << m,
        method: ShapleyMethod::Exact,
    })
}

/// Permutation count giving roughly `draws` coalition evaluations per
/// background sample over `n_features` features.
pub fn permutations_for_draws(draws: usize, n_features: usize) -> usize {
    draws.div_ceil(n_features.max(1)).max(1)
}

/// Monte-Carlo permutation estimate. Each permutation has its own derived
/// seed, so the result does not depend on thread scheduling.
pub fn sampled_shapley<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: &BackgroundSet,
    target: usize,
    active_features: &[usize],
    n_permutations: usize,
    seed: u64,
) -> Result<ShapleyExplanation> {
    if n_permutations == 0 {
        return Err(ShapleyError::NoPermutations);
    }
    let orderings: Vec<Vec<usize>> = (0..n_permutations as u64)
        .map(|p| {
            let mut order = active_features.to_vec();
            order.shuffle(&mut rng(derive_seed(seed, "shapley-perm", &[p])));
            order
        })
        .collect();
    let mut e = permutation_shapley(model, x, background, target, active_features, &orderings)?;
    e.method = ShapleyMethod::Sampled { permutations: n_permutations, seed };
    Ok(e)
}

/// Averages marginal contributions over the given feature orderings. Each
/// ordering must be a permutation of `active_features`.
pub fn permutation_shapley<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: &BackgroundSet,
    target: usize,
    active_features: &[usize],
    orderings: &[Vec<usize>],
) -> Result<ShapleyExplanation> {
    if orderings.is_empty() {
        return Err(ShapleyError::NoPermutations);
    }
    check_inputs(model, x, background, target, active_features)?;
    let m = active_features.len();
    let mut slot = vec![usize::MAX; x.len()];
    for (k, &i) in active_features.iter().enumerate() {
        slot[i] = k;
    }
    for o in orderings {
        let mut sorted = o.clone();
        sorted.sort_unstable();
        let mut expected = active_features.to_vec();
        expected.sort_unstable();
        if sorted != expected {
            return Err(ShapleyError::InconsistentFeatures);
        }
    }
    let fixed = inactive_features(x.len(), active_features);
    let base = coalition_value(model, x, &fixed, background, target);
    let contributions: Vec<Vec<f64>> = orderings
        .par_iter()
        .map(|order| {
            let mut present = fixed.clone();
            let mut prev = base;
            let mut out = vec![0.0; m];
            for &i in order {
                present.push(i);
                let v = coalition_value(model, x, &present, background, target);
                out[slot[i]] = v - prev;
                prev = v;
            }
            out
        })
        .collect();
    let mut acc = vec![NeumaierSum::default(); m];
    for c in &contributions {
        for (a, v) in acc.iter_mut().zip(c) {
            a.add(*v);
        }
    }
    let n = orderings.len() as f64;
    let mut all = fixed;
    all.extend_from_slice(active_features);
    Ok(ShapleyExplanation {
        instance: x.to_vec(),
        target_category: target,
        active_features: active_features.to_vec(),
        phi: acc.into_iter().map(|a| a.value() / n).collect(),
        base_value: base,
        prediction: coalition_value(model, x, &all, background, target),
        n_evaluations: (orderings.len() * m * background.len()) as u64,
        method: ShapleyMethod::Orderings { count: orderings.len() },
    })
}
