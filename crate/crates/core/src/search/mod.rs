//! Weight-agnostic evolutionary search over reservoir genomes.
//!
//! Each genome is scored with every weight in a small shared palette (all
//! non-zero weights set to that single value, sign pattern kept) and ranked
//! by Pareto dominance on (mean fitness, worst fitness, connection count).

mod mutate;
mod rank;

pub use mutate::{mutate, mutate_with, MutationOp};
pub use rank::{dominates, rank};

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FlowDataset;
use crate::reservoir::{
    argmax, instantiate_shared, random_readout, Activation, EncodeMode, ReadoutMode, ReservoirError, ReservoirGenome,
    ReservoirModel,
};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("no mutation operator can be applied within the configured bounds")]
    NoLegalMutation,
    #[error("train and validation sets disagree: {0}")]
    DatasetMismatch(String),
    #[error("empty {0} set")]
    EmptyDataset(&'static str),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SearchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Seeded random readout per weight sample; labels of the training set
    /// are never read.
    Agnostic,
    /// Ridge readout fitted on the training set per weight sample.
    #[default]
    ReadoutTrained,
}

/// Probability of each mutation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationRates {
    pub insert_node: f64,
    pub add_connection: f64,
    pub change_activation: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        Self { insert_node: 0.3, add_connection: 0.3, change_activation: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub population_size: usize,
    pub generations: usize,
    pub shared_weight_values: Vec<f64>,
    pub eval_mode: EvalMode,
    pub elitism_count: usize,
    pub mutation_rates: MutationRates,
    pub seed: u64,
    pub min_layers: usize,
    pub max_layers: usize,
    pub min_layer_size: usize,
    pub max_layer_size: usize,
    /// Ridge parameter for `readout_trained` evaluation.
    pub ridge_c: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            population_size: 32,
            generations: 20,
            shared_weight_values: vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
            eval_mode: EvalMode::default(),
            elitism_count: 2,
            mutation_rates: MutationRates::default(),
            seed: 0,
            min_layers: 1,
            max_layers: 4,
            min_layer_size: 2,
            max_layer_size: 32,
            ridge_c: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SearchError::InvalidConfig(m));
        if self.population_size == 0 || self.generations == 0 {
            return bad("population_size and generations must be positive".into());
        }
        if self.elitism_count >= self.population_size {
            return bad(format!(
                "elitism_count {} must be below population_size {}",
                self.elitism_count, self.population_size
            ));
        }
        let r = self.mutation_rates;
        let rates = [r.insert_node, r.add_connection, r.change_activation];
        if rates.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (rates.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("mutation rates {rates:?} must be probabilities summing to 1"));
        }
        if self.shared_weight_values.is_empty() || self.shared_weight_values.iter().any(|w| *w == 0.0 || !w.is_finite()) {
            return bad("shared_weight_values must be non-empty, finite and non-zero".into());
        }
        if self.min_layers == 0 || self.min_layers > self.max_layers {
            return bad(format!("layer count bounds [{}, {}] are empty", self.min_layers, self.max_layers));
        }
        if self.min_layer_size == 0 || self.min_layer_size > self.max_layer_size {
            return bad(format!("layer size bounds [{}, {}] are empty", self.min_layer_size, self.max_layer_size));
        }
        if !(self.ridge_c > 0.0 && self.ridge_c.is_finite()) {
            return bad(format!("ridge_c {} must be positive", self.ridge_c));
        }
        Ok(())
    }

    /// Whether a genome lies inside the configured bounds.
    pub fn admits(&self, g: &ReservoirGenome) -> bool {
        (self.min_layers..=self.max_layers).contains(&g.n_layers())
            && g.layer_sizes.iter().all(|s| (self.min_layer_size..=self.max_layer_size).contains(s))
            && g.density > 0.0
            && g.density <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedGenome {
    pub genome: ReservoirGenome,
    /// Mean validation accuracy over the shared-weight samples.
    pub fitness_mean: f64,
    /// Worst validation accuracy over the samples.
    pub fitness_min: f64,
    /// Non-zero connections in the instantiated mask.
    pub complexity: usize,
    /// 1-based position after [`rank`]; 0 before ranking.
    pub rank: usize,
    /// 1-based Pareto front after [`rank`]; 0 before ranking.
    pub front: usize,
    pub generation: usize,
}

fn accuracy(model: &ReservoirModel, val: &FlowDataset) -> Result<f64> {
    let readout = model.readout.as_ref().ok_or(ReservoirError::UntrainedModel)?;
    let h = model.encode_rows(&val.feature_rows())?;
    let correct = val
        .records()
        .iter()
        .enumerate()
        .filter(|(i, r)| argmax(&readout.scores(h.row(*i))) == r.label)
        .count();
    Ok(correct as f64 / val.len() as f64)
}

fn check_data(train: &FlowDataset, val: &FlowDataset) -> Result<()> {
    if val.is_empty() {
        return Err(SearchError::EmptyDataset("validation"));
    }
    if train.is_empty() {
        return Err(SearchError::EmptyDataset("training"));
    }
    if train.n_features() != val.n_features() || train.schema().n_categories() != val.schema().n_categories() {
        return Err(SearchError::DatasetMismatch(format!(
            "{} vs {} features, {} vs {} categories",
            train.n_features(),
            val.n_features(),
            train.schema().n_categories(),
            val.schema().n_categories()
        )));
    }
    Ok(())
}

/// Scores one genome with every shared weight value.
pub fn evaluate(
    genome: &ReservoirGenome,
    train: &FlowDataset,
    val: &FlowDataset,
    config: &SearchConfig,
) -> Result<EvaluatedGenome> {
    check_data(train, val)?;
    genome.validate()?;
    let d = val.n_features();
    let k = val.schema().n_categories();
    let mut scores = Vec::with_capacity(config.shared_weight_values.len());
    let mut complexity = 0;
    for (i, &w) in config.shared_weight_values.iter().enumerate() {
        let weights = instantiate_shared(genome, d, w)?;
        complexity = weights.connection_count();
        let mut model = ReservoirModel::new(genome.clone(), weights, EncodeMode::SingleShot)?;
        match config.eval_mode {
            EvalMode::ReadoutTrained => model.fit(train, config.ridge_c, ReadoutMode::Ridge)?,
            EvalMode::Agnostic => {
                let seed = derive_seed(genome.seed, "agnostic-readout", &[i as u64]);
                model.readout = Some(random_readout(model.hidden_dim(), k, seed));
            }
        }
        scores.push(accuracy(&model, val)?);
    }
    let n = scores.len() as f64;
    Ok(EvaluatedGenome {
        genome: genome.clone(),
        fitness_mean: scores.iter().sum::<f64>() / n,
        fitness_min: scores.iter().copied().fold(f64::INFINITY, f64::min),
        complexity,
        rank: 0,
        front: 0,
        generation: 0,
    })
}

/// Connection count of a fully dense instantiation; the complexity assigned
/// to genomes that cannot be instantiated.
fn dense_bound(g: &ReservoirGenome, n_inputs: usize) -> usize {
    let s = &g.layer_sizes;
    s[0] * n_inputs
        + s.iter().map(|n| n * n).sum::<usize>()
        + s.windows(2).map(|w| w[0] * w[1]).sum::<usize>()
        + g.inter_layer_skips.iter().map(|&(f, t)| s[f] * s[t]).sum::<usize>()
}

fn evaluate_or_fail(
    genome: &ReservoirGenome,
    train: &FlowDataset,
    val: &FlowDataset,
    config: &SearchConfig,
    generation: usize,
) -> Result<EvaluatedGenome> {
    let mut e = match evaluate(genome, train, val, config) {
        Ok(e) => e,
        // degenerate shared mask (nilpotent sign pattern) or singular fit
        Err(SearchError::Reservoir(
            ReservoirError::ZeroSpectralRadius { .. } | ReservoirError::SingularSystem,
        )) => EvaluatedGenome {
            genome: genome.clone(),
            fitness_mean: 0.0,
            fitness_min: 0.0,
            complexity: dense_bound(genome, val.n_features()),
            rank: 0,
            front: 0,
            generation,
        },
        Err(e) => return Err(e),
    };
    e.generation = generation;
    Ok(e)
}

/// Uniform draw within the configured bounds.
pub fn random_genome(config: &SearchConfig, seed: u64) -> ReservoirGenome {
    let mut r = rng(seed);
    let n = r.random_range(config.min_layers..=config.max_layers);
    let sizes = (0..n).map(|_| r.random_range(config.min_layer_size..=config.max_layer_size)).collect();
    let mut g = ReservoirGenome::from_sizes(sizes, derive_seed(seed, "weights", &[]));
    g.activations = (0..n).map(|_| Activation::PALETTE[r.random_range(0..Activation::PALETTE.len())]).collect();
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_complexity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: EvaluatedGenome,
    pub history: Vec<GenerationStats>,
    /// Final generation in rank order.
    pub population: Vec<EvaluatedGenome>,
}

fn stats(generation: usize, ranked: &[EvaluatedGenome]) -> GenerationStats {
    GenerationStats {
        generation,
        best_fitness: ranked[0].fitness_mean,
        mean_fitness: ranked.iter().map(|e| e.fitness_mean).sum::<f64>() / ranked.len() as f64,
        best_complexity: ranked[0].complexity,
    }
}

/// Index drawn with probability proportional to `n - i` (linear ranking).
fn linear_rank_pick(n: usize, r: &mut crate::seed::Rng) -> usize {
    let total = n * (n + 1) / 2;
    let mut ticket = r.random_range(0..total);
    for i in 0..n {
        let w = n - i;
        if ticket < w {
            return i;
        }
        ticket -= w;
    }
    n - 1
}

pub fn run_search(train: &FlowDataset, val: &FlowDataset, config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    check_data(train, val)?;
    let initial: Vec<ReservoirGenome> = (0..config.population_size as u64)
        .map(|i| random_genome(config, derive_seed(config.seed, "genome", &[0, i])))
        .collect();
    let evaluated = initial
        .par_iter()
        .map(|g| evaluate_or_fail(g, train, val, config, 0))
        .collect::<Result<Vec<_>>>()?;
    let mut population = rank(evaluated);
    let mut history = vec![stats(0, &population)];

    for gen in 1..config.generations {
        let mut select = rng(derive_seed(config.seed, "select", &[gen as u64]));
        let n_children = config.population_size - config.elitism_count;
        let children = (0..n_children)
            .map(|i| {
                let parent = &population[linear_rank_pick(population.len(), &mut select)].genome;
                mutate(parent, derive_seed(config.seed, "mutate", &[gen as u64, i as u64]), config)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut next: Vec<EvaluatedGenome> = population[..config.elitism_count].to_vec();
        next.extend(
            children
                .par_iter()
                .map(|g| evaluate_or_fail(g, train, val, config, gen))
                .collect::<Result<Vec<_>>>()?,
        );
        population = rank(next);
        history.push(stats(gen, &population));
    }
    Ok(SearchOutcome { best: population[0].clone(), history, population })
}

pub fn write_history_csv<W: Write>(history: &[GenerationStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["generation", "best_fitness", "mean_fitness", "best_complexity"])?;
    for h in history {
        w.write_record([
            h.generation.to_string(),
            h.best_fitness.to_string(),
            h.mean_fitness.to_string(),
            h.best_complexity.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_population_csv<W: Write>(population: &[EvaluatedGenome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "rank",
        "front",
        "genome",
        "activations",
        "skips",
        "density",
        "fitness_mean",
        "fitness_min",
        "complexity",
        "generation",
        "seed",
    ])?;
    for e in population {
        let acts: Vec<&str> = e.genome.activations.iter().map(|a| a.name()).collect();
        let skips: Vec<String> = e.genome.inter_layer_skips.iter().map(|(f, t)| format!("{f}>{t}")).collect();
        w.write_record([
            e.rank.to_string(),
            e.front.to_string(),
            e.genome.notation(),
            acts.join("-"),
            skips.join(" "),
            e.genome.density.to_string(),
            e.fitness_mean.to_string(),
            e.fitness_min.to_string(),
            e.complexity.to_string(),
            e.generation.to_string(),
            e.genome.seed.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests;
