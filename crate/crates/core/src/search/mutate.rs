use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Result, SearchConfig, SearchError};
use crate::reservoir::{Activation, ReservoirGenome};
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOp {
    InsertNode,
    AddConnection,
    ChangeActivation,
}

impl MutationOp {
    pub const ALL: [MutationOp; 3] = [MutationOp::InsertNode, MutationOp::AddConnection, MutationOp::ChangeActivation];

    fn rate(self, config: &SearchConfig) -> f64 {
        let r = config.mutation_rates;
        match self {
            MutationOp::InsertNode => r.insert_node,
            MutationOp::AddConnection => r.add_connection,
            MutationOp::ChangeActivation => r.change_activation,
        }
    }
}

fn growable_layers(g: &ReservoirGenome, config: &SearchConfig) -> Vec<usize> {
    (0..g.n_layers()).filter(|&l| g.layer_sizes[l] < config.max_layer_size).collect()
}

fn free_skips(g: &ReservoirGenome) -> Vec<(usize, usize)> {
    let n = g.n_layers();
    (0..n)
        .flat_map(|f| (f + 2..n).map(move |t| (f, t)))
        .filter(|p| !g.inter_layer_skips.contains(p))
        .collect()
}

fn legal(op: MutationOp, g: &ReservoirGenome, config: &SearchConfig) -> bool {
    match op {
        MutationOp::InsertNode => !growable_layers(g, config).is_empty(),
        MutationOp::AddConnection => g.density < 1.0 || !free_skips(g).is_empty(),
        MutationOp::ChangeActivation => g.n_layers() > 0,
    }
}

/// Applies exactly one operator, drawn by the configured rates among the
/// operators that keep the genome inside the bounds. The child keeps the
/// parent's weight seed.
pub fn mutate(genome: &ReservoirGenome, seed: u64, config: &SearchConfig) -> Result<ReservoirGenome> {
    let mut r = rng(seed);
    let options: Vec<(MutationOp, f64)> = MutationOp::ALL
        .into_iter()
        .map(|op| (op, op.rate(config)))
        .filter(|&(op, p)| p > 0.0 && legal(op, genome, config))
        .collect();
    let total: f64 = options.iter().map(|o| o.1).sum();
    if options.is_empty() || total <= 0.0 {
        return Err(SearchError::NoLegalMutation);
    }
    let mut ticket = r.random_range(0.0..total);
    let mut chosen = options[options.len() - 1].0;
    for &(op, p) in &options {
        if ticket < p {
            chosen = op;
            break;
        }
        ticket -= p;
    }
    apply(genome, chosen, &mut r, config)
}

/// Applies a specific operator; `NoLegalMutation` if it is blocked.
pub fn mutate_with(genome: &ReservoirGenome, op: MutationOp, seed: u64, config: &SearchConfig) -> Result<ReservoirGenome> {
    if !legal(op, genome, config) {
        return Err(SearchError::NoLegalMutation);
    }
    apply(genome, op, &mut rng(seed), config)
}

fn apply(
    genome: &ReservoirGenome,
    op: MutationOp,
    r: &mut crate::seed::Rng,
    config: &SearchConfig,
) -> Result<ReservoirGenome> {
    let mut g = genome.clone();
    match op {
        MutationOp::InsertNode => {
            let layers = growable_layers(&g, config);
            let l = layers[r.random_range(0..layers.len())];
            g.layer_sizes[l] += 1;
        }
        MutationOp::AddConnection => {
            let skips = free_skips(&g);
            let use_skip = g.density >= 1.0 || (!skips.is_empty() && r.random_bool(0.5));
            if use_skip {
                g.inter_layer_skips.insert(skips[r.random_range(0..skips.len())]);
            } else {
                let l = r.random_range(0..g.n_layers());
                let n = g.layer_sizes[l] as f64;
                g.density = (g.density + 1.0 / (n * n)).min(1.0);
            }
        }
        MutationOp::ChangeActivation => {
            let l = r.random_range(0..g.n_layers());
            let current = g.activations[l];
            let choices: Vec<Activation> = Activation::PALETTE.into_iter().filter(|&a| a != current).collect();
            g.activations[l] = choices[r.random_range(0..choices.len())];
        }
    }
    g.validate()?;
    Ok(g)
}
