use rand::seq::SliceRandom;
use rand::Rng as _;

use super::*;
use crate::dataset::{apply_normalize, fit_normalize, stratified_split, synth_generate, SplitFractions, SynthSpec};

fn blobs(n_per_class: usize, k: usize, d: usize, separation: f64, seed: u64) -> (FlowDataset, FlowDataset) {
    let spec = SynthSpec { n_per_class, n_features: d, n_informative: d.min(4), class_count: k, separation, seed };
    let ds = synth_generate(&spec).unwrap();
    let (train, val, _) = stratified_split(&ds, SplitFractions::default(), seed).unwrap();
    let (train, stats) = fit_normalize(&train);
    (train, apply_normalize(&val, &stats).unwrap())
}

fn nearest_centroid_accuracy(train: &FlowDataset, val: &FlowDataset) -> f64 {
    let k = train.schema().n_categories();
    let d = train.n_features();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for r in train.records() {
        counts[r.label] += 1.0;
        sums[r.label].iter_mut().zip(&r.features).for_each(|(s, x)| *s += x);
    }
    let centroids: Vec<Vec<f64>> = sums.iter().zip(&counts).map(|(s, c)| s.iter().map(|v| v / c).collect()).collect();
    let hits = val
        .records()
        .iter()
        .filter(|r| {
            let dist = |c: &Vec<f64>| c.iter().zip(&r.features).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            (0..k).min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b]))).unwrap() == r.label
        })
        .count();
    hits as f64 / val.len() as f64
}

fn small_config(seed: u64) -> SearchConfig {
    SearchConfig {
        population_size: 8,
        generations: 4,
        seed,
        max_layers: 3,
        max_layer_size: 12,
        shared_weight_values: vec![-1.0, 0.5, 2.0],
        ..SearchConfig::default()
    }
}

fn fake(mean: f64, min: f64, complexity: usize, seed: u64) -> EvaluatedGenome {
    EvaluatedGenome {
        genome: ReservoirGenome::from_sizes(vec![2], seed),
        fitness_mean: mean,
        fitness_min: min,
        complexity,
        rank: 0,
        front: 0,
        generation: 0,
    }
}

#[test]
fn config_validation() {
    assert!(SearchConfig::default().validate().is_ok());
    let mut c = SearchConfig::default();
    c.elitism_count = c.population_size;
    assert!(c.validate().is_err());
    let mut c = SearchConfig::default();
    c.mutation_rates.insert_node = 0.31;
    assert!(c.validate().is_err());
    let mut c = SearchConfig::default();
    c.shared_weight_values = vec![0.0];
    assert!(c.validate().is_err());
}

#[test]
fn complexity_breaks_fitness_ties() {
    let r = rank(vec![fake(0.7, 0.6, 100, 1), fake(0.7, 0.6, 80, 2)]);
    assert_eq!(r[0].complexity, 80);
    assert_eq!((r[0].front, r[1].front), (1, 2));
}

#[test]
fn incomparable_pair_shares_a_front() {
    let r = rank(vec![fake(0.8, 0.8, 50, 1), fake(0.9, 0.9, 100, 2)]);
    assert_eq!((r[0].fitness_mean, r[0].front, r[0].rank), (0.9, 1, 1));
    assert_eq!((r[1].front, r[1].rank), (1, 2));
}

/// Fronts by repeated peeling of the non-dominated set with pairwise checks.
fn peel_fronts(pop: &[EvaluatedGenome]) -> Vec<usize> {
    let mut front = vec![0; pop.len()];
    let mut level = 0;
    while front.contains(&0) {
        level += 1;
        let remaining: Vec<usize> = (0..pop.len()).filter(|&i| front[i] == 0).collect();
        let layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| j != i && dominates(&pop[j], &pop[i])))
            .collect();
        layer.into_iter().for_each(|i| front[i] = level);
    }
    front
}

fn oracle_order(pop: &[EvaluatedGenome]) -> Vec<usize> {
    let front = peel_fronts(pop);
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| {
        (front[a], -pop[a].fitness_mean, pop[a].complexity, pop[a].genome.seed, a)
            .partial_cmp(&(front[b], -pop[b].fitness_mean, pop[b].complexity, pop[b].genome.seed, b))
            .unwrap()
    });
    idx
}

fn random_population(seed: u64, n: usize) -> Vec<EvaluatedGenome> {
    let mut r = crate::seed::rng(seed);
    (0..n)
        .map(|i| {
            // coarse grid so ties and dominance both occur
            let mean = r.random_range(0..6) as f64 / 5.0;
            let min = mean - r.random_range(0..3) as f64 / 10.0;
            let mut e = fake(mean, min, r.random_range(10..16), r.random_range(0..4));
            e.generation = i;
            e
        })
        .collect()
}

#[test]
fn rank_matches_dominance_oracle_on_ten() {
    let pop = random_population(5, 10);
    let expected: Vec<usize> = oracle_order(&pop).into_iter().map(|i| pop[i].generation).collect();
    let got: Vec<usize> = rank(pop).iter().map(|e| e.generation).collect();
    assert_eq!(got, expected);
}

#[test]
fn change_activation_excludes_current() {
    let g = ReservoirGenome::from_sizes(vec![5], 3);
    let c = SearchConfig::default();
    for s in 0..40 {
        let child = mutate_with(&g, MutationOp::ChangeActivation, s, &c).unwrap();
        assert_ne!(child.activations[0], Activation::Tanh);
    }
}

#[test]
fn insert_node_grows_one_layer() {
    let g = ReservoirGenome::from_sizes(vec![11, 17, 9], 3);
    let c = SearchConfig::default();
    let allowed = [vec![12, 17, 9], vec![11, 18, 9], vec![11, 17, 10]];
    let mut seen = std::collections::BTreeSet::new();
    for s in 0..60 {
        let child = mutate_with(&g, MutationOp::InsertNode, s, &c).unwrap();
        assert!(allowed.contains(&child.layer_sizes), "{:?}", child.layer_sizes);
        seen.insert(child.layer_sizes);
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn add_connection_raises_density_or_adds_skip() {
    let g = ReservoirGenome::from_sizes(vec![4, 4, 4], 3);
    let c = SearchConfig::default();
    for s in 0..30 {
        let child = mutate_with(&g, MutationOp::AddConnection, s, &c).unwrap();
        let grew = (child.density - (g.density + 1.0 / 16.0)).abs() < 1e-15;
        let skip = child.inter_layer_skips.len() == 1 && child.inter_layer_skips.contains(&(0, 2));
        assert!(grew ^ skip);
    }
}

#[test]
fn mutation_is_deterministic_and_blocked_ops_redrawn() {
    let g = ReservoirGenome::from_sizes(vec![6, 7], 9);
    let c = SearchConfig::default();
    assert_eq!(mutate(&g, 77, &c).unwrap(), mutate(&g, 77, &c).unwrap());
    let mut c = SearchConfig { max_layer_size: 7, ..SearchConfig::default() };
    let full = ReservoirGenome::from_sizes(vec![7, 7], 9);
    for s in 0..30 {
        assert_eq!(mutate(&full, s, &c).unwrap().layer_sizes, vec![7, 7]);
    }
    c.mutation_rates = MutationRates { insert_node: 1.0, add_connection: 0.0, change_activation: 0.0 };
    assert!(matches!(mutate(&full, 1, &c), Err(SearchError::NoLegalMutation)));
}

#[test]
fn single_weight_gives_equal_mean_and_min() {
    let (train, val) = blobs(40, 3, 6, 4.0, 1);
    let c = SearchConfig { shared_weight_values: vec![0.5], ..SearchConfig::default() };
    let e = evaluate(&ReservoirGenome::from_sizes(vec![8, 6], 2), &train, &val, &c).unwrap();
    assert_eq!(e.fitness_mean, e.fitness_min);
    assert!(e.complexity >= 14);
}

#[test]
fn trained_readout_solves_separable_blobs() {
    for seed in [4, 5, 6] {
        let (train, val) = blobs(200, 3, 10, 10.0, seed);
        assert!(nearest_centroid_accuracy(&train, &val) >= 0.99);
        let e = evaluate(&ReservoirGenome::from_sizes(vec![24], 5), &train, &val, &SearchConfig::default()).unwrap();
        assert!(e.fitness_mean > 0.9, "seed {seed}: {}", e.fitness_mean);
        assert!(e.fitness_min <= e.fitness_mean);
    }
}

#[test]
fn agnostic_mode_on_shuffled_labels_is_chance() {
    let c = SearchConfig { eval_mode: EvalMode::Agnostic, ..SearchConfig::default() };
    let mut total = 0.0;
    for seed in 0..20 {
        let (train, val) = blobs(100, 2, 5, 3.0, 100 + seed);
        let mut labels = val.labels();
        labels.shuffle(&mut crate::seed::rng(seed));
        let val = val.with_labels(&labels).unwrap();
        total += evaluate(&ReservoirGenome::from_sizes(vec![8, 5], seed), &train, &val, &c).unwrap().fitness_mean;
    }
    let mean = total / 20.0;
    assert!((mean - 0.5).abs() < 0.05, "{mean}");
}

#[test]
fn agnostic_mode_ignores_training_labels() {
    let (train, val) = blobs(50, 3, 5, 3.0, 8);
    let c = SearchConfig { eval_mode: EvalMode::Agnostic, ..SearchConfig::default() };
    let g = ReservoirGenome::from_sizes(vec![6, 4], 1);
    let mut labels = train.labels();
    labels.shuffle(&mut crate::seed::rng(3));
    let permuted = train.with_labels(&labels).unwrap();
    assert_eq!(evaluate(&g, &train, &val, &c).unwrap(), evaluate(&g, &permuted, &val, &c).unwrap());
}

#[test]
fn one_generation_returns_best_initial() {
    let (train, val) = blobs(30, 3, 5, 5.0, 2);
    let c = SearchConfig { generations: 1, ..small_config(3) };
    let out = run_search(&train, &val, &c).unwrap();
    assert_eq!(out.history.len(), 1);
    let best = out.population.iter().map(|e| e.fitness_mean).fold(0.0, f64::max);
    assert_eq!(out.best.fitness_mean, best);
    assert_eq!(out.best.rank, 1);
}

#[test]
fn elitism_keeps_best_fitness_monotone_and_runs_are_reproducible() {
    let (train, val) = blobs(40, 3, 6, 2.0, 6);
    let c = SearchConfig { generations: 10, ..small_config(42) };
    let a = run_search(&train, &val, &c).unwrap();
    assert_eq!(a.history.len(), 10);
    assert!(a.history.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
    for e in &a.population {
        assert!(c.admits(&e.genome));
    }
    let b = run_search(&train, &val, &c).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.history, b.history);
    let mut buf = Vec::new();
    write_history_csv(&a.history, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rank_is_the_oracle_total_order(seed in any::<u64>(), n in 1usize..25) {
            let pop = random_population(seed, n);
            let expected: Vec<usize> = oracle_order(&pop).into_iter().map(|i| pop[i].generation).collect();
            let ranked = rank(pop.clone());
            let got: Vec<usize> = ranked.iter().map(|e| e.generation).collect();
            prop_assert_eq!(got, expected);
            for (i, e) in ranked.iter().enumerate() {
                prop_assert_eq!(e.rank, i + 1);
                for later in &ranked[i + 1..] {
                    prop_assert!(!dominates(later, e));
                }
            }
            // ranking a ranked population again changes nothing
            let again: Vec<usize> = rank(ranked.clone()).iter().map(|e| e.generation).collect();
            prop_assert_eq!(again, ranked.iter().map(|e| e.generation).collect::<Vec<_>>());
        }

        #[test]
        fn mutations_stay_in_bounds(seed in any::<u64>(), steps in 1usize..15) {
            let c = small_config(seed);
            let mut g = random_genome(&c, seed);
            prop_assert!(c.admits(&g));
            for s in 0..steps {
                g = mutate(&g, seed.wrapping_add(s as u64), &c).unwrap();
                prop_assert!(c.admits(&g));
                prop_assert!(g.validate().is_ok());
            }
        }
    }
}

