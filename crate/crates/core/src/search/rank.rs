use std::cmp::Ordering;

use super::EvaluatedGenome;

/// `a` is at least as good on mean fitness, worst fitness and complexity,
/// and strictly better on one of them.
pub fn dominates(a: &EvaluatedGenome, b: &EvaluatedGenome) -> bool {
    let no_worse = a.fitness_mean >= b.fitness_mean && a.fitness_min >= b.fitness_min && a.complexity <= b.complexity;
    let better = a.fitness_mean > b.fitness_mean || a.fitness_min > b.fitness_min || a.complexity < b.complexity;
    no_worse && better
}

fn within_front(a: &EvaluatedGenome, b: &EvaluatedGenome) -> Ordering {
    b.fitness_mean
        .total_cmp(&a.fitness_mean)
        .then(a.complexity.cmp(&b.complexity))
        .then(a.genome.seed.cmp(&b.genome.seed))
}

/// Non-dominated sort, then within each front: mean fitness descending,
/// complexity ascending, genome seed ascending, input position. Sets `front`
/// and the 1-based `rank` of every member.
pub fn rank(population: Vec<EvaluatedGenome>) -> Vec<EvaluatedGenome> {
    let n = population.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&population[i], &population[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut front_of = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut level = 1;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            front_of[i] = level;
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        level += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        front_of[a]
            .cmp(&front_of[b])
            .then_with(|| within_front(&population[a], &population[b]))
            .then(a.cmp(&b))
    });
    let mut slots: Vec<Option<EvaluatedGenome>> = population.into_iter().map(Some).collect();
    order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| {
            let mut e = slots[i].take().expect("each index used once");
            e.rank = pos + 1;
            e.front = front_of[i];
            e
        })
        .collect()
}
