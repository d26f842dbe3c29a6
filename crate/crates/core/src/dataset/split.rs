use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, FlowDataset, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.70, val: 0.15, test: 0.15 }
    }
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let f = Self { train, val, test };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&p| !(p > 0.0) || !p.is_finite()) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidFractions(parts));
        }
        Ok(())
    }
}

/// Record indices of each split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `n` over `fractions`; ties go to the
/// earlier part.
fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let quotas = fractions.map(|f| f * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

pub fn stratified_split_indices(dataset: &FlowDataset, fractions: SplitFractions, seed: u64) -> Result<SplitIndices> {
    fractions.validate()?;
    let f = [fractions.train, fractions.val, fractions.test];
    let mut out = SplitIndices { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (cat, count) in dataset.label_histogram() {
        if count == 0 {
            continue;
        }
        if count < 3 {
            return Err(DatasetError::CategoryTooSmall(cat));
        }
        let mut idx: Vec<usize> =
            dataset.records().iter().enumerate().filter(|(_, r)| r.label == cat).map(|(i, _)| i).collect();
        idx.shuffle(&mut rng(derive_seed(seed, "split", &[cat as u64])));
        let [a, b, _] = apportion(count, f);
        out.train.extend_from_slice(&idx[..a]);
        out.val.extend_from_slice(&idx[a..a + b]);
        out.test.extend_from_slice(&idx[a + b..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Per-category proportional split into (train, val, test). Records keep
/// their original relative order within each split.
pub fn stratified_split(
    dataset: &FlowDataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(FlowDataset, FlowDataset, FlowDataset)> {
    let idx = stratified_split_indices(dataset, fractions, seed)?;
    Ok((dataset.subset(&idx.train), dataset.subset(&idx.val), dataset.subset(&idx.test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSchema, FlowRecord};

    fn ds(labels: &[usize], k: usize) -> FlowDataset {
        let cats: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let schema = FeatureSchema::with_category_names(vec!["x".into()], "y", &cats).unwrap();
        let records =
            labels.iter().enumerate().map(|(i, &label)| FlowRecord { features: vec![i as f64], label }).collect();
        FlowDataset::new(schema, records).unwrap()
    }

    #[test]
    fn exact_proportions_single_category() {
        let d = ds(&[0; 100], 1);
        let s = stratified_split_indices(&d, SplitFractions::new(0.8, 0.1, 0.1).unwrap(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
    }

    #[test]
    fn deterministic_given_seed() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let d = ds(&labels, 3);
        let f = SplitFractions::default();
        assert_eq!(stratified_split_indices(&d, f, 7).unwrap(), stratified_split_indices(&d, f, 7).unwrap());
        assert_ne!(stratified_split_indices(&d, f, 7).unwrap(), stratified_split_indices(&d, f, 8).unwrap());
    }

    #[test]
    fn per_category_counts_by_enumeration() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let d = ds(&labels, 2);
        let (tr, va, te) = stratified_split(&d, SplitFractions::new(0.5, 0.25, 0.25).unwrap(), 3).unwrap();
        for (part, expect) in [(&tr, 5), (&va, 3), (&te, 2)] {
            for c in 0..2 {
                let n = part.records().iter().filter(|r| r.label == c).count();
                assert_eq!(n, expect, "category {c}");
            }
        }
    }

    #[test]
    fn rejects_small_categories_and_bad_fractions() {
        let d = ds(&[0, 0, 0, 1, 1], 2);
        assert!(matches!(
            stratified_split(&d, SplitFractions::default(), 0),
            Err(DatasetError::CategoryTooSmall(1))
        ));
        assert!(SplitFractions::new(0.5, 0.5, 0.1).is_err());
        assert!(SplitFractions::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion(10, [0.5, 0.25, 0.25]), [5, 3, 2]);
        assert_eq!(apportion(7, [0.7, 0.15, 0.15]), [5, 1, 1]);
        assert_eq!(apportion(3, [0.7, 0.15, 0.15]), [2, 1, 0]);
    }
}
