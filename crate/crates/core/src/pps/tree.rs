//! Decision trees over a single numeric feature.
//!
//! With one input every node covers a contiguous run of the sorted training
//! points, so split search is a linear scan over prefix statistics.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeTask<'a> {
    Regression(&'a [f64]),
    Classification { labels: &'a [usize], n_classes: usize },
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { threshold: f64, left: usize, right: usize },
}

/// A fitted tree. Regression leaves hold the mean target, classification
/// leaves the majority class id (lowest id on ties) as `f64`.
#[derive(Debug, Clone)]
pub struct FeatureTree {
    nodes: Vec<Node>,
}

struct Frame {
    node: usize,
    lo: usize,
    hi: usize,
    depth: usize,
}

impl FeatureTree {
    /// Grows a CART-style tree: squared error for regression, Gini impurity
    /// for classification. `max_depth = None` grows until leaves are pure or
    /// cannot be split.
    pub fn fit(x: &[f64], task: TreeTask<'_>, max_depth: Option<usize>) -> FeatureTree {
        let n = x.len();
        assert!(n > 0, "cannot fit a tree on zero rows");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();

        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![Frame { node: 0, lo: 0, hi: n, depth: 0 }];
        while let Some(Frame { node, lo, hi, depth }) = stack.pop() {
            let leaf = leaf_value(&order[lo..hi], task);
            let can_grow = max_depth.is_none_or(|d| depth < d) && hi - lo >= 2 && xs[lo] < xs[hi - 1];
            let split = if can_grow { best_split(&xs[lo..hi], &order[lo..hi], task) } else { None };
            match split {
                Some(cut) => {
                    let mid = lo + cut;
                    let threshold = 0.5 * (xs[mid - 1] + xs[mid]);
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[node] = Node::Split { threshold, left, right: left + 1 };
                    stack.push(Frame { node: left + 1, lo: mid, hi, depth: depth + 1 });
                    stack.push(Frame { node: left, lo, hi: mid, depth: depth + 1 });
                }
                None => nodes[node] = Node::Leaf(leaf),
            }
        }
        FeatureTree { nodes }
    }

    pub fn predict(&self, x: f64) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { threshold, left, right } => i = if x <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

fn leaf_value(rows: &[usize], task: TreeTask<'_>) -> f64 {
    match task {
        TreeTask::Regression(y) => rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64,
        TreeTask::Classification { labels, n_classes } => {
            let mut counts = vec![0usize; n_classes];
            for &i in rows {
                counts[labels[i]] += 1;
            }
            // max_by_key keeps the last maximum; scan for the first instead.
            let mut best = 0;
            for (c, &k) in counts.iter().enumerate() {
                if k > counts[best] {
                    best = c;
                }
            }
            best as f64
        }
    }
}

/// Returns the split position `cut` (left = rows[..cut]) with the lowest
/// impurity, only between distinct x values, or `None` if no split improves
/// on the parent.
fn best_split(xs: &[f64], rows: &[usize], task: TreeTask<'_>) -> Option<usize> {
    let n = rows.len();
    let mut best: Option<(f64, usize)> = None;
    match task {
        TreeTask::Regression(y) => {
            let total: f64 = rows.iter().map(|&i| y[i]).sum();
            let total_sq: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
            let parent = total_sq - total * total / n as f64;
            let (mut s, mut sq) = (0.0, 0.0);
            for cut in 1..n {
                let v = y[rows[cut - 1]];
                s += v;
                sq += v * v;
                if xs[cut - 1] == xs[cut] {
                    continue;
                }
                let (nl, nr) = (cut as f64, (n - cut) as f64);
                let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s) * (total - s) / nr);
                if best.is_none_or(|(b, _)| sse < b) {
                    best = Some((sse, cut));
                }
            }
            best.filter(|&(sse, _)| sse < parent - 1e-12 * parent.abs().max(1.0)).map(|(_, c)| c)
        }
        TreeTask::Classification { labels, n_classes } => {
            let mut right = vec![0usize; n_classes];
            for &i in rows {
                right[labels[i]] += 1;
            }
            let gini_sum = |counts: &[usize], m: usize| -> f64 {
                // m * gini = m - sum(c^2)/m
                let m = m as f64;
                m - counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / m
            };
            let parent = gini_sum(&right, n);
            let mut left = vec![0usize; n_classes];
            for cut in 1..n {
                let c = labels[rows[cut - 1]];
                left[c] += 1;
                right[c] -= 1;
                if xs[cut - 1] == xs[cut] {
                    continue;
                }
                let imp = gini_sum(&left, cut) + gini_sum(&right, n - cut);
                if best.is_none_or(|(b, _)| imp < b) {
                    best = Some((imp, cut));
                }
            }
            best.filter(|&(imp, _)| imp < parent - 1e-12).map(|(_, c)| c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_is_learned_exactly() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v < 10.0 { 1.0 } else { 5.0 }).collect();
        let t = FeatureTree::fit(&x, TreeTask::Regression(&y), Some(4));
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.predict(3.0), 1.0);
        assert_eq!(t.predict(9.6), 5.0);
    }

    #[test]
    fn depth_limit_bounds_leaves() {
        let x: Vec<f64> = (0..200).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert!(FeatureTree::fit(&x, TreeTask::Regression(&y), Some(3)).n_leaves() <= 8);
        assert_eq!(FeatureTree::fit(&x, TreeTask::Regression(&y), None).n_leaves(), 200);
    }

    #[test]
    fn classifier_majority_and_ties() {
        let x = [1.0, 1.0, 1.0, 2.0];
        let labels = [1, 0, 1, 0];
        let t = FeatureTree::fit(&x, TreeTask::Classification { labels: &labels, n_classes: 2 }, None);
        assert_eq!(t.predict(1.0), 1.0);
        assert_eq!(t.predict(2.0), 0.0);
        // constant x: single leaf, tie between classes broken to lowest id
        let t = FeatureTree::fit(&[3.0, 3.0], TreeTask::Classification { labels: &[1, 0], n_classes: 2 }, None);
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(0.0), 0.0);
    }
}
