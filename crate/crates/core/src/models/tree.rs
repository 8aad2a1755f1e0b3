//! Axis-aligned CART trees.
//!
//! Splits send `x_j <= threshold` left, where the threshold is always an
//! observed training value. Any strictly increasing recoding of a feature,
//! applied to both training and query data, therefore yields the same
//! predictions.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{features_and_target, ModelHandle, ModelKind, Task};
use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};

/// Smallest impurity decrease that justifies a split.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
    /// Drives feature subsampling when `max_features` is set.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_leaf: 1,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn constant(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf(value)],
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

struct Builder<'a> {
    x: &'a EmpiricalDataset,
    y: &'a [f64],
    task: Task,
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Builder<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        match self.task {
            Task::Classification => {
                let ones = idx.iter().filter(|&&i| self.y[i] == 1.0).count();
                // ties go to class 0
                if 2 * ones > idx.len() {
                    1.0
                } else {
                    0.0
                }
            }
            Task::Regression => idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64,
        }
    }

    /// Weighted impurity `n * impurity` from running sums.
    fn impurity(&self, count: f64, sum: f64, sum_sq: f64) -> f64 {
        match self.task {
            // labels are 0/1, so `sum` counts ones: n * gini = n - (n1^2 + n0^2) / n
            Task::Classification => count - (sum * sum + (count - sum) * (count - sum)) / count,
            // sum of squared deviations
            Task::Regression => sum_sq - sum * sum / count,
        }
    }

    fn features(&mut self) -> Vec<usize> {
        let d = self.x.d();
        match self.params.max_features {
            Some(m) if m < d => {
                let mut f = sample(&mut self.rng, d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf.max(1);
        if idx.len() < 2 * min_leaf {
            return None;
        }
        let (total, total_sq) = idx.iter().fold((0.0, 0.0), |(s, q), &i| {
            (s + self.y[i], q + self.y[i] * self.y[i])
        });
        let parent = self.impurity(idx.len() as f64, total, total_sq);
        let mut best: Option<(usize, f64, f64)> = None;
        for feature in self.features() {
            let mut order = idx.to_vec();
            order.sort_by(|&a, &b| {
                self.x.row(a)[feature]
                    .total_cmp(&self.x.row(b)[feature])
                    .then(a.cmp(&b))
            });
            let (mut s, mut q) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let yi = self.y[order[pos]];
                s += yi;
                q += yi * yi;
                let here = self.x.row(order[pos])[feature];
                let next = self.x.row(order[pos + 1])[feature];
                let n_left = pos + 1;
                if here == next || n_left < min_leaf || order.len() - n_left < min_leaf {
                    continue;
                }
                let nl = n_left as f64;
                let nr = (order.len() - n_left) as f64;
                let imp = self.impurity(nl, s, q) + self.impurity(nr, total - s, total_sq - q);
                // strict improvement keeps the lowest feature, then lowest threshold
                if parent - imp > MIN_GAIN && best.is_none_or(|(_, _, b)| imp < b - MIN_GAIN) {
                    best = Some((feature, here, imp));
                }
            }
        }
        best.map(|(feature, threshold, impurity)| {
            let (left, right) = idx.iter().partition(|&&i| self.x.row(i)[feature] <= threshold);
            Candidate {
                feature,
                threshold,
                impurity,
                left,
                right,
            }
        })
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(idx)));
        if depth >= self.params.max_depth {
            return id;
        }
        let Some(split) = self.best_split(idx) else {
            return id;
        };
        debug_assert!(split.impurity.is_finite());
        let left = self.grow(&split.left, depth + 1);
        let right = self.grow(&split.right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fits a CART tree predicting `target_column` from every other column of
/// `train`. Gini impurity for classification, squared error for regression.
pub fn fit_tree(
    train: &EmpiricalDataset,
    target_column: &str,
    task: Task,
    params: TreeParams,
) -> Result<ModelHandle> {
    let (x, y) = features_and_target(train, target_column, task)?;
    if x.n() < 2 {
        return Err(Error::Model("cannot fit a tree on a single row".into()));
    }
    let mut builder = Builder {
        x: &x,
        y: &y,
        task,
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..x.n()).collect();
    builder.grow(&all, 0);
    let tree = DecisionTree { nodes: builder.nodes };
    Ok(ModelHandle {
        name: format!("tree(depth={})", params.max_depth),
        kind: ModelKind::Tree(tree),
        task,
        feature_names: x.column_names().to_vec(),
    })
}
