use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_row, check_training_set, Classifier};
use crate::corpus::ClassLabel;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Fraction of features considered at each node, rounded up.
    pub feature_subsample: f64,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            feature_subsample: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u64; 2],
    },
}

/// CART tree; node 0 is the root, children always have larger indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub max_depth: Option<usize>,
}

fn gini(c: [u64; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = c[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [ClassLabel],
    n_try: usize,
    max_depth: Option<usize>,
    rng: rng::Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &r in rows {
            c[self.ys[r].index()] += 1;
        }
        c
    }

    /// Best (impurity, feature, threshold) over a random feature subset.
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64)> {
        let d = self.xs[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(&mut self.rng);
        features.truncate(self.n_try);
        features.sort_unstable();
        let total = self.counts(rows);
        let n = rows.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for &f in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.xs[r][f], self.ys[r].index())));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; 2];
            for i in 0..sorted.len() - 1 {
                left[sorted[i].1] += 1;
                let (a, b) = (sorted[i].0, sorted[i + 1].0);
                if a == b {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let nl = (i + 1) as f64;
                let impurity = (nl * gini(left) + (n - nl) * gini(right)) / n;
                if best.is_none_or(|(bi, _, _)| impurity < bi) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || rows.len() < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.xs[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    fn fit(xs: &[Vec<f64>], ys: &[ClassLabel], rows: Vec<usize>, n_try: usize, max_depth: Option<usize>, seed: u64) -> Self {
        let mut b = Builder {
            xs,
            ys,
            n_try,
            max_depth,
            rng: rng::seeded(seed),
            nodes: Vec::new(),
        };
        b.grow(rows, 0);
        DecisionTree {
            nodes: b.nodes,
            max_depth,
        }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [u64; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class at the leaf; ties go to LN.
    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let c = self.leaf_counts(x);
        if c[1] > c[0] {
            ClassLabel::Ps
        } else {
            ClassLabel::Ln
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub feature_names: Vec<String>,
    pub n_features: usize,
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
}

/// Bagged CART trees. Tree `i` draws its bootstrap sample and feature
/// subsets from `rng::derive(seed, i)`.
pub fn train_forest(
    xs: &[Vec<f64>],
    ys: &[ClassLabel],
    feature_names: &[String],
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    let d = check_training_set(xs, ys)?;
    if cfg.n_trees == 0 || !(cfg.feature_subsample > 0.0 && cfg.feature_subsample <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "n_trees = {}, feature_subsample = {}",
            cfg.n_trees, cfg.feature_subsample
        )));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: feature_names.len(),
        });
    }
    let n_try = ((cfg.feature_subsample * d as f64).ceil() as usize).clamp(1, d);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = rng::derive(cfg.seed, t as u64);
            let mut r = rng::seeded(seed);
            let rows: Vec<usize> = (0..xs.len()).map(|_| r.random_range(0..xs.len())).collect();
            DecisionTree::fit(xs, ys, rows, n_try, cfg.max_depth, rng::mix(seed))
        })
        .collect();
    Ok(ForestModel {
        feature_names: feature_names.to_vec(),
        n_features: d,
        config: cfg.clone(),
        trees,
    })
}

impl ForestModel {
    pub fn ps_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(x) == ClassLabel::Ps).count()
    }
}

impl Classifier for ForestModel {
    fn n_inputs(&self) -> usize {
        self.n_features
    }

    /// Majority vote; an even split goes to LN.
    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        check_row(x, self.n_features)?;
        Ok(if 2 * self.ps_votes(x) > self.trees.len() {
            ClassLabel::Ps
        } else {
            ClassLabel::Ln
        })
    }
}
