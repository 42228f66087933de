//! Greedy CART induction with Gini impurity.
//!
//! Numeric candidates are midpoints between consecutive distinct values;
//! categorical candidates are one-vs-rest subsets. Ties between equally good
//! splits go to the lowest feature index, then the lowest threshold (or
//! category). No pruning: depth and minimum leaf size are the only controls.

use rand::Rng;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::CategoryMask;
use crate::rng::{TaskRng, seeded};
use crate::space::FeatureKind;
use crate::tree::{DecisionTree, Node, SplitRule};

/// Decreases at or below this are treated as no improvement, and two
/// candidates closer than this count as tied.
const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
    /// Features examined per split; `None` examines all of them. Only the
    /// bagging baseline subsamples.
    #[serde(default)]
    pub max_features: Option<usize>,
}

impl TrainConfig {
    pub fn new(max_depth: usize, min_samples_leaf: usize) -> Self {
        TrainConfig {
            max_depth,
            min_samples_leaf,
            seed: 0,
            max_features: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Candidate {
    feature: usize,
    rule: SplitRule,
    decrease: f64,
}

struct Grower<'a> {
    data: &'a Dataset,
    cfg: &'a TrainConfig,
    k: usize,
    nodes: Vec<Node>,
    rng: TaskRng,
    // scratch for numeric sweeps
    pairs: Vec<(f64, usize)>,
}

/// Fits a tree; deterministic for a given `(data, cfg)`.
pub fn train_tree(data: &Dataset, cfg: &TrainConfig) -> Result<DecisionTree> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("cannot train on an empty dataset".into()));
    }
    let k = data.class_count();
    if k < 2 {
        return Err(Error::Input("need at least two classes".into()));
    }
    let mut grower = Grower {
        data,
        cfg,
        k,
        nodes: Vec::new(),
        rng: seeded(cfg.seed),
        pairs: Vec::with_capacity(data.len()),
    };
    let mut rows: Vec<usize> = (0..data.len()).collect();
    let root = grower.grow(&mut rows, 0);
    DecisionTree::new(grower.nodes, root, data.space(), k)
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let mut counts = vec![0usize; self.k];
        for &r in rows.iter() {
            counts[self.data.label(r)] += 1;
        }
        let n = rows.len();
        let id = self.nodes.len();
        self.nodes.push(leaf(&counts, n));

        let m = self.cfg.min_samples_leaf;
        let impurity = gini(&counts, n);
        if depth >= self.cfg.max_depth || n < 2 * m || impurity <= GAIN_EPS {
            return id;
        }
        let Some(best) = self.best_split(rows, &counts, impurity) else {
            return id;
        };

        // partition rows in place: left block first, order preserved
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| best.rule.goes_left(self.data.value(r, best.feature)));
        let n_left = left.len();
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        debug_assert!(n_left >= m && n - n_left >= m);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            rule: best.rule,
            left: l,
            right: r,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.data.n_features();
        match self.cfg.max_features {
            Some(mf) if mf < p => {
                let mut f = index::sample(&mut self.rng, p, mf).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize], impurity: f64) -> Option<Candidate> {
        let n = rows.len();
        let m = self.cfg.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        let consider = |best: &mut Option<Candidate>, feature: usize, rule: SplitRule, weighted: f64| {
            let decrease = impurity - weighted;
            if decrease <= GAIN_EPS {
                return;
            }
            if best.as_ref().is_none_or(|b| decrease > b.decrease + GAIN_EPS) {
                *best = Some(Candidate {
                    feature,
                    rule,
                    decrease,
                });
            }
        };

        let features = self.candidate_features();
        let mut left = vec![0usize; self.k];
        for feature in features {
            match self.data.space().feature(feature).kind {
                FeatureKind::Numeric { .. } => {
                    self.pairs.clear();
                    self.pairs
                        .extend(rows.iter().map(|&r| (self.data.value(r, feature), self.data.label(r))));
                    self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    left.iter_mut().for_each(|c| *c = 0);
                    for i in 0..n - 1 {
                        left[self.pairs[i].1] += 1;
                        let (v, next) = (self.pairs[i].0, self.pairs[i + 1].0);
                        let n_left = i + 1;
                        if v == next || n_left < m || n - n_left < m {
                            continue;
                        }
                        let weighted = weighted_gini(&left, counts, n_left, n);
                        let mut t = v + (next - v) / 2.0;
                        if t >= next {
                            t = v;
                        }
                        consider(&mut best, feature, SplitRule::Threshold(t), weighted);
                    }
                }
                FeatureKind::Categorical { cardinality } => {
                    let mut per_cat = vec![vec![0usize; self.k]; cardinality];
                    for &r in rows {
                        per_cat[self.data.value(r, feature) as usize][self.data.label(r)] += 1;
                    }
                    for (c, cat_counts) in per_cat.iter().enumerate() {
                        let n_left: usize = cat_counts.iter().sum();
                        if n_left < m || n - n_left < m {
                            continue;
                        }
                        let weighted = weighted_gini(cat_counts, counts, n_left, n);
                        let rule = SplitRule::Categories(CategoryMask::from_indices(cardinality, [c]));
                        consider(&mut best, feature, rule, weighted);
                    }
                }
            }
        }
        best
    }
}

fn weighted_gini(left: &[usize], total: &[usize], n_left: usize, n: usize) -> f64 {
    let n_right = n - n_left;
    let right: Vec<usize> = total.iter().zip(left).map(|(t, l)| t - l).collect();
    (n_left as f64 * gini(left, n_left) + n_right as f64 * gini(&right, n_right)) / n as f64
}

fn leaf(counts: &[usize], n: usize) -> Node {
    let distribution = if n == 0 {
        vec![1.0 / counts.len() as f64; counts.len()]
    } else {
        counts.iter().map(|&c| c as f64 / n as f64).collect()
    };
    // first maximal class wins
    let label = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    Node::Leaf {
        label,
        distribution,
        samples: n,
    }
}

/// `n` row indices drawn uniformly with replacement.
pub fn bootstrap_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Same-size sample of `data` drawn with replacement.
pub fn bootstrap_sample(data: &Dataset, seed: u64) -> Dataset {
    data.subset(&bootstrap_indices(data.len(), seed))
}

/// Normalized total Gini decrease attributed to each feature, with node
/// weights and impurities measured on `data`.
pub fn gini_importance(tree: &DecisionTree, data: &Dataset) -> Vec<f64> {
    let p = tree.n_features();
    let k = tree.class_count();
    let mut node_counts = vec![vec![0usize; k]; tree.node_count()];
    for (i, row) in data.rows().enumerate() {
        let label = data.label(i);
        let mut id = tree.root();
        loop {
            node_counts[id][label] += 1;
            match tree.node(id) {
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => id = if rule.goes_left(row[*feature]) { *left } else { *right },
                Node::Leaf { .. } => break,
            }
        }
    }
    let total = data.len() as f64;
    let mut importance = vec![0.0; p];
    for (id, node) in tree.nodes().iter().enumerate() {
        if let Node::Split {
            feature, left, right, ..
        } = node
        {
            let n_t: usize = node_counts[id].iter().sum();
            if n_t == 0 {
                continue;
            }
            let n_l: usize = node_counts[*left].iter().sum();
            let n_r: usize = node_counts[*right].iter().sum();
            let decrease = gini(&node_counts[id], n_t)
                - (n_l as f64 / n_t as f64) * gini(&node_counts[*left], n_l)
                - (n_r as f64 / n_t as f64) * gini(&node_counts[*right], n_r);
            importance[*feature] += (n_t as f64 / total) * decrease;
        }
    }
    let sum: f64 = importance.iter().sum();
    if sum > 0.0 {
        importance.iter_mut().for_each(|v| *v /= sum);
    } else {
        importance.iter_mut().for_each(|v| *v = 0.0);
    }
    importance
}
