//! Bagged CART ensemble used as the accuracy baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{TrainConfig, bootstrap_indices, gini_importance, train_tree};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::Classifier;
use crate::rng::derive_seed;
use crate::tree::DecisionTree;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split. `None` means all (plain bagging).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl ForestConfig {
    /// `n_trees` members, √P features per split, bootstrap resampling.
    pub fn random_forest(n_trees: usize, max_depth: usize, min_samples_leaf: usize, n_features: usize) -> Self {
        ForestConfig {
            n_trees,
            max_depth,
            min_samples_leaf,
            max_features: Some(((n_features as f64).sqrt().round() as usize).max(1)),
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean of member class distributions.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let k = self.trees[0].class_count();
        let mut out = vec![0.0; k];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict_proba(row)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// Member with the most nodes.
    pub fn largest_tree(&self) -> &DecisionTree {
        self.trees
            .iter()
            .max_by_key(|t| (t.node_count(), std::cmp::Reverse(t.depth())))
            .expect("forest is non-empty")
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(|t| t.depth()).max().unwrap_or(0)
    }

    /// Member Gini importances averaged, then renormalized.
    pub fn gini_importance(&self, data: &Dataset) -> Vec<f64> {
        let p = data.n_features();
        let mut acc = vec![0.0; p];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(gini_importance(t, data)) {
                *a += v;
            }
        }
        let s: f64 = acc.iter().sum();
        if s > 0.0 {
            acc.iter_mut().for_each(|a| *a /= s);
        }
        acc
    }
}

impl Classifier for Forest {
    fn class_probability(&self, row: &[f64], class: usize) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(row)[class]).sum();
        sum / self.trees.len() as f64
    }
}

/// Seed used for member `i`'s bootstrap and feature sampling.
pub fn member_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, i as u64)
}

pub fn train_forest(data: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<Forest> {
    if cfg.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let s = member_seed(seed, i);
            let tc = TrainConfig {
                max_depth: cfg.max_depth,
                min_samples_leaf: cfg.min_samples_leaf,
                seed: s,
                max_features: cfg.max_features,
            };
            if cfg.bootstrap {
                train_tree(&data.subset(&bootstrap_indices(data.len(), s)), &tc)
            } else {
                train_tree(data, &tc)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest { trees })
}
