use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frontier::Objectives;
use crate::cart::{TrainConfig, bootstrap_indices, train_tree};
use crate::dataset::Dataset;
use crate::distance::{DistanceConfig, path_set_distance};
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::path::{PathSet, extract_paths};
use crate::rng::derive_seed;
use crate::space::FeatureSpace;
use crate::tree::DecisionTree;

/// Hyperparameter grid and bootstrap count shared by both collections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub depths: Vec<usize>,
    pub min_leaf: Vec<usize>,
    pub bootstraps: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.min_leaf.is_empty() {
            return Err(Error::Config("hyperparameter grids must be non-empty".into()));
        }
        if self.bootstraps == 0 {
            return Err(Error::Config("need at least one bootstrap per grid cell".into()));
        }
        for &d in &self.depths {
            TrainConfig::new(d, 1).validate()?;
        }
        for &m in &self.min_leaf {
            TrainConfig::new(1, m).validate()?;
        }
        Ok(())
    }

    /// Grid cells in training order: depth-major, then min leaf size.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.depths
            .iter()
            .flat_map(|&d| self.min_leaf.iter().map(move |&m| (d, m)))
            .collect()
    }

    pub fn collection_size(&self) -> usize {
        self.depths.len() * self.min_leaf.len() * self.bootstraps
    }

    pub fn max_depth(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct Collection {
    pub trees: Vec<DecisionTree>,
    /// `(max depth, min leaf size)` each tree was trained with.
    pub hyperparams: Vec<(usize, usize)>,
    /// Bootstrap row indices into the training data, one list per tree.
    pub samples: Vec<Vec<usize>>,
}

/// Trains one tree per (grid cell, bootstrap replicate), each on its own
/// bootstrap sample of `data`. Tree `b` draws its sample from
/// `derive_seed(seed, b)`.
pub fn build_collection(data: &Dataset, grid: &Grid, seed: u64) -> Result<Collection> {
    grid.validate()?;
    if data.is_empty() {
        return Err(Error::Input("cannot build a collection from no rows".into()));
    }
    let jobs: Vec<(usize, usize)> = grid
        .cells()
        .into_iter()
        .flat_map(|cell| std::iter::repeat_n(cell, grid.bootstraps))
        .collect();
    let built = jobs
        .par_iter()
        .enumerate()
        .map(|(b, &(depth, min_leaf))| {
            let s = derive_seed(seed, b as u64);
            let rows = bootstrap_indices(data.len(), s);
            let cfg = TrainConfig {
                max_depth: depth,
                min_samples_leaf: min_leaf,
                seed: s,
                max_features: None,
            };
            train_tree(&data.subset(&rows), &cfg).map(|t| (t, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    let (trees, samples) = built.into_iter().unzip();
    Ok(Collection {
        trees,
        hyperparams: jobs,
        samples,
    })
}

#[derive(Clone, Debug)]
pub struct ScoredTree {
    pub tree: DecisionTree,
    /// Mean scaled distance to the first-batch collection.
    pub d_b: f64,
    /// AUC on the scoring holdout.
    pub alpha_b: f64,
    /// Interpretability cost (node count) when the third objective is on.
    pub i_b: Option<f64>,
    /// `(max depth, min leaf size)` the tree was trained with.
    pub hyperparams: (usize, usize),
    pub pareto: bool,
}

impl ScoredTree {
    pub fn objectives(&self) -> Objectives {
        Objectives {
            distance: self.d_b,
            auc: self.alpha_b,
            cost: self.i_b,
        }
    }

    pub fn summary(&self) -> ScoredSummary {
        ScoredSummary {
            d_b: self.d_b,
            alpha_b: self.alpha_b,
            i_b: self.i_b,
            max_depth: self.hyperparams.0,
            min_samples_leaf: self.hyperparams.1,
            depth: self.tree.depth(),
            nodes: self.tree.node_count(),
            pareto: self.pareto,
        }
    }
}

/// Serializable view of a [`ScoredTree`] without the tree itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSummary {
    pub d_b: f64,
    pub alpha_b: f64,
    pub i_b: Option<f64>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub depth: usize,
    pub nodes: usize,
    pub pareto: bool,
}

/// Path sets of every tree, extracted once.
pub fn extract_all(trees: &[DecisionTree], space: &FeatureSpace) -> Result<Vec<PathSet>> {
    trees.par_iter().map(|t| extract_paths(t, space)).collect()
}

/// Mean scaled distance from one path set to each of `reference`.
pub fn mean_to(paths: &PathSet, reference: &[PathSet], space: &FeatureSpace, cfg: &DistanceConfig) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Input("first-batch collection is empty".into()));
    }
    let mut total = 0.0;
    for r in reference {
        total += path_set_distance(r, paths, space, cfg)?.scaled_distance;
    }
    Ok(total / reference.len() as f64)
}

/// Scores every second-batch tree against the first batch (`d_b`) and the
/// holdout (`α_b`). With `with_cost` the node count is attached as `i_b`.
pub fn score_collection(
    second: &Collection,
    first: &[DecisionTree],
    holdout: &Dataset,
    cfg: &DistanceConfig,
    with_cost: bool,
) -> Result<Vec<ScoredTree>> {
    if first.is_empty() {
        return Err(Error::Input("first-batch collection is empty".into()));
    }
    if second.trees.is_empty() {
        return Err(Error::Input("second-batch collection is empty".into()));
    }
    let reference = extract_all(first, holdout.space())?;
    second
        .trees
        .par_iter()
        .zip(&second.hyperparams)
        .map(|(t, &hp)| {
            let paths = extract_paths(t, holdout.space())?;
            Ok(ScoredTree {
                d_b: mean_to(&paths, &reference, holdout.space(), cfg)?,
                alpha_b: auc(t, holdout)?,
                i_b: with_cost.then_some(t.node_count() as f64),
                hyperparams: hp,
                pareto: false,
                tree: t.clone(),
            })
        })
        .collect()
}
