//! Structural distances between decision trees and a stability-aware
//! training methodology built on them.
//!
//! The crate covers the whole workflow: typed datasets and feature spaces,
//! CART induction, the path-matching tree distance, Pareto-based selection
//! of stable trees across retraining rounds, and perturbation experiments
//! that probe how the distance responds to changes in a tree.

pub mod assignment;
pub mod cart;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod forest;
pub mod ingest;
pub mod mask;
pub mod metrics;
pub mod path;
pub mod report;
pub mod rng;
pub mod serialize;
pub mod space;
pub mod stability;
pub mod synth;
pub mod tree;

pub use cart::{TrainConfig, train_tree};
pub use dataset::Dataset;
pub use distance::{
    DistanceConfig, LambdaPolicy, MatchResult, mean_distance, path_distance, path_set_distance, path_weight,
    tree_distance, upper_bound,
};
pub use error::{Error, Result};
pub use forest::{Forest, ForestConfig, train_forest};
pub use mask::CategoryMask;
pub use metrics::{Classifier, auc, auc_from_scores};
pub use path::{FeatureRange, PathSet, TreePath, extract_paths};
pub use space::{Feature, FeatureKind, FeatureSpace, SpaceDigest};
pub use stability::{PipelineConfig, PipelineReport, SelectionRule, run_pipeline};
pub use tree::{DecisionTree, Node, SplitRule, TreeBuilder};
