//! Synthetic feature spaces and trees for property tests and benchmarks.

use rand::Rng;
use rand::seq::SliceRandom;

use crate::mask::CategoryMask;
use crate::path::{FeatureRange, TreePath};
use crate::space::{Feature, FeatureSpace};
use crate::tree::{DecisionTree, Node, SplitRule};

#[derive(Clone, Copy, Debug)]
pub struct RandomTreeConfig {
    pub max_depth: usize,
    /// Probability that a node above `max_depth` is split.
    pub split_probability: f64,
    pub class_count: usize,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        RandomTreeConfig {
            max_depth: 5,
            split_probability: 0.7,
            class_count: 3,
        }
    }
}

/// Space with `numeric` features on random ranges followed by `categorical`
/// features with 2..=6 categories.
pub fn random_space<R: Rng>(rng: &mut R, numeric: usize, categorical: usize) -> FeatureSpace {
    let mut features = Vec::with_capacity(numeric + categorical);
    for i in 0..numeric {
        let lower: f64 = rng.random_range(-50.0..50.0);
        let width: f64 = rng.random_range(0.5..100.0);
        features.push(Feature::numeric(format!("x{i}"), lower, lower + width));
    }
    for i in 0..categorical {
        features.push(Feature::categorical(format!("c{i}"), rng.random_range(2..=6)));
    }
    FeatureSpace::new(features).expect("generated space is valid")
}

/// Random valid tree: every split leaves both children a non-empty region.
pub fn random_tree<R: Rng>(space: &FeatureSpace, cfg: &RandomTreeConfig, rng: &mut R) -> DecisionTree {
    let mut nodes = Vec::new();
    let region = TreePath::full(space, 0);
    let root = grow(space, cfg, rng, &mut nodes, region, 0);
    DecisionTree::new(nodes, root, space, cfg.class_count).expect("generated tree is valid")
}

fn grow<R: Rng>(
    space: &FeatureSpace,
    cfg: &RandomTreeConfig,
    rng: &mut R,
    nodes: &mut Vec<Node>,
    region: TreePath,
    depth: usize,
) -> usize {
    let splittable: Vec<usize> = (0..space.len())
        .filter(|&j| match region.range(j) {
            FeatureRange::Interval { lower, upper } => upper - lower > 1e-6,
            FeatureRange::Categories(m) => m.count() >= 2,
        })
        .collect();
    let split = depth < cfg.max_depth && !splittable.is_empty() && rng.random_bool(cfg.split_probability);
    if !split {
        let label = rng.random_range(0..cfg.class_count);
        let mut distribution: Vec<f64> = (0..cfg.class_count).map(|_| rng.random_range(0.0..1.0)).collect();
        distribution[label] += 1.0;
        let s: f64 = distribution.iter().sum();
        distribution.iter_mut().for_each(|p| *p /= s);
        nodes.push(Node::Leaf {
            label,
            distribution,
            samples: 0,
        });
        return nodes.len() - 1;
    }

    let feature = splittable[rng.random_range(0..splittable.len())];
    let mut left_region = region.clone();
    let mut right_region = region;
    let rule = match (left_region.range(feature).clone(), space.cardinality(feature)) {
        (FeatureRange::Interval { lower, upper }, _) => {
            let t = lower + (upper - lower) * rng.random_range(0.05..0.95);
            left_region = with_range(left_region, feature, FeatureRange::Interval { lower, upper: t });
            right_region = with_range(right_region, feature, FeatureRange::Interval { lower: t, upper });
            SplitRule::Threshold(t)
        }
        (FeatureRange::Categories(m), Some(c)) => {
            let mut members: Vec<usize> = m.iter().collect();
            members.shuffle(rng);
            let take = rng.random_range(1..members.len());
            let subset = CategoryMask::from_indices(c, members[..take].iter().copied());
            left_region = with_range(left_region, feature, FeatureRange::Categories(m.intersect(&subset)));
            right_region = with_range(
                right_region,
                feature,
                FeatureRange::Categories(m.intersect(&subset.complement())),
            );
            SplitRule::Categories(subset)
        }
        _ => unreachable!("region matches space"),
    };
    let left = grow(space, cfg, rng, nodes, left_region, depth + 1);
    let right = grow(space, cfg, rng, nodes, right_region, depth + 1);
    nodes.push(Node::Split {
        feature,
        rule,
        left,
        right,
    });
    nodes.len() - 1
}

fn with_range(path: TreePath, feature: usize, range: FeatureRange) -> TreePath {
    let label = path.label();
    let mut ranges = path.ranges().to_vec();
    ranges[feature] = range;
    TreePath::from_parts(ranges, label)
}

/// Two complete depth-`depth` trees built to be as far apart as the
/// upper-bound argument suggests: they split on `2·depth` distinct unit-range
/// features (one feature per level, the first tree on features
/// `0..depth`, the second on `depth..2·depth`), every threshold sits `eps`
/// from a bound (near the lower bound in the first tree, near the upper
/// bound in the second), and no two leaves share a label.
pub fn extremal_pair(depth: usize, eps: f64) -> (FeatureSpace, DecisionTree, DecisionTree) {
    let features = (0..2 * depth)
        .map(|j| Feature::numeric(format!("x{j}"), 0.0, 1.0))
        .collect();
    let space = FeatureSpace::new(features).expect("unit features");
    let leaves = 1usize << depth;
    let k = (2 * leaves).max(2);
    let first = complete_tree(&space, depth, 0, eps, 0, k);
    let second = complete_tree(&space, depth, depth, 1.0 - eps, leaves, k);
    (space, first, second)
}

fn complete_tree(
    space: &FeatureSpace,
    depth: usize,
    first_feature: usize,
    threshold: f64,
    first_label: usize,
    k: usize,
) -> DecisionTree {
    fn build(
        nodes: &mut Vec<Node>,
        level: usize,
        depth: usize,
        first_feature: usize,
        threshold: f64,
        next_label: &mut usize,
        k: usize,
    ) -> usize {
        if level == depth {
            let mut distribution = vec![0.0; k];
            distribution[*next_label] = 1.0;
            nodes.push(Node::Leaf {
                label: *next_label,
                distribution,
                samples: 0,
            });
            *next_label += 1;
            return nodes.len() - 1;
        }
        let left = build(nodes, level + 1, depth, first_feature, threshold, next_label, k);
        let right = build(nodes, level + 1, depth, first_feature, threshold, next_label, k);
        nodes.push(Node::Split {
            feature: first_feature + level,
            rule: SplitRule::Threshold(threshold),
            left,
            right,
        });
        nodes.len() - 1
    }
    let mut nodes = Vec::new();
    let mut label = first_label;
    let root = build(&mut nodes, 0, depth, first_feature, threshold, &mut label, k);
    DecisionTree::new(nodes, root, space, k).expect("complete tree is valid")
}
