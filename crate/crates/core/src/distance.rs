//! Structural distance between decision trees.
//!
//! Two trees are compared through their path sets. Paths are matched one to
//! one at a cost given by [`path_distance`]; when one tree has more paths,
//! the leftovers are charged their [`path_weight`]. The optimal matching is
//! an assignment problem: the cost matrix is squared up with dummy columns
//! whose entries are the weight of the row's path, and solved exactly.
//! Dividing by [`upper_bound`] yields a scaled distance in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::path::{FeatureRange, PathSet, TreePath, extract_paths};
use crate::space::{FeatureKind, FeatureSpace};
use crate::tree::DecisionTree;

/// How the label-mismatch weight λ is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed(f64),
    /// λ = 2 · scaling depth, weighing labels and feature ranges equally.
    TwiceScaleDepth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub lambda: LambdaPolicy,
    /// Depth used for the normalizing bound. `None` uses the deeper of the
    /// two trees being compared.
    pub scale_depth: Option<usize>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            lambda: LambdaPolicy::TwiceScaleDepth,
            scale_depth: None,
        }
    }
}

impl DistanceConfig {
    pub fn with_scale_depth(depth: usize) -> Self {
        DistanceConfig {
            scale_depth: Some(depth),
            ..Default::default()
        }
    }

    /// Scaling depth and λ for a pair of trees with the given depths.
    pub fn resolve(&self, depth_a: usize, depth_b: usize) -> Result<(usize, f64)> {
        let deepest = depth_a.max(depth_b);
        let d = match self.scale_depth {
            Some(d) if d < deepest => {
                return Err(Error::Config(format!(
                    "scaling depth {d} is below tree depth {deepest}"
                )));
            }
            Some(d) => d,
            None => deepest,
        };
        let lambda = match self.lambda {
            LambdaPolicy::Fixed(l) if !(l >= 0.0 && l.is_finite()) => {
                return Err(Error::Config(format!("lambda must be finite and >= 0, got {l}")));
            }
            LambdaPolicy::Fixed(l) => l,
            LambdaPolicy::TwiceScaleDepth => 2.0 * d as f64,
        };
        Ok((d, lambda))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// Path index in the first tree.
    pub first: usize,
    /// Path index in the second tree.
    pub second: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedPath {
    pub side: Side,
    pub index: usize,
    pub weight: f64,
}

/// Optimal path matching between two trees and the resulting distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: Vec<MatchedPair>,
    pub unmatched: Vec<UnmatchedPath>,
    pub raw_distance: f64,
    pub scaled_distance: f64,
    pub upper_bound: f64,
    pub scale_depth: usize,
    pub lambda: f64,
}

/// `2^D (2D + λ)`.
pub fn upper_bound(depth: usize, lambda: f64) -> f64 {
    2f64.powi(depth as i32) * (2.0 * depth as f64 + lambda)
}

fn check_path(p: &TreePath, space: &FeatureSpace) -> Result<()> {
    if p.ranges().len() != space.len() {
        return Err(Error::Config(format!(
            "path has {} features, space has {}",
            p.ranges().len(),
            space.len()
        )));
    }
    for (j, (r, f)) in p.ranges().iter().zip(space.features()).enumerate() {
        match (r, &f.kind) {
            (FeatureRange::Interval { .. }, FeatureKind::Numeric { .. }) => {}
            (FeatureRange::Categories(m), FeatureKind::Categorical { cardinality }) if m.len() == *cardinality => {}
            _ => {
                return Err(Error::Config(format!(
                    "path range for feature {j} does not match the feature space"
                )));
            }
        }
    }
    Ok(())
}

/// Range-and-label distance between two paths.
pub fn path_distance(p: &TreePath, q: &TreePath, space: &FeatureSpace, lambda: f64) -> Result<f64> {
    check_path(p, space)?;
    check_path(q, space)?;
    Ok(Scales::new(space).distance(p, q, lambda))
}

/// Portion of the feature ranges a path covers, summed over the features it
/// restricts. Features left at full range contribute nothing.
pub fn path_weight(p: &TreePath, space: &FeatureSpace) -> Result<f64> {
    check_path(p, space)?;
    Ok(Scales::new(space).weight(p))
}

/// Per-feature normalizers, precomputed once per space.
struct Scales<'a> {
    space: &'a FeatureSpace,
    /// 1 / (u - l) for numeric, 1 / c for categorical.
    inv: Vec<f64>,
}

impl<'a> Scales<'a> {
    fn new(space: &'a FeatureSpace) -> Self {
        let inv = space
            .features()
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Numeric { lower, upper } => 1.0 / (upper - lower),
                FeatureKind::Categorical { cardinality } => 1.0 / cardinality as f64,
            })
            .collect();
        Scales { space, inv }
    }

    fn distance(&self, p: &TreePath, q: &TreePath, lambda: f64) -> f64 {
        let mut d = 0.0;
        for ((a, b), inv) in p.ranges().iter().zip(q.ranges()).zip(&self.inv) {
            d += match (a, b) {
                (FeatureRange::Interval { lower: la, upper: ua }, FeatureRange::Interval { lower: lb, upper: ub }) => {
                    ((ua - ub).abs() + (la - lb).abs()) * 0.5 * inv
                }
                (FeatureRange::Categories(ma), FeatureRange::Categories(mb)) => ma.hamming(mb) as f64 * inv,
                _ => unreachable!("paths checked against the space"),
            };
        }
        if p.label() != q.label() {
            d += lambda;
        }
        d
    }

    fn weight(&self, p: &TreePath) -> f64 {
        let mut w = 0.0;
        for ((r, f), inv) in p.ranges().iter().zip(self.space.features()).zip(&self.inv) {
            match (r, &f.kind) {
                (FeatureRange::Interval { lower, upper }, FeatureKind::Numeric { lower: l0, upper: u0 }) => {
                    if upper != u0 || lower != l0 {
                        w += (upper - lower) * inv;
                    }
                }
                (FeatureRange::Categories(m), FeatureKind::Categorical { .. }) => {
                    if !m.is_full() {
                        w += m.count() as f64 * inv;
                    }
                }
                _ => unreachable!("paths checked against the space"),
            }
        }
        w
    }
}

/// Distance between two trees.
pub fn tree_distance(
    t1: &DecisionTree,
    t2: &DecisionTree,
    space: &FeatureSpace,
    cfg: &DistanceConfig,
) -> Result<MatchResult> {
    if t1.space_digest() != t2.space_digest() {
        return Err(Error::Config(
            "trees were built against different feature spaces".into(),
        ));
    }
    let a = extract_paths(t1, space)?;
    let b = extract_paths(t2, space)?;
    path_set_distance(&a, &b, space, cfg)
}

/// Distance between two already-extracted path sets. Callers comparing many
/// trees should extract each path set once and use this directly.
pub fn path_set_distance(a: &PathSet, b: &PathSet, space: &FeatureSpace, cfg: &DistanceConfig) -> Result<MatchResult> {
    let (scale_depth, lambda) = cfg.resolve(a.source_depth, b.source_depth)?;
    for p in a.paths.iter().chain(&b.paths) {
        check_path(p, space)?;
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("path set is empty".into()));
    }
    let scales = Scales::new(space);

    // Rows are the larger tree's paths; the smaller one is padded with dummies.
    let swapped = a.len() < b.len();
    let (big, small) = if swapped { (b, a) } else { (a, b) };
    let n = big.len();
    let costs: Vec<Vec<f64>> = big
        .paths
        .iter()
        .map(|p| {
            let w = scales.weight(p);
            let mut row: Vec<f64> = small.paths.iter().map(|q| scales.distance(p, q, lambda)).collect();
            row.resize(n, w);
            row
        })
        .collect();
    let assignment = assignment::solve(&costs);

    let mut matched = Vec::with_capacity(small.len());
    let mut unmatched = Vec::with_capacity(n - small.len());
    let mut raw = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        let c = costs[i][j];
        raw += c;
        if j < small.len() {
            let (first, second) = if swapped { (j, i) } else { (i, j) };
            matched.push(MatchedPair {
                first,
                second,
                distance: c,
            });
        } else {
            unmatched.push(UnmatchedPath {
                side: if swapped { Side::Second } else { Side::First },
                index: i,
                weight: c,
            });
        }
    }
    matched.sort_by_key(|m| (m.first, m.second));

    let bound = upper_bound(scale_depth, lambda);
    let scaled = if bound > 0.0 { raw / bound } else { 0.0 };
    Ok(MatchResult {
        matched,
        unmatched,
        raw_distance: raw,
        scaled_distance: scaled,
        upper_bound: bound,
        scale_depth,
        lambda,
    })
}

/// Mean scaled distance from `tree` to every tree in `reference`.
pub fn mean_distance(
    tree: &DecisionTree,
    reference: &[DecisionTree],
    space: &FeatureSpace,
    cfg: &DistanceConfig,
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Input("reference collection is empty".into()));
    }
    let mut total = 0.0;
    for r in reference {
        total += tree_distance(r, tree, space, cfg)?.scaled_distance;
    }
    Ok(total / reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::CategoryMask;
    use crate::space::Feature;
    use crate::tree::TreeBuilder;
    use approx::assert_abs_diff_eq;

    fn line() -> FeatureSpace {
        FeatureSpace::new(vec![Feature::numeric("x", 0.0, 10.0)]).unwrap()
    }

    fn interval(lo: f64, hi: f64, label: usize) -> TreePath {
        TreePath::from_parts(vec![FeatureRange::Interval { lower: lo, upper: hi }], label)
    }

    #[test]
    fn path_distance_examples() {
        let sp = line();
        let p = interval(0.0, 4.0, 0);
        let q = interval(0.0, 6.0, 0);
        assert_eq!(path_distance(&p, &p, &sp, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(path_distance(&p, &q, &sp, 2.0).unwrap(), 0.1, epsilon = 1e-12);
        let q1 = interval(0.0, 6.0, 1);
        assert_abs_diff_eq!(path_distance(&p, &q1, &sp, 2.0).unwrap(), 2.1, epsilon = 1e-12);
        assert_eq!(
            path_distance(&p, &q, &sp, 2.0).unwrap(),
            path_distance(&q, &p, &sp, 2.0).unwrap()
        );
    }

    #[test]
    fn path_distance_rejects_foreign_paths() {
        let sp = line();
        let cat = TreePath::from_parts(vec![FeatureRange::Categories(CategoryMask::full(3))], 0);
        assert!(matches!(
            path_distance(&cat, &interval(0.0, 1.0, 0), &sp, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn path_weight_examples() {
        let sp = FeatureSpace::new(vec![Feature::numeric("x", 0.0, 10.0), Feature::categorical("c", 4)]).unwrap();
        assert_eq!(path_weight(&TreePath::full(&sp, 0), &sp).unwrap(), 0.0);

        let p = TreePath::from_parts(
            vec![
                FeatureRange::Interval { lower: 0.0, upper: 4.0 },
                FeatureRange::Categories(CategoryMask::full(4)),
            ],
            0,
        );
        assert_abs_diff_eq!(path_weight(&p, &sp).unwrap(), 0.4, epsilon = 1e-12);

        let q = TreePath::from_parts(
            vec![
                FeatureRange::Interval {
                    lower: 0.0,
                    upper: 10.0,
                },
                FeatureRange::Categories(CategoryMask::from_indices(4, [1, 3])),
            ],
            0,
        );
        assert_abs_diff_eq!(path_weight(&q, &sp).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(upper_bound(4, 8.0), 256.0);
        assert_eq!(upper_bound(3, 6.0), 96.0);
        assert_eq!(upper_bound(0, 3.5), 3.5);
    }

    #[test]
    fn config_resolution() {
        let cfg = DistanceConfig::default();
        assert_eq!(cfg.resolve(2, 3).unwrap(), (3, 6.0));
        let cfg = DistanceConfig::with_scale_depth(12);
        assert_eq!(cfg.resolve(2, 3).unwrap(), (12, 24.0));
        assert!(DistanceConfig::with_scale_depth(2).resolve(2, 3).is_err());
        let cfg = DistanceConfig {
            lambda: LambdaPolicy::Fixed(-1.0),
            scale_depth: None,
        };
        assert!(cfg.resolve(1, 1).is_err());
    }

    fn stump(space: &FeatureSpace, t: f64, labels: (usize, usize)) -> DecisionTree {
        let mut b = TreeBuilder::new(2);
        let l = b.leaf(labels.0);
        let r = b.leaf(labels.1);
        let root = b.numeric(0, t, l, r);
        b.build(root, space).unwrap()
    }

    #[test]
    fn stump_vs_leaf_leaves_one_path_unmatched() {
        let sp = line();
        let s = stump(&sp, 4.0, (0, 1));
        let mut b = TreeBuilder::new(2);
        let root = b.leaf(0);
        let leaf = b.build(root, &sp).unwrap();

        let cfg = DistanceConfig {
            lambda: LambdaPolicy::Fixed(2.0),
            scale_depth: None,
        };
        let r = tree_distance(&s, &leaf, &sp, &cfg).unwrap();
        // match [0,4]/0 with the leaf: 6/20 = 0.3, leave [4,10]/1 at weight 0.6
        assert_abs_diff_eq!(r.raw_distance, 0.9, epsilon = 1e-12);
        assert_eq!(r.matched.len(), 1);
        assert_eq!(r.unmatched.len(), 1);
        assert_eq!(r.unmatched[0].side, Side::First);
        assert_eq!(r.unmatched[0].index, 1);
        assert_abs_diff_eq!(r.upper_bound, 2.0 * (2.0 + 2.0));

        let back = tree_distance(&leaf, &s, &sp, &cfg).unwrap();
        assert_abs_diff_eq!(back.raw_distance, r.raw_distance, epsilon = 1e-12);
        assert_eq!(back.unmatched[0].side, Side::Second);
        assert_eq!(back.matched[0].first, 0);
        assert_eq!(back.matched[0].second, 0);
    }

    #[test]
    fn identical_trees_are_at_zero() {
        let sp = line();
        let s = stump(&sp, 4.0, (0, 1));
        let r = tree_distance(&s, &s, &sp, &DistanceConfig::default()).unwrap();
        assert_eq!(r.raw_distance, 0.0);
        assert_eq!(r.scaled_distance, 0.0);
    }

    #[test]
    fn scale_depth_below_tree_depth_is_rejected() {
        let sp = line();
        let s = stump(&sp, 4.0, (0, 1));
        let cfg = DistanceConfig::with_scale_depth(0);
        assert!(matches!(tree_distance(&s, &s, &sp, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let sp = line();
        let other = FeatureSpace::new(vec![Feature::numeric("x", 0.0, 11.0)]).unwrap();
        let a = stump(&sp, 4.0, (0, 1));
        let b = stump(&other, 4.0, (0, 1));
        assert!(matches!(
            tree_distance(&a, &b, &sp, &DistanceConfig::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            tree_distance(&a, &a, &other, &DistanceConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn mean_distance_examples() {
        let sp = line();
        let t = stump(&sp, 4.0, (0, 1));
        let cfg = DistanceConfig::with_scale_depth(1);
        assert_eq!(mean_distance(&t, std::slice::from_ref(&t), &sp, &cfg).unwrap(), 0.0);
        assert!(matches!(mean_distance(&t, &[], &sp, &cfg), Err(Error::Input(_))));

        // D=1, lambda=2 -> bound 8; threshold shifts of 2 and 4 move both
        // paths, giving raw 0.2 and 0.4
        let a = stump(&sp, 6.0, (0, 1));
        let b = stump(&sp, 8.0, (0, 1));
        let ra = tree_distance(&a, &t, &sp, &cfg).unwrap();
        assert_abs_diff_eq!(ra.raw_distance, 0.2, epsilon = 1e-12);
        let m = mean_distance(&t, &[a, b], &sp, &cfg).unwrap();
        assert_abs_diff_eq!(m, (0.2 / 8.0 + 0.4 / 8.0) / 2.0, epsilon = 1e-12);
    }
}
