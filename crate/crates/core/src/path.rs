//! Path-set representation of a tree: one axis-aligned box plus a label
//! per leaf.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mask::CategoryMask;
use crate::space::{FeatureKind, FeatureSpace};
use crate::tree::{DecisionTree, Node, SplitRule};

/// Restriction a path places on one feature. Untouched features keep the
/// full range (or the all-ones mask).
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureRange {
    Interval { lower: f64, upper: f64 },
    Categories(CategoryMask),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreePath {
    ranges: Vec<FeatureRange>,
    label: usize,
}

impl TreePath {
    /// Path covering the whole space.
    pub fn full(space: &FeatureSpace, label: usize) -> Self {
        let ranges = space
            .features()
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Numeric { lower, upper } => FeatureRange::Interval { lower, upper },
                FeatureKind::Categorical { cardinality } => FeatureRange::Categories(CategoryMask::full(cardinality)),
            })
            .collect();
        TreePath { ranges, label }
    }

    pub fn from_parts(ranges: Vec<FeatureRange>, label: usize) -> Self {
        TreePath { ranges, label }
    }

    pub fn ranges(&self) -> &[FeatureRange] {
        &self.ranges
    }

    pub fn range(&self, feature: usize) -> &FeatureRange {
        &self.ranges[feature]
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn set_label(&mut self, label: usize) {
        self.label = label;
    }

    /// Membership under the tree's routing convention: a lower bound is
    /// exclusive (it came from a right branch `x > t`) unless it equals the
    /// feature's own lower bound.
    pub fn contains(&self, space: &FeatureSpace, point: &[f64]) -> bool {
        self.ranges.iter().enumerate().all(|(j, r)| match r {
            FeatureRange::Interval { lower, upper } => {
                let x = point[j];
                let (l0, _) = space.bounds(j).expect("interval on numeric feature");
                let above = if *lower == l0 { x >= *lower } else { x > *lower };
                above && x <= *upper
            }
            FeatureRange::Categories(m) => m.contains(point[j] as usize),
        })
    }

    fn cmp_key(&self, other: &TreePath) -> Ordering {
        for (a, b) in self.ranges.iter().zip(&other.ranges) {
            let o = match (a, b) {
                (FeatureRange::Interval { lower: la, upper: ua }, FeatureRange::Interval { lower: lb, upper: ub }) => {
                    la.total_cmp(lb).then(ua.total_cmp(ub))
                }
                (FeatureRange::Categories(ma), FeatureRange::Categories(mb)) => ma.cmp(mb),
                (FeatureRange::Interval { .. }, _) => Ordering::Less,
                (_, FeatureRange::Interval { .. }) => Ordering::Greater,
            };
            if o != Ordering::Equal {
                return o;
            }
        }
        self.label.cmp(&other.label)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    pub paths: Vec<TreePath>,
    pub source_depth: usize,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Paths in a canonical order, for order-insensitive comparison.
    pub fn canonical(&self) -> Vec<TreePath> {
        let mut v = self.paths.clone();
        v.sort_by(|a, b| a.cmp_key(b));
        v
    }

    /// Multiset equality of the paths.
    pub fn same_paths(&self, other: &PathSet) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }

    /// Indices of paths containing `point`.
    pub fn containing(&self, space: &FeatureSpace, point: &[f64]) -> Vec<usize> {
        self.paths
            .iter()
            .enumerate()
            .filter(|(_, p)| p.contains(space, point))
            .map(|(i, _)| i)
            .collect()
    }
}

/// One path per leaf, in left-first depth-first order.
pub fn extract_paths(tree: &DecisionTree, space: &FeatureSpace) -> Result<PathSet> {
    if tree.space_digest() != space.digest() {
        return Err(Error::Config(format!(
            "tree built for space {} but {} supplied",
            tree.space_digest(),
            space.digest()
        )));
    }
    let mut paths = Vec::with_capacity(tree.leaf_count());
    let mut stack = vec![(tree.root(), TreePath::full(space, 0))];
    while let Some((id, mut path)) = stack.pop() {
        match tree.node(id) {
            Node::Leaf { label, .. } => {
                path.label = *label;
                paths.push(path);
            }
            Node::Split {
                feature,
                rule,
                left,
                right,
            } => {
                let mut lp = path.clone();
                let mut rp = path;
                match (rule, &mut lp.ranges[*feature], &mut rp.ranges[*feature]) {
                    (
                        SplitRule::Threshold(t),
                        FeatureRange::Interval { upper, lower: ll },
                        FeatureRange::Interval { lower, upper: ru },
                    ) => {
                        *upper = upper.min(*t);
                        *lower = lower.max(*t);
                        if *ll > *upper || *lower > *ru {
                            return Err(Error::MalformedTree(format!(
                                "node {id}: split on feature {feature} at {t} leaves an empty interval"
                            )));
                        }
                    }
                    (SplitRule::Categories(sub), FeatureRange::Categories(lm), FeatureRange::Categories(rm)) => {
                        *lm = lm.intersect(sub);
                        *rm = rm.intersect(&sub.complement());
                        if lm.is_empty() || rm.is_empty() {
                            return Err(Error::MalformedTree(format!(
                                "node {id}: split on feature {feature} leaves an empty category set"
                            )));
                        }
                    }
                    _ => {
                        return Err(Error::MalformedTree(format!(
                            "node {id}: split kind does not match feature {feature}"
                        )));
                    }
                }
                // right pushed first so the left subtree is emitted first
                stack.push((*right, rp));
                stack.push((*left, lp));
            }
        }
    }
    Ok(PathSet {
        paths,
        source_depth: tree.depth(),
    })
}
