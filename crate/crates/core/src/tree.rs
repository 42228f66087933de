//! Binary decision trees with axis-aligned numeric splits and categorical
//! subset splits.
//!
//! A numeric split sends `x[feature] <= threshold` to the left child; a
//! categorical split sends members of its category subset to the left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::CategoryMask;
use crate::space::{FeatureKind, FeatureSpace, SpaceDigest};

const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    Threshold(f64),
    Categories(CategoryMask),
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, value: f64) -> bool {
        match self {
            SplitRule::Threshold(t) => value <= *t,
            SplitRule::Categories(m) => m.contains(value as usize),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
    },
    Leaf {
        label: usize,
        distribution: Vec<f64>,
        samples: usize,
    },
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: usize,
    depth: usize,
    n_features: usize,
    class_count: usize,
    space_digest: SpaceDigest,
}

impl DecisionTree {
    /// Validates the node set against `space` and computes the depth.
    pub fn new(nodes: Vec<Node>, root: usize, space: &FeatureSpace, class_count: usize) -> Result<Self> {
        let depth = validate(&nodes, root, space, class_count)?;
        Ok(DecisionTree {
            nodes,
            root,
            depth,
            n_features: space.len(),
            class_count,
            space_digest: space.digest().clone(),
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn space_digest(&self) -> &SpaceDigest {
        &self.space_digest
    }

    /// `(depth, node_count)` counting both split and leaf nodes.
    pub fn interpretability_metrics(&self) -> (usize, usize) {
        (self.depth, self.node_count())
    }

    /// Id of the leaf reached by `row`, without input validation.
    #[inline]
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => id = if rule.goes_left(row[*feature]) { *left } else { *right },
                Node::Leaf { .. } => return id,
            }
        }
    }

    /// Label and class distribution of the leaf reached by `point`.
    pub fn classify(&self, point: &[f64]) -> Result<(usize, &[f64])> {
        if point.len() != self.n_features {
            return Err(Error::Input(format!(
                "point has {} features, tree expects {}",
                point.len(),
                self.n_features
            )));
        }
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => {
                    let v = point[*feature];
                    if let SplitRule::Categories(m) = rule
                        && (v.fract() != 0.0 || v < 0.0 || v >= m.len() as f64)
                    {
                        return Err(Error::Input(format!(
                            "feature {feature}: category {v} not in [0, {})",
                            m.len()
                        )));
                    }
                    id = if rule.goes_left(v) { *left } else { *right };
                }
                Node::Leaf {
                    label, distribution, ..
                } => return Ok((*label, distribution)),
            }
        }
    }

    /// Class distribution of the reached leaf; no input validation.
    #[inline]
    pub fn predict_proba(&self, row: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_for(row)] {
            Node::Leaf { distribution, .. } => distribution,
            Node::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    /// Copy of this tree with each numeric threshold replaced by `f(node_id,
    /// feature, threshold)`. The result is revalidated against `space`.
    pub fn map_thresholds(
        &self,
        space: &FeatureSpace,
        mut f: impl FnMut(usize, usize, f64) -> f64,
    ) -> Result<DecisionTree> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| match n {
                Node::Split {
                    feature,
                    rule: SplitRule::Threshold(t),
                    left,
                    right,
                } => Node::Split {
                    feature: *feature,
                    rule: SplitRule::Threshold(f(id, *feature, *t)),
                    left: *left,
                    right: *right,
                },
                other => other.clone(),
            })
            .collect();
        DecisionTree::new(nodes, self.root, space, self.class_count)
    }
}

fn validate(nodes: &[Node], root: usize, space: &FeatureSpace, k: usize) -> Result<usize> {
    let bad = |msg: String| Err(Error::MalformedTree(msg));
    if nodes.is_empty() {
        return bad("tree has no nodes".into());
    }
    if root >= nodes.len() {
        return bad(format!("root {root} out of range"));
    }
    if k == 0 {
        return bad("class count must be positive".into());
    }
    let mut parents = vec![0usize; nodes.len()];
    for (id, node) in nodes.iter().enumerate() {
        match node {
            Node::Split {
                feature,
                rule,
                left,
                right,
            } => {
                if *feature >= space.len() {
                    return bad(format!("node {id}: feature {feature} out of range"));
                }
                for c in [*left, *right] {
                    if c >= nodes.len() {
                        return bad(format!("node {id}: child {c} out of range"));
                    }
                    parents[c] += 1;
                }
                match (&space.feature(*feature).kind, rule) {
                    (FeatureKind::Numeric { lower, upper }, SplitRule::Threshold(t)) => {
                        if !(t.is_finite() && *lower <= *t && *t <= *upper) {
                            return bad(format!("node {id}: threshold {t} outside [{lower}, {upper}]"));
                        }
                    }
                    (FeatureKind::Categorical { cardinality }, SplitRule::Categories(m)) => {
                        if m.len() != *cardinality {
                            return bad(format!(
                                "node {id}: category mask length {} != cardinality {cardinality}",
                                m.len()
                            ));
                        }
                        if m.is_empty() || m.is_full() {
                            return bad(format!("node {id}: category subset must be a non-empty proper subset"));
                        }
                    }
                    _ => return bad(format!("node {id}: split kind does not match feature {feature}")),
                }
            }
            Node::Leaf {
                label, distribution, ..
            } => {
                if *label >= k {
                    return bad(format!("node {id}: label {label} not in [0, {k})"));
                }
                if distribution.len() != k {
                    return bad(format!(
                        "node {id}: distribution has {} entries, expected {k}",
                        distribution.len()
                    ));
                }
                if distribution.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return bad(format!("node {id}: distribution has negative or non-finite entry"));
                }
                let s: f64 = distribution.iter().sum();
                if (s - 1.0).abs() > DISTRIBUTION_TOL {
                    return bad(format!("node {id}: distribution sums to {s}"));
                }
            }
        }
    }
    if parents[root] != 0 {
        return bad(format!("root {root} has a parent"));
    }
    if let Some((id, n)) = parents.iter().enumerate().find(|&(id, &n)| id != root && n != 1) {
        return bad(format!("node {id} has {n} parents"));
    }
    // Every node has one parent, so reaching all of them from the root rules
    // out detached cycles.
    let mut depth = 0;
    let mut seen = 0;
    let mut stack = vec![(root, 0usize)];
    while let Some((id, d)) = stack.pop() {
        seen += 1;
        if seen > nodes.len() {
            return bad("cycle detected".into());
        }
        match &nodes[id] {
            Node::Split { left, right, .. } => {
                stack.push((*left, d + 1));
                stack.push((*right, d + 1));
            }
            Node::Leaf { .. } => depth = depth.max(d),
        }
    }
    if seen != nodes.len() {
        return bad(format!("{} nodes unreachable from root", nodes.len() - seen));
    }
    Ok(depth)
}

/// Incremental construction of trees, mostly for tests and synthetic data.
///
/// ```
/// use treestab_core::{Feature, FeatureSpace, TreeBuilder};
/// let space = FeatureSpace::new(vec![Feature::numeric("x", 0.0, 10.0)]).unwrap();
/// let mut b = TreeBuilder::new(2);
/// let l = b.leaf(0);
/// let r = b.leaf(1);
/// let root = b.numeric(0, 4.0, l, r);
/// let tree = b.build(root, &space).unwrap();
/// assert_eq!(tree.classify(&[4.0]).unwrap().0, 0);
/// ```
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
    class_count: usize,
}

impl TreeBuilder {
    pub fn new(class_count: usize) -> Self {
        TreeBuilder {
            nodes: Vec::new(),
            class_count,
        }
    }

    /// Leaf with a one-hot distribution on `label`.
    pub fn leaf(&mut self, label: usize) -> usize {
        let mut distribution = vec![0.0; self.class_count];
        if label < self.class_count {
            distribution[label] = 1.0;
        }
        self.push(Node::Leaf {
            label,
            distribution,
            samples: 0,
        })
    }

    pub fn leaf_with(&mut self, label: usize, distribution: Vec<f64>, samples: usize) -> usize {
        self.push(Node::Leaf {
            label,
            distribution,
            samples,
        })
    }

    pub fn numeric(&mut self, feature: usize, threshold: f64, left: usize, right: usize) -> usize {
        self.push(Node::Split {
            feature,
            rule: SplitRule::Threshold(threshold),
            left,
            right,
        })
    }

    pub fn categorical(&mut self, feature: usize, subset: CategoryMask, left: usize, right: usize) -> usize {
        self.push(Node::Split {
            feature,
            rule: SplitRule::Categories(subset),
            left,
            right,
        })
    }

    pub fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn build(self, root: usize, space: &FeatureSpace) -> Result<DecisionTree> {
        DecisionTree::new(self.nodes, root, space, self.class_count)
    }
}
