//! Sensitivity of the tree distance to perturbations of the tree itself
//! (direct) and of its training data (indirect).

use rand::Rng;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{DistanceConfig, tree_distance};
use crate::error::{Error, Result};
use crate::metrics::{mean_std, spearman};
use crate::rng::{derive_seed, seeded};
use crate::space::FeatureSpace;
use crate::stability::cv_baseline;
use crate::tree::{DecisionTree, Node, SplitRule};

/// How the per-node multiplier `1 + δ` is drawn for a given `θ_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationReading {
    /// `θ ~ U[0, 1]`, `δ = θ_max·(2θ − 1)`: uniform on `[−θ_max, θ_max]`.
    #[default]
    Symmetric,
    /// `θ ~ U[0, θ_max]`, `δ = 2·θ_max·θ − θ_max`.
    Literal,
}

impl PerturbationReading {
    fn draw<R: Rng>(&self, theta_max: f64, rng: &mut R) -> f64 {
        match self {
            PerturbationReading::Symmetric => theta_max * (2.0 * rng.random::<f64>() - 1.0),
            PerturbationReading::Literal => {
                let theta = theta_max * rng.random::<f64>();
                2.0 * theta_max * theta - theta_max
            }
        }
    }
}

/// Multiplies each numeric threshold `t` (node `id`) by `1 + delta(id)`.
/// Results are clamped to the feature range and then to the interval the
/// node's ancestors leave on that feature, so no path becomes empty.
pub fn scale_thresholds(
    tree: &DecisionTree,
    space: &FeatureSpace,
    mut delta: impl FnMut(usize) -> f64,
) -> Result<DecisionTree> {
    let mut new_t: Vec<Option<f64>> = vec![None; tree.node_count()];
    let ranges: Vec<(f64, f64)> = (0..space.len())
        .map(|j| space.bounds(j).unwrap_or((0.0, 0.0)))
        .collect();
    let deltas: Vec<f64> = (0..tree.node_count())
        .map(|id| match tree.node(id) {
            Node::Split {
                rule: SplitRule::Threshold(_),
                ..
            } => delta(id),
            _ => 0.0,
        })
        .collect();
    let mut stack = vec![(tree.root(), ranges)];
    while let Some((id, region)) = stack.pop() {
        if let Node::Split {
            feature,
            rule,
            left,
            right,
        } = tree.node(id)
        {
            let mut lr = region.clone();
            let mut rr = region;
            if let SplitRule::Threshold(t) = rule {
                let (l, u) = space.bounds(*feature).expect("threshold on numeric feature");
                let (rl, ru) = lr[*feature];
                let t2 = (t * (1.0 + deltas[id])).clamp(l, u).clamp(rl, ru);
                new_t[id] = Some(t2);
                lr[*feature].1 = t2;
                rr[*feature].0 = t2;
            }
            stack.push((*right, rr));
            stack.push((*left, lr));
        }
    }
    tree.map_thresholds(space, |id, _, t| new_t[id].unwrap_or(t))
}

/// Random multiplicative threshold perturbation of magnitude `theta_max`.
/// Topology, features, categorical subsets and labels are unchanged.
pub fn perturb_thresholds(
    tree: &DecisionTree,
    space: &FeatureSpace,
    theta_max: f64,
    reading: PerturbationReading,
    seed: u64,
) -> Result<DecisionTree> {
    if !(0.0..=1.0).contains(&theta_max) {
        return Err(Error::Config(format!("theta_max must lie in [0, 1], got {theta_max}")));
    }
    let mut rng = seeded(seed);
    // one draw per node in id order, including nodes that ignore it, so a
    // node's draw does not depend on the kinds of the nodes before it
    let draws: Vec<f64> = (0..tree.node_count())
        .map(|_| reading.draw(theta_max, &mut rng))
        .collect();
    scale_thresholds(tree, space, |id| draws[id])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Perturbation magnitudes, ascending, in `[0, 1]`.
    pub grid: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub distance: DistanceConfig,
    pub reading: PerturbationReading,
    pub holdout_fraction: f64,
    pub depths: Vec<usize>,
    pub min_leaf: Vec<usize>,
    pub cv_folds: usize,
}

impl PerturbationConfig {
    /// 100 repetitions over `θ_max ∈ {0.1, …, 1.0}`; distances scaled by the
    /// compared tree's own depth.
    pub fn direct() -> Self {
        PerturbationConfig {
            grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            repetitions: 100,
            seed: 0,
            distance: DistanceConfig::default(),
            reading: PerturbationReading::Symmetric,
            holdout_fraction: 0.33,
            depths: (3..=12).collect(),
            min_leaf: vec![3, 5, 10, 30, 50],
            cv_folds: 5,
        }
    }

    /// 10 repetitions over `θ ∈ {0.2, …, 1.0}`; distances scaled by the
    /// deepest grid depth.
    pub fn indirect() -> Self {
        PerturbationConfig {
            grid: (1..=5).map(|i| i as f64 / 5.0).collect(),
            repetitions: 10,
            distance: DistanceConfig::with_scale_depth(12),
            ..Self::direct()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("perturbation grid is empty".into()));
        }
        if self.grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::Config("perturbation grid values must lie in [0, 1]".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("perturbation grid must be strictly ascending".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config("holdout_fraction must lie in (0, 1)".into()));
        }
        if self.depths.is_empty() || self.min_leaf.is_empty() {
            return Err(Error::Config("hyperparameter grids must be non-empty".into()));
        }
        Ok(())
    }
}

/// Mean and population std of the scaled distance at each grid value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub theta: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: Vec<usize>,
    /// Raw per-repetition distances, `samples[rep][grid index]`.
    pub samples: Vec<Vec<f64>>,
}

impl Curve {
    fn from_samples(theta: Vec<f64>, samples: Vec<Vec<f64>>) -> Curve {
        let (mut mean, mut std, mut n) = (Vec::new(), Vec::new(), Vec::new());
        for g in 0..theta.len() {
            let col: Vec<f64> = samples.iter().map(|s| s[g]).collect();
            let (m, s) = mean_std(&col);
            mean.push(m);
            std.push(s);
            n.push(col.len());
        }
        Curve {
            theta,
            mean,
            std,
            n,
            samples,
        }
    }

    /// Spearman correlation between grid value and mean distance.
    pub fn trend(&self) -> f64 {
        spearman(&self.theta, &self.mean)
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    order
}

/// Per repetition: split off a holdout, fit a cross-validated tree on the
/// rest, then perturb it at every grid value and measure the distance to
/// the original.
pub fn direct_sensitivity(data: &Dataset, cfg: &PerturbationConfig) -> Result<Curve> {
    cfg.validate()?;
    let samples = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(cfg.seed, rep as u64);
            let order = shuffled(data.len(), derive_seed(seed, 0));
            let n_hold = ((data.len() as f64) * cfg.holdout_fraction).round() as usize;
            let train = data.subset(&order[n_hold..]);
            let tree = cv_baseline(&train, &cfg.depths, &cfg.min_leaf, cfg.cv_folds, derive_seed(seed, 1))?.tree;
            cfg.grid
                .iter()
                .enumerate()
                .map(|(g, &theta)| {
                    let p =
                        perturb_thresholds(&tree, data.space(), theta, cfg.reading, derive_seed(seed, 2 + g as u64))?;
                    Ok(tree_distance(&tree, &p, data.space(), &cfg.distance)?.scaled_distance)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve::from_samples(cfg.grid.clone(), samples))
}

/// Per repetition: shuffle, fit a cross-validated tree on the first half,
/// then for each grid value `θ` swap the first `θ` share of that half for
/// rows of the second half, refit with the same folds seed, and measure
/// the distance to the first tree. With `θ = 0` in the grid the refit sees
/// identical data and the distance is exactly zero.
pub fn indirect_sensitivity(data: &Dataset, cfg: &PerturbationConfig) -> Result<Curve> {
    cfg.validate()?;
    let half = data.len() / 2;
    let smallest_leaf = cfg.min_leaf.iter().copied().min().unwrap_or(1);
    if half < 2 * smallest_leaf * cfg.cv_folds {
        return Err(Error::Input(format!(
            "{} rows are too few for {}-fold fits with leaves of {smallest_leaf}",
            data.len(),
            cfg.cv_folds
        )));
    }
    let samples = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(cfg.seed, rep as u64);
            let order = shuffled(data.len(), derive_seed(seed, 0));
            let (first, second) = (&order[..half], &order[half..2 * half]);
            let fold_seed = derive_seed(seed, 1);
            let fit = |rows: &[usize]| {
                cv_baseline(&data.subset(rows), &cfg.depths, &cfg.min_leaf, cfg.cv_folds, fold_seed).map(|r| r.tree)
            };
            let base = fit(first)?;
            cfg.grid
                .iter()
                .map(|&theta| {
                    let k = ((half as f64) * theta).round() as usize;
                    let rows: Vec<usize> = second[..k].iter().chain(&first[k..]).copied().collect();
                    let tree = fit(&rows)?;
                    Ok(tree_distance(&base, &tree, data.space(), &cfg.distance)?.scaled_distance)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve::from_samples(cfg.grid.clone(), samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Feature;
    use crate::tree::TreeBuilder;

    fn stump() -> (FeatureSpace, DecisionTree) {
        let space = FeatureSpace::new(vec![Feature::numeric("x", 0.0, 10.0)]).unwrap();
        let mut b = TreeBuilder::new(2);
        let l = b.leaf(0);
        let r = b.leaf(1);
        let root = b.numeric(0, 5.0, l, r);
        let t = b.build(root, &space).unwrap();
        (space, t)
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let (space, t) = stump();
        let p = perturb_thresholds(&t, &space, 0.0, PerturbationReading::Symmetric, 1).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn forced_twenty_percent() {
        let (space, t) = stump();
        let p = scale_thresholds(&t, &space, |_| 0.2).unwrap();
        assert!(
            matches!(p.node(p.root()), Node::Split { rule: SplitRule::Threshold(x), .. } if (*x - 6.0).abs() < 1e-12)
        );
        let d = tree_distance(&t, &p, &space, &DistanceConfig::default()).unwrap();
        // each path moves one bound by 1 on a range of 10: 1/20 per path
        assert!((d.raw_distance - 0.1).abs() < 1e-12);
        assert!((d.scaled_distance - 0.1 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn clamped_to_feature_range() {
        let (space, t) = stump();
        let p = scale_thresholds(&t, &space, |_| 1.5).unwrap();
        assert!(matches!(p.node(p.root()), Node::Split { rule: SplitRule::Threshold(x), .. } if *x == 10.0));
    }

    #[test]
    fn child_thresholds_stay_inside_parent_region() {
        let space = FeatureSpace::new(vec![Feature::numeric("x", 0.0, 10.0)]).unwrap();
        let mut b = TreeBuilder::new(2);
        let a = b.leaf(0);
        let c = b.leaf(1);
        let inner = b.numeric(0, 4.0, a, c);
        let r = b.leaf(1);
        let root = b.numeric(0, 5.0, inner, r);
        let t = b.build(root, &space).unwrap();
        let p = scale_thresholds(&t, &space, |id| if id == root { -0.2 } else { 0.5 }).unwrap();
        crate::path::extract_paths(&p, &space).unwrap();
        assert!(matches!(p.node(inner), Node::Split { rule: SplitRule::Threshold(x), .. } if *x == 4.0));
    }

    #[test]
    fn literal_reading_range() {
        let mut rng = seeded(5);
        for _ in 0..1000 {
            let d = PerturbationReading::Literal.draw(0.5, &mut rng);
            assert!((-0.5..=0.0).contains(&d));
            let s = PerturbationReading::Symmetric.draw(0.5, &mut rng);
            assert!((-0.5..=0.5).contains(&s));
        }
    }

    #[test]
    fn grid_validation() {
        let mut c = PerturbationConfig::direct();
        c.grid = vec![0.5, 0.2];
        assert!(c.validate().is_err());
        c.grid = vec![1.2];
        assert!(c.validate().is_err());
    }
}
