//! Fixed inputs shared by the benchmarks.

use treestab_core::ingest::breast_cancer;
use treestab_core::rng::seeded;
use treestab_core::synth::{RandomTreeConfig, random_space, random_tree};
use treestab_core::{Dataset, DecisionTree, FeatureSpace, TrainConfig, train_tree};

/// A space and two random trees of the given depth on it.
pub fn random_pair(depth: usize, seed: u64) -> (FeatureSpace, DecisionTree, DecisionTree) {
    let mut rng = seeded(seed);
    let space = random_space(&mut rng, 6, 2);
    let cfg = RandomTreeConfig {
        max_depth: depth,
        split_probability: 0.9,
        class_count: 2,
    };
    let a = random_tree(&space, &cfg, &mut rng);
    let b = random_tree(&space, &cfg, &mut rng);
    (space, a, b)
}

pub fn breast_cancer() -> Dataset {
    breast_cancer::load().expect("bundled data loads")
}

/// Deep CART tree on the bundled data.
pub fn fitted_tree(data: &Dataset, depth: usize) -> DecisionTree {
    train_tree(data, &TrainConfig::new(depth, 1)).expect("training succeeds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let (_, a, _) = random_pair(4, 1);
        assert!(a.depth() <= 4);
        let data = breast_cancer();
        assert!(fitted_tree(&data, 6).depth() <= 6);
    }
}
