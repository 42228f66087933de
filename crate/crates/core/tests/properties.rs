use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use rand::seq::SliceRandom;

use treestab_core::experiments::{PerturbationReading, perturb_thresholds};
use treestab_core::ingest::breast_cancer;
use treestab_core::rng::seeded;
use treestab_core::serialize::{from_json, to_json};
use treestab_core::stability::{
    Grid, Objectives, PipelineConfig, brute_force_frontier, build_collection, pareto_frontier, run_pipeline,
    score_collection, split_repetition,
};
use treestab_core::synth::{RandomTreeConfig, random_space, random_tree};
use treestab_core::{
    Dataset, DecisionTree, DistanceConfig, FeatureKind, FeatureSpace, Node, TrainConfig, auc_from_scores,
    extract_paths, mean_distance, path_distance, path_set_distance, train_tree, tree_distance,
};

fn tree_cfg(depth: usize) -> RandomTreeConfig {
    RandomTreeConfig {
        max_depth: depth,
        split_probability: 0.75,
        class_count: 3,
    }
}

fn random_point<R: Rng>(space: &FeatureSpace, rng: &mut R) -> Vec<f64> {
    space
        .features()
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric { lower, upper } => rng.random_range(lower..=upper),
            FeatureKind::Categorical { cardinality } => rng.random_range(0..cardinality) as f64,
        })
        .collect()
}

/// Two-class data whose label mostly follows the first feature.
fn random_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = seeded(seed);
    let space = random_space(&mut rng, 3, 1);
    let (lo, hi) = space.bounds(0).unwrap();
    let mid = (lo + hi) / 2.0;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let row = random_point(&space, &mut rng);
        let noisy = rng.random_bool(0.1);
        let y = ((row[0] > mid) != noisy) as usize;
        // both classes always present
        labels.push(if i < 2 { i } else { y });
        rows.push(row);
    }
    Dataset::new(Arc::new(space), rows, labels, 2).unwrap()
}

fn same_topology(a: &DecisionTree, b: &DecisionTree) -> bool {
    a.node_count() == b.node_count()
        && a.nodes().iter().zip(b.nodes()).all(|pair| match pair {
            (
                Node::Split {
                    feature: f1,
                    left: l1,
                    right: r1,
                    ..
                },
                Node::Split {
                    feature: f2,
                    left: l2,
                    right: r2,
                    ..
                },
            ) => f1 == f2 && l1 == l2 && r1 == r2,
            (Node::Leaf { label: a, .. }, Node::Leaf { label: b, .. }) => a == b,
            _ => false,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_and_symmetry(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 3, 2);
        let a = extract_paths(&random_tree(&space, &tree_cfg(5), &mut rng), &space).unwrap();
        let b = extract_paths(&random_tree(&space, &tree_cfg(4), &mut rng), &space).unwrap();
        let cfg = DistanceConfig::with_scale_depth(5);
        let d = |x, y| path_set_distance(x, y, &space, &cfg).unwrap().raw_distance;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-9);
        if !a.same_paths(&b) {
            prop_assert!(d(&a, &b) > 0.0);
        }
    }

    // With equally many paths every path is matched, and the metric
    // property of the per-path distance carries over.
    #[test]
    fn triangle_with_equal_path_counts(seed in any::<u64>(), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 3, 1);
        let base = random_tree(&space, &tree_cfg(4), &mut rng);
        let trees = [
            base.clone(),
            perturb_thresholds(&base, &space, t1, PerturbationReading::Symmetric, seed ^ 1).unwrap(),
            perturb_thresholds(&base, &space, t2, PerturbationReading::Symmetric, seed ^ 2).unwrap(),
        ];
        let cfg = DistanceConfig::default();
        let d = |x: usize, y: usize| tree_distance(&trees[x], &trees[y], &space, &cfg).unwrap().raw_distance;
        for (x, y, z) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-9);
        }
    }

    #[test]
    fn paths_partition_the_space_and_agree_with_prediction(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 3, 2);
        let tree = random_tree(&space, &tree_cfg(5), &mut rng);
        let paths = extract_paths(&tree, &space).unwrap();
        prop_assert_eq!(paths.len(), tree.leaf_count());
        for _ in 0..50 {
            let x = random_point(&space, &mut rng);
            let hits = paths.containing(&space, &x);
            prop_assert_eq!(hits.len(), 1);
            let (label, _) = tree.classify(&x).unwrap();
            prop_assert_eq!(paths.paths[hits[0]].label(), label);
        }
    }

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 2, 2);
        let tree = random_tree(&space, &tree_cfg(5), &mut rng);
        let (back, back_space) = from_json(&to_json(&tree, &space).unwrap()).unwrap();
        prop_assert_eq!(&back_space, &space);
        prop_assert_eq!(&back, &tree);
    }

    #[test]
    fn scaled_distance_lies_in_unit_interval(seed in any::<u64>(), extra in 0usize..3) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 3, 2);
        let a = random_tree(&space, &tree_cfg(5), &mut rng);
        let b = random_tree(&space, &tree_cfg(3), &mut rng);
        let cfg = DistanceConfig::with_scale_depth(a.depth().max(b.depth()) + extra);
        let s = tree_distance(&a, &b, &space, &cfg).unwrap().scaled_distance;
        prop_assert!((0.0..=1.0).contains(&s), "{}", s);
    }

    #[test]
    fn distance_ignores_path_order(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 2, 2);
        let a = extract_paths(&random_tree(&space, &tree_cfg(4), &mut rng), &space).unwrap();
        let b = extract_paths(&random_tree(&space, &tree_cfg(4), &mut rng), &space).unwrap();
        let mut shuffled = a.clone();
        shuffled.paths.shuffle(&mut rng);
        let cfg = DistanceConfig::default();
        let d1 = path_set_distance(&a, &b, &space, &cfg).unwrap().raw_distance;
        let d2 = path_set_distance(&shuffled, &b, &space, &cfg).unwrap().raw_distance;
        prop_assert!((d1 - d2).abs() <= 1e-9);
    }

    #[test]
    fn perturbation_keeps_topology_and_bounds_distance(seed in any::<u64>(), theta in 0.0..=1.0f64, literal in any::<bool>()) {
        let mut rng = seeded(seed);
        let space = random_space(&mut rng, 3, 1);
        let tree = random_tree(&space, &tree_cfg(5), &mut rng);
        let reading = if literal { PerturbationReading::Literal } else { PerturbationReading::Symmetric };
        let p = perturb_thresholds(&tree, &space, theta, reading, seed).unwrap();
        prop_assert!(same_topology(&tree, &p));
        let (a, b) = (extract_paths(&tree, &space).unwrap(), extract_paths(&p, &space).unwrap());
        prop_assert_eq!(a.len(), b.len());
        let cfg = DistanceConfig::default();
        let m = path_set_distance(&a, &b, &space, &cfg).unwrap();
        // leaf i corresponds to leaf i; the optimum can only do better
        let identity: f64 = a.paths.iter().zip(&b.paths)
            .map(|(x, y)| path_distance(x, y, &space, m.lambda).unwrap())
            .sum();
        prop_assert!(m.raw_distance <= identity + 1e-9);
    }

    #[test]
    fn auc_of_negated_scores_is_complement(scores in prop::collection::vec(0u8..20, 2..60), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut labels: Vec<bool> = scores.iter().map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let s: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        let a = auc_from_scores(&s, &labels).unwrap();
        let b = auc_from_scores(&neg, &labels).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frontier_matches_quadratic_oracle(
        raw in prop::collection::vec((0u8..30, 0u8..30, 0u8..5), 1..1000),
        three in any::<bool>(),
    ) {
        let points: Vec<Objectives> = raw.iter().map(|&(d, a, c)| Objectives {
            distance: d as f64 / 30.0,
            auc: a as f64 / 30.0,
            cost: three.then_some(c as f64),
        }).collect();
        let fast = pareto_frontier(&points).unwrap();
        prop_assert_eq!(&fast, &brute_force_frontier(&points));
        // the best point in each objective is always represented
        let best_auc = points.iter().map(|p| p.auc).fold(f64::MIN, f64::max);
        let best_d = points.iter().map(|p| p.distance).fold(f64::MAX, f64::min);
        prop_assert!(fast.iter().any(|&i| points[i].auc == best_auc));
        prop_assert!(fast.iter().any(|&i| points[i].distance == best_d));
        for &i in &fast {
            prop_assert!(!points.iter().any(|q| q.dominates(&points[i])));
        }
    }

    #[test]
    fn cart_respects_depth_and_leaf_size(seed in any::<u64>(), depth in 1usize..7, min_leaf in 1usize..15) {
        let data = random_dataset(seed, 150);
        let tree = train_tree(&data, &TrainConfig::new(depth, min_leaf)).unwrap();
        prop_assert!(tree.depth() <= depth);
        let mut total = 0;
        for node in tree.nodes() {
            if let Node::Leaf { samples, .. } = node {
                prop_assert!(*samples >= min_leaf);
                total += samples;
            }
        }
        prop_assert_eq!(total, data.len());
    }

    #[test]
    fn split_is_a_clean_partition(n in 20usize..600, holdout in 0.1..0.5f64, batch in 0.2..0.8f64, rep in 0usize..5) {
        let cfg = PipelineConfig { holdout_fraction: holdout, batch_fraction: batch, ..PipelineConfig::default() };
        let s = split_repetition(n, &cfg, rep);
        let mut all: Vec<usize> = s.train.iter().chain(&s.holdout).chain(&s.validation).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(s.first_batch.iter().all(|i| s.train.contains(i)));
        prop_assert!(!s.first_batch.iter().any(|i| s.holdout.contains(i)));
    }
}

#[test]
fn collection_size_and_scores_match_naive_recomputation() {
    let data = random_dataset(9, 200);
    let grid = Grid {
        depths: vec![2, 3, 4],
        min_leaf: vec![3, 10],
        bootstraps: 2,
    };
    let first = build_collection(&data.subset(&(0..100).collect::<Vec<_>>()), &grid, 1).unwrap();
    let second = build_collection(&data, &grid, 2).unwrap();
    assert_eq!(first.trees.len(), 3 * 2 * 2);
    assert_eq!(second.trees.len(), grid.collection_size());
    let cfg = DistanceConfig::with_scale_depth(4);
    let scored = score_collection(&second, &first.trees, &data, &cfg, true).unwrap();
    for s in &scored {
        let naive = mean_distance(&s.tree, &first.trees, data.space(), &cfg).unwrap();
        let mut looped = 0.0;
        for r in &first.trees {
            looped += tree_distance(r, &s.tree, data.space(), &cfg).unwrap().scaled_distance;
        }
        assert!((s.d_b - naive).abs() <= 1e-12);
        assert!((s.d_b - looped / first.trees.len() as f64).abs() <= 1e-12);
        assert_eq!(s.i_b, Some(s.tree.node_count() as f64));
    }
}

#[test]
fn single_repetition_pipeline_runs() {
    let data = breast_cancer::load().unwrap();
    let cfg = PipelineConfig {
        grid: Grid {
            depths: vec![2, 3, 4],
            min_leaf: vec![5, 30],
            bootstraps: 1,
        },
        repetitions: 1,
        forest_trees: 10,
        distance: DistanceConfig::with_scale_depth(4),
        ..PipelineConfig::default()
    };
    let report = run_pipeline(&data, &cfg).unwrap();
    assert_eq!(report.repetitions.len(), 1);
    let rep = &report.repetitions[0];
    assert_eq!(rep.scored.len(), 6);
    assert!(!rep.frontier.is_empty());
    assert!(rep.frontier.contains(&rep.selected.index));
    assert_eq!(report.aggregate.len(), 5);
}
