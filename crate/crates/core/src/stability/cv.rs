//! k-fold cross-validated CART, the reference model selection procedure.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{TrainConfig, train_tree};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::rng::seeded;
use crate::tree::DecisionTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub fold_auc: Vec<f64>,
    pub mean_auc: f64,
}

#[derive(Clone, Debug)]
pub struct CvResult {
    /// Refit on all of the data with the winning cell.
    pub tree: DecisionTree,
    pub best: (usize, usize),
    /// One entry per grid cell, depth-major.
    pub cells: Vec<CvCell>,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// so every fold sees every class when the class has at least `k` rows.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config("need at least two folds".into()));
    }
    if data.len() < k {
        return Err(Error::Input(format!("{} rows cannot fill {k} folds", data.len())));
    }
    let mut rng = seeded(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in 0..data.class_count() {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Grid search over `(depth, min leaf)` by mean validation AUC across `k`
/// folds; the first cell in grid order wins ties.
pub fn cv_baseline(data: &Dataset, depths: &[usize], min_leaf: &[usize], k: usize, seed: u64) -> Result<CvResult> {
    if depths.is_empty() || min_leaf.is_empty() {
        return Err(Error::Config("hyperparameter grids must be non-empty".into()));
    }
    let folds = stratified_folds(data, k, seed)?;
    let splits: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            (data.subset(&train), data.subset(&folds[f]))
        })
        .collect();
    let grid: Vec<(usize, usize)> = depths
        .iter()
        .flat_map(|&d| min_leaf.iter().map(move |&m| (d, m)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(d, m)| {
            let cfg = TrainConfig::new(d, m);
            let fold_auc = splits
                .iter()
                .map(|(train, valid)| auc(&train_tree(train, &cfg)?, valid))
                .collect::<Result<Vec<f64>>>()?;
            let mean_auc = fold_auc.iter().sum::<f64>() / k as f64;
            Ok(CvCell {
                max_depth: d,
                min_samples_leaf: m,
                fold_auc,
                mean_auc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.mean_auc > cells[best].mean_auc {
            best = i;
        }
    }
    let best = (cells[best].max_depth, cells[best].min_samples_leaf);
    let tree = train_tree(data, &TrainConfig::new(best.0, best.1))?;
    Ok(CvResult { tree, best, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Feature, FeatureSpace};
    use std::sync::Arc;

    fn data() -> Dataset {
        let space = Arc::new(FeatureSpace::new(vec![Feature::numeric("a", 0.0, 100.0)]).unwrap());
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![((i * 37) % 100) as f64]).collect();
        let labels = rows.iter().map(|r| usize::from(r[0] > 40.0)).collect();
        Dataset::new(space, rows, labels, 2).unwrap()
    }

    #[test]
    fn folds_partition_and_are_stratified() {
        let d = data();
        let folds = stratified_folds(&d, 5, 3).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.iter().any(|&i| d.label(i) == 0) && f.iter().any(|&i| d.label(i) == 1));
        }
        assert_eq!(folds, stratified_folds(&d, 5, 3).unwrap());
    }

    #[test]
    fn single_cell_equals_plain_training() {
        let d = data();
        let r = cv_baseline(&d, &[2], &[3], 5, 1).unwrap();
        assert_eq!(r.tree, train_tree(&d, &TrainConfig::new(2, 3)).unwrap());
        assert_eq!(r.cells.len(), 1);
    }

    #[test]
    fn winner_has_max_mean_fold_auc() {
        let d = data();
        let r = cv_baseline(&d, &[1, 2, 4], &[1, 5, 20], 5, 8).unwrap();
        let top = r.cells.iter().map(|c| c.mean_auc).fold(f64::MIN, f64::max);
        let first = r.cells.iter().find(|c| c.mean_auc == top).unwrap();
        assert_eq!(r.best, (first.max_depth, first.min_samples_leaf));
        for c in &r.cells {
            let m = c.fold_auc.iter().sum::<f64>() / 5.0;
            assert!((m - c.mean_auc).abs() < 1e-15);
        }
    }
}
