use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collection::{Collection, Grid, ScoredSummary, build_collection, extract_all, mean_to, score_collection};
use super::cv::cv_baseline;
use super::select::{Selected, SelectionRule};
use super::{mark_frontier, select_tree};
use crate::cart::gini_importance;
use crate::dataset::Dataset;
use crate::distance::DistanceConfig;
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, train_forest};
use crate::metrics::{auc, mean_std};
use crate::path::extract_paths;
use crate::rng::{derive_seed, seeded};
use crate::tree::DecisionTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Share of the training rows in the first batch.
    pub batch_fraction: f64,
    #[serde(flatten)]
    pub grid: Grid,
    pub holdout_fraction: f64,
    /// When set, a validation split of this share is carved out and used
    /// for α_b, leaving the test holdout untouched until reporting.
    pub validation_fraction: Option<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub distance: DistanceConfig,
    pub selection: SelectionRule,
    /// Adds node count as a third, minimized objective.
    pub three_objectives: bool,
    pub cv_folds: usize,
    pub forest_trees: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            batch_fraction: 0.5,
            grid: Grid {
                depths: (3..=12).collect(),
                min_leaf: vec![3, 5, 10, 30, 50],
                bootstraps: 2,
            },
            holdout_fraction: 0.33,
            validation_fraction: None,
            repetitions: 10,
            seed: 0,
            distance: DistanceConfig::with_scale_depth(12),
            selection: SelectionRule::EpsilonConstrained(0.05),
            three_objectives: false,
            cv_folds: 5,
            forest_trees: 100,
        }
    }
}

fn in_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        in_unit("batch_fraction", self.batch_fraction)?;
        in_unit("holdout_fraction", self.holdout_fraction)?;
        if let Some(v) = self.validation_fraction {
            in_unit("validation_fraction", v)?;
            if v + self.holdout_fraction >= 1.0 {
                return Err(Error::Config("holdout and validation leave no training rows".into()));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        if self.forest_trees == 0 {
            return Err(Error::Config("forest_trees must be >= 1".into()));
        }
        self.distance_config().resolve(self.grid.max_depth(), 0)?;
        Ok(())
    }

    /// Distance settings with the scaling depth pinned to the deepest grid
    /// value unless set explicitly, so every pairwise distance shares one
    /// bound.
    pub fn distance_config(&self) -> DistanceConfig {
        DistanceConfig {
            scale_depth: Some(self.distance.scale_depth.unwrap_or(self.grid.max_depth())),
            ..self.distance
        }
    }
}

/// Row indices of one repetition's splits, into the full dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepSplit {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
    pub validation: Vec<usize>,
    /// Prefix of `train` used for the first collection.
    pub first_batch: Vec<usize>,
}

fn share(n: usize, f: f64) -> usize {
    ((n as f64 * f).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

pub fn split_repetition(n: usize, cfg: &PipelineConfig, rep: usize) -> RepSplit {
    let mut rng = seeded(derive_seed(rep_seed(cfg, rep), 0));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_hold = share(n, cfg.holdout_fraction);
    let n_val = cfg.validation_fraction.map_or(0, |v| share(n, v));
    let holdout = order[..n_hold].to_vec();
    let validation = order[n_hold..n_hold + n_val].to_vec();
    let train = order[n_hold + n_val..].to_vec();
    let n_first = share(train.len(), cfg.batch_fraction);
    let first_batch = train[..n_first].to_vec();
    RepSplit {
        train,
        holdout,
        validation,
        first_batch,
    }
}

fn rep_seed(cfg: &PipelineConfig, rep: usize) -> u64 {
    derive_seed(cfg.seed, rep as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Highest-AUC frontier tree.
    AucMax,
    /// Lowest-distance frontier tree.
    DistanceMin,
    /// Frontier tree picked by the configured rule.
    Selected,
    /// Cross-validated CART.
    Cv,
    /// Bagged ensemble; size columns describe its largest member.
    Bagging,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::AucMax,
        Method::DistanceMin,
        Method::Selected,
        Method::Cv,
        Method::Bagging,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::AucMax => "auc_max",
            Method::DistanceMin => "distance_min",
            Method::Selected => "selected",
            Method::Cv => "cv",
            Method::Bagging => "bagging",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// AUC on the test holdout.
    pub auc: f64,
    /// Mean scaled distance to the first collection; absent for the ensemble.
    pub distance: Option<f64>,
    pub nodes: usize,
    pub depth: usize,
    /// Normalized Gini importance measured on the training rows.
    pub importance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub rep: usize,
    pub seed: u64,
    pub train_rows: usize,
    pub first_batch_rows: usize,
    pub holdout_rows: usize,
    pub validation_rows: usize,
    pub scored: Vec<ScoredSummary>,
    /// Indices into `scored`, ascending.
    pub frontier: Vec<usize>,
    pub selected: Selected,
    pub cv_best: (usize, usize),
    pub methods: Vec<MethodSummary>,
}

impl RepetitionReport {
    pub fn method(&self, m: Method) -> &MethodSummary {
        self.methods
            .iter()
            .find(|s| s.method == m)
            .expect("every method is reported")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRepetition {
    pub rep: usize,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Stat {
        let (mean, std) = mean_std(values);
        Stat { mean, std }
    }
}

/// One row of the summary table: mean (population std) across repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub repetitions: usize,
    pub auc: Stat,
    /// Distance as a percentage of the bound.
    pub distance_pct: Option<Stat>,
    /// Per-feature std of importance across repetitions, averaged over features.
    pub importance_std: f64,
    /// Number of distinct features that ever ranked in a repetition's top 3.
    pub top3_features: usize,
    pub nodes: Stat,
    pub depth: Stat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n_rows: usize,
    pub feature_names: Vec<String>,
    pub repetitions: Vec<RepetitionReport>,
    pub skipped: Vec<SkippedRepetition>,
    pub aggregate: Vec<AggregateRow>,
    /// Tree chosen by the configured rule in each completed repetition.
    #[serde(skip)]
    pub selected_trees: Vec<DecisionTree>,
}

fn top3(importance: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).filter(|&j| importance[j] > 0.0).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    idx.truncate(3);
    idx
}

/// Summary table recomputed from per-repetition details.
pub fn aggregate(reps: &[RepetitionReport]) -> Vec<AggregateRow> {
    if reps.is_empty() {
        return Vec::new();
    }
    Method::ALL
        .iter()
        .map(|&m| {
            let rows: Vec<&MethodSummary> = reps.iter().map(|r| r.method(m)).collect();
            let col = |f: &dyn Fn(&MethodSummary) -> f64| rows.iter().map(|s| f(s)).collect::<Vec<f64>>();
            let distance_pct = rows
                .iter()
                .map(|s| s.distance.map(|d| 100.0 * d))
                .collect::<Option<Vec<f64>>>()
                .map(|v| Stat::of(&v));
            let p = rows[0].importance.len();
            let importance_std = if p == 0 {
                0.0
            } else {
                (0..p).map(|j| mean_std(&col(&|s| s.importance[j])).1).sum::<f64>() / p as f64
            };
            let top: BTreeSet<usize> = rows.iter().flat_map(|s| top3(&s.importance)).collect();
            AggregateRow {
                method: m,
                repetitions: rows.len(),
                auc: Stat::of(&col(&|s| s.auc)),
                distance_pct,
                importance_std,
                top3_features: top.len(),
                nodes: Stat::of(&col(&|s| s.nodes as f64)),
                depth: Stat::of(&col(&|s| s.depth as f64)),
            }
        })
        .collect()
}

/// Runs one repetition and returns its report plus the selected tree.
pub fn run_repetition(data: &Dataset, cfg: &PipelineConfig, rep: usize) -> Result<(RepetitionReport, DecisionTree)> {
    let seed = rep_seed(cfg, rep);
    let split = split_repetition(data.len(), cfg, rep);
    let train = data.subset(&split.train);
    let first = data.subset(&split.first_batch);
    let holdout = data.subset(&split.holdout);
    let scoring = if split.validation.is_empty() {
        holdout.clone()
    } else {
        data.subset(&split.validation)
    };
    let dist = cfg.distance_config();

    let first_trees = build_collection(&first, &cfg.grid, derive_seed(seed, 1))?;
    let second = build_collection(&train, &cfg.grid, derive_seed(seed, 2))?;
    audit_hygiene(&split, &first_trees, &second)?;

    let mut scored = score_collection(&second, &first_trees.trees, &scoring, &dist, cfg.three_objectives)?;
    let frontier = mark_frontier(&mut scored)?;
    let pick = |rule| select_tree(&scored, &frontier, rule);
    let auc_max = pick(SelectionRule::MaxAuc)?.index;
    let dist_min = pick(SelectionRule::MinDistance)?.index;
    let selected = pick(cfg.selection)?;

    let reference = extract_all(&first_trees.trees, data.space())?;
    let cv = cv_baseline(
        &train,
        &cfg.grid.depths,
        &cfg.grid.min_leaf,
        cfg.cv_folds,
        derive_seed(seed, 3),
    )?;
    let forest_cfg = ForestConfig::random_forest(cfg.forest_trees, cfg.grid.max_depth(), 1, data.n_features());
    let forest = train_forest(&train, &forest_cfg, derive_seed(seed, 4))?;

    let tree_summary = |method: Method, tree: &DecisionTree| -> Result<MethodSummary> {
        let paths = extract_paths(tree, data.space())?;
        Ok(MethodSummary {
            method,
            auc: auc(tree, &holdout)?,
            distance: Some(mean_to(&paths, &reference, data.space(), &dist)?),
            nodes: tree.node_count(),
            depth: tree.depth(),
            importance: gini_importance(tree, &train),
        })
    };
    let largest = forest.largest_tree();
    let methods = vec![
        tree_summary(Method::AucMax, &scored[auc_max].tree)?,
        tree_summary(Method::DistanceMin, &scored[dist_min].tree)?,
        tree_summary(Method::Selected, &scored[selected.index].tree)?,
        tree_summary(Method::Cv, &cv.tree)?,
        MethodSummary {
            method: Method::Bagging,
            auc: auc(&forest, &holdout)?,
            distance: None,
            nodes: largest.node_count(),
            depth: forest.max_depth(),
            importance: forest.gini_importance(&train),
        },
    ];
    let report = RepetitionReport {
        rep,
        seed,
        train_rows: split.train.len(),
        first_batch_rows: split.first_batch.len(),
        holdout_rows: split.holdout.len(),
        validation_rows: split.validation.len(),
        scored: scored.iter().map(|s| s.summary()).collect(),
        frontier,
        selected,
        cv_best: cv.best,
        methods,
    };
    Ok((report, scored[selected.index].tree.clone()))
}

/// No row used for scoring or testing may appear in a bootstrap sample.
fn audit_hygiene(split: &RepSplit, first: &Collection, second: &Collection) -> Result<()> {
    let held: HashSet<usize> = split.holdout.iter().chain(&split.validation).copied().collect();
    let leaks = |rows: &[usize], local: &[usize]| local.iter().any(|&i| held.contains(&rows[i]));
    if first.samples.iter().any(|s| leaks(&split.first_batch, s))
        || second.samples.iter().any(|s| leaks(&split.train, s))
    {
        return Err(Error::Invariant(
            "a held-out row was drawn into a bootstrap sample".into(),
        ));
    }
    Ok(())
}

/// Full procedure over `cfg.repetitions` random splits. Repetitions whose
/// metrics are undefined (e.g. a single-class holdout) are listed in
/// `skipped`; any other failure aborts the run.
pub fn run_pipeline(data: &Dataset, cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    if data.class_count() != 2 {
        return Err(Error::Input(format!(
            "the pipeline scores trees by binary AUC; data has {} classes",
            data.class_count()
        )));
    }
    let outcomes: Vec<Result<(RepetitionReport, DecisionTree)>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(data, cfg, rep))
        .collect();
    let mut report = PipelineReport {
        n_rows: data.len(),
        feature_names: data.space().features().iter().map(|f| f.name.clone()).collect(),
        ..Default::default()
    };
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok((r, tree)) => {
                report.repetitions.push(r);
                report.selected_trees.push(tree);
            }
            Err(Error::Evaluation(reason)) => {
                log::warn!("repetition {rep} skipped: {reason}");
                report.skipped.push(SkippedRepetition { rep, reason });
            }
            Err(e) => return Err(e),
        }
    }
    report.aggregate = aggregate(&report.repetitions);
    Ok(report)
}
