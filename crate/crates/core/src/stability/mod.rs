//! Stability-aware tree selection.
//!
//! A first collection of trees is trained on one batch of the training
//! data, a second collection on all of it. Every second-batch tree is
//! scored by its mean distance to the first collection and by its holdout
//! AUC; the Pareto-optimal trees are kept and one of them is selected.

mod collection;
mod cv;
mod frontier;
mod pipeline;
mod select;

pub use collection::{
    Collection, Grid, ScoredSummary, ScoredTree, build_collection, extract_all, mean_to, score_collection,
};
pub use cv::{CvCell, CvResult, cv_baseline, stratified_folds};
pub use frontier::{Objectives, brute_force as brute_force_frontier, pareto_frontier};
pub use pipeline::{
    AggregateRow, Method, MethodSummary, PipelineConfig, PipelineReport, RepSplit, RepetitionReport, SkippedRepetition,
    Stat, aggregate, run_pipeline, run_repetition, split_repetition,
};
pub use select::{SCORE_TIE, Selected, SelectionRule, select};

/// Marks the frontier members of `scored` and returns their indices.
pub fn mark_frontier(scored: &mut [ScoredTree]) -> crate::Result<Vec<usize>> {
    let points: Vec<Objectives> = scored.iter().map(ScoredTree::objectives).collect();
    let front = pareto_frontier(&points)?;
    for s in scored.iter_mut() {
        s.pareto = false;
    }
    for &i in &front {
        scored[i].pareto = true;
    }
    Ok(front)
}

/// Applies `rule` to the frontier members of `scored`; returns the index
/// into `scored` together with the fallback flag.
pub fn select_tree(scored: &[ScoredTree], frontier: &[usize], rule: SelectionRule) -> crate::Result<Selected> {
    let points: Vec<Objectives> = frontier.iter().map(|&i| scored[i].objectives()).collect();
    let s = select(&points, rule)?;
    Ok(Selected {
        index: frontier[s.index],
        fell_back: s.fell_back,
    })
}
