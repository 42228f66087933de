//! Pareto frontier over (distance ↓, AUC ↑[, interpretability cost ↓]).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub distance: f64,
    pub auc: f64,
    /// Optional third objective, minimized.
    pub cost: Option<f64>,
}

impl Objectives {
    pub fn new(distance: f64, auc: f64) -> Self {
        Objectives {
            distance,
            auc,
            cost: None,
        }
    }

    /// True when `self` dominates `other`: no worse in every objective and
    /// strictly better in at least one. In two objectives this is the
    /// condition `(d' ≤ d and α' > α) or (d' < d and α' ≥ α)`.
    pub fn dominates(&self, other: &Objectives) -> bool {
        let mut weak = self.distance <= other.distance && self.auc >= other.auc;
        let mut strict = self.distance < other.distance || self.auc > other.auc;
        if let (Some(a), Some(b)) = (self.cost, other.cost) {
            weak &= a <= b;
            strict |= a < b;
        }
        weak && strict
    }
}

fn check(points: &[Objectives]) -> Result<bool> {
    if points.is_empty() {
        return Err(Error::Input("cannot take the frontier of an empty set".into()));
    }
    let three = points[0].cost.is_some();
    for p in points {
        if p.cost.is_some() != three {
            return Err(Error::Input("points mix two and three objectives".into()));
        }
        if p.distance.is_nan() || p.auc.is_nan() || p.cost.is_some_and(f64::is_nan) {
            return Err(Error::Input("objective value is NaN".into()));
        }
    }
    Ok(three)
}

/// Indices of the non-dominated points, ascending. Exact duplicates do not
/// dominate each other, so all copies of a frontier point are kept.
pub fn pareto_frontier(points: &[Objectives]) -> Result<Vec<usize>> {
    if check(points)? {
        return Ok(brute_force(points));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .distance
            .partial_cmp(&points[b].distance)
            .unwrap_or(Ordering::Equal)
            .then(points[b].auc.partial_cmp(&points[a].auc).unwrap_or(Ordering::Equal))
    });
    // Sweep groups of equal distance. Inside a group only the top AUC
    // survives; a group survives only if it beats every smaller distance.
    let mut keep = Vec::new();
    let mut best_auc = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let d = points[order[i]].distance;
        let top = points[order[i]].auc;
        let mut j = i;
        while j < order.len() && points[order[j]].distance == d {
            if points[order[j]].auc == top && top > best_auc {
                keep.push(order[j]);
            }
            j += 1;
        }
        best_auc = best_auc.max(top);
        i = j;
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Quadratic dominance filter; the reference the sweep is checked against.
pub fn brute_force(points: &[Objectives]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| q.dominates(&points[i])))
        .collect()
}
