//! Reference implementations the acceptance criteria are checked against.
//! They are written from the definitions, not from the library code.

#![allow(dead_code)]

use treestab_core::{FeatureKind, FeatureRange, FeatureSpace, PathSet, TreePath};

pub fn verdict(id: u32, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Summed per-feature disagreement plus λ for a label mismatch.
pub fn path_distance(p: &TreePath, q: &TreePath, space: &FeatureSpace, lambda: f64) -> f64 {
    let mut d = 0.0;
    for (j, f) in space.features().iter().enumerate() {
        match (&f.kind, p.range(j), q.range(j)) {
            (
                FeatureKind::Numeric { lower, upper },
                FeatureRange::Interval { lower: lp, upper: up },
                FeatureRange::Interval { lower: lq, upper: uq },
            ) => d += ((up - uq).abs() + (lp - lq).abs()) / (2.0 * (upper - lower)),
            (FeatureKind::Categorical { cardinality }, FeatureRange::Categories(a), FeatureRange::Categories(b)) => {
                let differ = (0..*cardinality).filter(|&c| a.contains(c) != b.contains(c)).count();
                d += differ as f64 / *cardinality as f64;
            }
            _ => panic!("path does not match the space"),
        }
    }
    if p.label() != q.label() {
        d += lambda;
    }
    d
}

/// Share of each restricted feature range the path keeps, summed.
pub fn path_weight(p: &TreePath, space: &FeatureSpace) -> f64 {
    let mut w = 0.0;
    for (j, f) in space.features().iter().enumerate() {
        match (&f.kind, p.range(j)) {
            (FeatureKind::Numeric { lower, upper }, FeatureRange::Interval { lower: l, upper: u }) => {
                if l != lower || u != upper {
                    w += (u - l) / (upper - lower);
                }
            }
            (FeatureKind::Categorical { cardinality }, FeatureRange::Categories(m)) => {
                let kept = (0..*cardinality).filter(|&c| m.contains(c)).count();
                if kept != *cardinality {
                    w += kept as f64 / *cardinality as f64;
                }
            }
            _ => panic!("path does not match the space"),
        }
    }
    w
}

/// Minimum over every injective assignment of the smaller set's paths into
/// the larger set's; larger-set paths left over are charged their weight.
pub fn brute_force_distance(a: &PathSet, b: &PathSet, space: &FeatureSpace, lambda: f64) -> f64 {
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut used = vec![false; big.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        big: &PathSet,
        small: &PathSet,
        space: &FeatureSpace,
        lambda: f64,
        used: &mut [bool],
        best: &mut f64,
        acc: f64,
    ) {
        if k == small.len() {
            let rest: f64 = (0..big.len())
                .filter(|&i| !used[i])
                .map(|i| path_weight(&big.paths[i], space))
                .sum();
            *best = best.min(acc + rest);
            return;
        }
        for i in 0..big.len() {
            if !used[i] {
                used[i] = true;
                let c = path_distance(&big.paths[i], &small.paths[k], space, lambda);
                rec(k + 1, big, small, space, lambda, used, best, acc + c);
                used[i] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, big, small, space, lambda, &mut used, &mut best, 0.0);
    best
}

/// `(d, α)` points: index `i` is dominated when another point is no worse
/// in both and strictly better in one.
pub fn non_dominated(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (d, a) = points[i];
            !points
                .iter()
                .any(|&(d2, a2)| (d2 <= d && a2 > a) || (d2 < d && a2 >= a))
        })
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
