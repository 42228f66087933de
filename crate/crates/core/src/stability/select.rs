use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::frontier::Objectives;
use crate::error::{Error, Result};

/// Absolute tolerance under which two selection scores count as tied.
pub const SCORE_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    MaxAuc,
    MinDistance,
    /// Most stable tree whose AUC is within a `ε` fraction of the best.
    EpsilonConstrained(f64),
    Balanced,
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionRule::MaxAuc => f.write_str("max_auc"),
            SelectionRule::MinDistance => f.write_str("min_distance"),
            SelectionRule::EpsilonConstrained(e) => write!(f, "epsilon:{e}"),
            SelectionRule::Balanced => f.write_str("balanced"),
        }
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "max_auc" | "auc" => Ok(SelectionRule::MaxAuc),
            "min_distance" | "distance" => Ok(SelectionRule::MinDistance),
            "balanced" => Ok(SelectionRule::Balanced),
            _ => {
                let eps = norm
                    .strip_prefix("epsilon:")
                    .or_else(|| norm.strip_prefix("epsilon_constrained:"))
                    .ok_or_else(|| Error::Config(format!("unknown selection rule '{s}'")))?;
                let e: f64 = eps
                    .parse()
                    .map_err(|_| Error::Config(format!("bad epsilon in '{s}'")))?;
                if !e.is_finite() {
                    return Err(Error::Config(format!("epsilon must be finite, got {e}")));
                }
                Ok(SelectionRule::EpsilonConstrained(e))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    /// Position within the candidate slice.
    pub index: usize,
    /// Set when no candidate met the AUC constraint and the highest-AUC
    /// candidate was taken instead.
    pub fell_back: bool,
}

/// Picks the candidate maximizing the rule's score. Near-equal scores are
/// broken by lower distance, then by lower position.
pub fn select(candidates: &[Objectives], rule: SelectionRule) -> Result<Selected> {
    if candidates.is_empty() {
        return Err(Error::Input("cannot select from an empty frontier".into()));
    }
    let scores: Vec<Option<f64>> = match rule {
        SelectionRule::MaxAuc => candidates.iter().map(|c| Some(c.auc)).collect(),
        SelectionRule::MinDistance => candidates.iter().map(|c| Some(-c.distance)).collect(),
        SelectionRule::Balanced => candidates.iter().map(|c| Some((-c.distance + c.auc) / 2.0)).collect(),
        SelectionRule::EpsilonConstrained(eps) => {
            let max_auc = candidates.iter().map(|c| c.auc).fold(f64::NEG_INFINITY, f64::max);
            let floor = (1.0 - eps) * max_auc;
            candidates
                .iter()
                .map(|c| (c.auc >= floor - SCORE_TIE).then_some(1.0 - c.distance))
                .collect()
        }
    };
    match argmax(candidates, &scores) {
        Some(index) => Ok(Selected {
            index,
            fell_back: false,
        }),
        None => {
            let all: Vec<Option<f64>> = candidates.iter().map(|c| Some(c.auc)).collect();
            Ok(Selected {
                index: argmax(candidates, &all).expect("non-empty"),
                fell_back: true,
            })
        }
    }
}

fn argmax(candidates: &[Objectives], scores: &[Option<f64>]) -> Option<usize> {
    let best = scores.iter().flatten().copied().reduce(f64::max)?;
    (0..candidates.len())
        .filter(|&i| scores[i].is_some_and(|s| s >= best - SCORE_TIE))
        .min_by(|&a, &b| {
            candidates[a]
                .distance
                .total_cmp(&candidates[b].distance)
                .then(a.cmp(&b))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> Vec<Objectives> {
        vec![Objectives::new(0.1, 0.8), Objectives::new(0.2, 0.9)]
    }

    #[test]
    fn rules_on_the_worked_example() {
        let f = pair();
        assert_eq!(select(&f, SelectionRule::MaxAuc).unwrap().index, 1);
        assert_eq!(select(&f, SelectionRule::MinDistance).unwrap().index, 0);
        assert_eq!(select(&f, SelectionRule::EpsilonConstrained(0.2)).unwrap().index, 0);
        // both balanced scores are 0.35, lower distance wins
        assert_eq!(select(&f, SelectionRule::Balanced).unwrap().index, 0);
        // ε small enough that only the top tree qualifies
        assert_eq!(select(&f, SelectionRule::EpsilonConstrained(0.05)).unwrap().index, 1);
    }

    #[test]
    fn single_candidate_under_every_rule() {
        let f = [Objectives::new(0.3, 0.6)];
        for r in [
            SelectionRule::MaxAuc,
            SelectionRule::MinDistance,
            SelectionRule::Balanced,
            SelectionRule::EpsilonConstrained(0.1),
        ] {
            assert_eq!(
                select(&f, r).unwrap(),
                Selected {
                    index: 0,
                    fell_back: false
                }
            );
        }
    }

    #[test]
    fn negative_epsilon_falls_back() {
        let s = select(&pair(), SelectionRule::EpsilonConstrained(-0.5)).unwrap();
        assert_eq!(
            s,
            Selected {
                index: 1,
                fell_back: true
            }
        );
    }

    #[test]
    fn parse_rules() {
        assert_eq!(
            "epsilon:0.05".parse::<SelectionRule>().unwrap(),
            SelectionRule::EpsilonConstrained(0.05)
        );
        assert_eq!("max-auc".parse::<SelectionRule>().unwrap(), SelectionRule::MaxAuc);
        assert_eq!("balanced".parse::<SelectionRule>().unwrap(), SelectionRule::Balanced);
        assert!("epsilon:x".parse::<SelectionRule>().is_err());
        assert!("best".parse::<SelectionRule>().is_err());
        for r in [SelectionRule::MinDistance, SelectionRule::EpsilonConstrained(0.25)] {
            assert_eq!(r.to_string().parse::<SelectionRule>().unwrap(), r);
        }
    }
}
