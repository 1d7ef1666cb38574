//! Correction criteria and confidence vectors.
//!
//! For a candidate value of a group's variable, with weights K:
//!
//! * (a) `K_a * (1 + kept) / (1 + corrected)` favours touching few words;
//! * (b) `K_b / (1 + phonetic alterations)` favours corrections that sound
//!   like what was written;
//! * (c) `K_c` when every corrected word only gains letters (a forgotten *s*),
//!   else 0;
//! * (d) `K_d` when the group's governor already carries the value, else 0.
//!
//! A zero means the criterion could not speak for that candidate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::deptree::DepTree;
use crate::features::{Value, Variable};
use crate::lexicon::LexEntry;
use crate::partition::AgreementGroup;
use crate::profile::{Criterion, Weights};

/// Two scores closer than this are treated as equal when picking winners.
pub const TIE_EPSILON: f64 = 1e-9;

/// One way of making a group agree: every member either already admits
/// `value` (kept) or is regenerated (corrected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub variable: Variable,
    pub value: Value,
    pub corrected: Vec<usize>,
    pub kept: Vec<usize>,
    pub new_forms: BTreeMap<usize, LexEntry>,
    pub phonetic_alterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Scores {
    pub fn get(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::A => self.a,
            Criterion::B => self.b,
            Criterion::C => self.c,
            Criterion::D => self.d,
        }
    }

    pub fn sum(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector {
    pub value: Value,
    pub scores: Scores,
    pub sum: f64,
    pub percentage: f64,
}

pub fn criterion_a(candidate: &Candidate, k_a: f64) -> f64 {
    k_a * (1.0 + candidate.kept.len() as f64) / (1.0 + candidate.corrected.len() as f64)
}

pub fn criterion_b(candidate: &Candidate, k_b: f64) -> f64 {
    k_b / (1.0 + f64::from(candidate.phonetic_alterations))
}

pub fn criterion_c(tree: &DepTree, candidate: &Candidate, k_c: f64) -> f64 {
    if candidate.corrected.is_empty() {
        return 0.0;
    }
    let only_additions = candidate.corrected.iter().all(|id| {
        let current = &tree.node(*id).surface;
        candidate
            .new_forms
            .get(id)
            .is_some_and(|e| e.surface.len() > current.len() && e.surface.starts_with(current.as_str()))
    });
    if only_additions {
        k_c
    } else {
        0.0
    }
}

/// `values` are all candidate values of the group: a governor admitting every
/// one of them cannot discriminate.
pub fn criterion_d(tree: &DepTree, group: &AgreementGroup, candidate: &Candidate, values: &[Value], k_d: f64) -> f64 {
    let Some(set) = tree.node(group.governor).features.get(group.variable) else {
        return 0.0;
    };
    if values.iter().all(|v| set.contains(v)) {
        return 0.0;
    }
    if set.contains(&candidate.value) {
        k_d
    } else {
        0.0
    }
}

pub fn scores(tree: &DepTree, group: &AgreementGroup, candidate: &Candidate, values: &[Value], weights: &Weights) -> Scores {
    Scores {
        a: criterion_a(candidate, weights.a),
        b: criterion_b(candidate, weights.b),
        c: criterion_c(tree, candidate, weights.c),
        d: criterion_d(tree, group, candidate, values, weights.d),
    }
}

/// Scores every candidate and normalizes the sums into percentages.
pub fn confidence_vectors(
    tree: &DepTree,
    group: &AgreementGroup,
    candidates: &[Candidate],
    weights: &Weights,
) -> Vec<ConfidenceVector> {
    let values: Vec<Value> = candidates.iter().map(|c| c.value).collect();
    let mut vectors: Vec<ConfidenceVector> = candidates
        .iter()
        .map(|c| {
            let scores = scores(tree, group, c, &values, weights);
            ConfidenceVector { value: c.value, sum: scores.sum(), scores, percentage: 0.0 }
        })
        .collect();
    let total: f64 = vectors.iter().map(|v| v.sum).sum();
    let n = vectors.len() as f64;
    for v in &mut vectors {
        v.percentage = if total > 0.0 { 100.0 * v.sum / total } else { 100.0 / n };
    }
    vectors
}

/// The unique maximizer of `score`, or `None` on a tie or when every score is
/// zero.
pub fn argmax_by(items: impl IntoIterator<Item = (Value, f64)>) -> Option<Value> {
    let mut best: Option<(Value, f64)> = None;
    let mut tied = false;
    for (value, score) in items {
        match best {
            None => best = Some((value, score)),
            Some((_, b)) if score > b + TIE_EPSILON => {
                best = Some((value, score));
                tied = false;
            }
            Some((_, b)) if (score - b).abs() <= TIE_EPSILON => tied = true,
            _ => {}
        }
    }
    match best {
        Some((v, s)) if !tied && s > TIE_EPSILON => Some(v),
        _ => None,
    }
}

/// Which candidate each criterion would pick on its own, with scores summed
/// over all sub-groups of a group.
pub fn standalone_verdicts(subgroup_vectors: &[Vec<ConfidenceVector>]) -> [Option<Value>; 4] {
    let mut verdicts = [None; 4];
    for criterion in Criterion::ALL {
        let mut totals: BTreeMap<Value, f64> = BTreeMap::new();
        for vectors in subgroup_vectors {
            for v in vectors {
                *totals.entry(v.value).or_default() += v.scores.get(criterion);
            }
        }
        verdicts[criterion.index()] = argmax_by(totals);
    }
    verdicts
}
