//! Agreement rule catalog, rule-instance extraction and the two checkers:
//! set intersection over a whole group, and the governor/dependant pair check
//! it replaces (kept as the reference oracle).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deptree::{precedes, DepNode, DepTree};
use crate::features::{Category, DepRel, ValueSet, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("node {node} does not bear {variable}")]
    MissingVariable { node: usize, variable: Variable },
    #[error("empty group")]
    EmptyGroup,
}

/// The closed rule table. Adding a rule means adding a variant and a clause in
/// [`rule_instances`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    /// Determiners and adjectives agree with their noun.
    #[serde(rename = "R1_np_internal")]
    NpInternal,
    /// A finite verb agrees with its subject.
    #[serde(rename = "R2_subj_verb")]
    SubjVerb,
    /// An auxiliary inside a relative clause agrees with its subject.
    #[serde(rename = "R3_subj_aux")]
    SubjAux,
    /// A past participle with *avoir* agrees with a preceding direct object.
    #[serde(rename = "R4_ppart_avoir_preceding_obj")]
    PPartPrecedingObj,
    /// A relative pronoun takes the features of its antecedent.
    #[serde(rename = "R5_relpron_link")]
    RelPronLink,
}

impl RuleId {
    pub fn code(self) -> &'static str {
        match self {
            RuleId::NpInternal => "R1_np_internal",
            RuleId::SubjVerb => "R2_subj_verb",
            RuleId::SubjAux => "R3_subj_aux",
            RuleId::PPartPrecedingObj => "R4_ppart_avoir_preceding_obj",
            RuleId::RelPronLink => "R5_relpron_link",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleInstance {
    /// Position in the list returned by [`rule_instances`].
    pub id: usize,
    pub rule: RuleId,
    pub variables: Vec<Variable>,
    pub members: BTreeSet<usize>,
    pub governor: usize,
}

impl RuleInstance {
    pub fn constrains(&self, variable: Variable) -> bool {
        self.variables.contains(&variable)
    }
}

/// Antecedent of a relative pronoun: the governor of the enclosing relative
/// clause.
pub fn antecedent(tree: &DepTree, relpron: usize) -> Option<usize> {
    tree.path_to_root(relpron)
        .into_iter()
        .find(|&id| tree.node(id).deprel == DepRel::RelCl)
        .map(|clause| tree.node(clause).head)
        .filter(|&head| head != 0)
}

/// Features flow through relative pronouns: agreement targets the antecedent.
fn resolve(tree: &DepTree, id: usize) -> usize {
    if tree.node(id).category == Category::RelPron {
        antecedent(tree, id).unwrap_or(id)
    } else {
        id
    }
}

fn in_relative_clause(tree: &DepTree, id: usize) -> bool {
    tree.path_to_root(id)
        .into_iter()
        .any(|n| tree.node(n).deprel == DepRel::RelCl)
}

fn first_child(tree: &DepTree, id: usize, deprel: DepRel) -> Option<&DepNode> {
    tree.children(id).find(|c| c.deprel == deprel)
}

/// Every instance of the rule catalog in the tree, grouped by rule (noun
/// phrase, participle, subject-verb, subject-auxiliary, relative link) and in
/// node order within a rule.
pub fn rule_instances(tree: &DepTree) -> Vec<RuleInstance> {
    let np = [Variable::Number, Variable::Gender];
    let verbal = [Variable::Number, Variable::Person];
    let mut found: Vec<(RuleId, Vec<Variable>, BTreeSet<usize>, usize)> = Vec::new();

    for noun in tree.nodes.iter().filter(|n| n.category == Category::Noun) {
        let deps: Vec<usize> = tree
            .children(noun.id)
            .filter(|c| {
                matches!(
                    (c.deprel, c.category),
                    (DepRel::Det, Category::Det) | (DepRel::Adj, Category::Adj)
                )
            })
            .map(|c| c.id)
            .collect();
        if !deps.is_empty() {
            let members = deps.into_iter().chain([noun.id]).collect();
            found.push((RuleId::NpInternal, np.to_vec(), members, noun.id));
        }
    }

    for part in tree.nodes.iter().filter(|n| n.category == Category::PastPart) {
        let Some(aux) = tree.parent(part.id) else { continue };
        if part.deprel != DepRel::PPart || aux.category != Category::Aux || aux.lemma != "avoir" {
            continue;
        }
        let object = first_child(tree, part.id, DepRel::Obj).or_else(|| first_child(tree, aux.id, DepRel::Obj));
        let Some(object) = object else { continue };
        if !precedes(object, part) {
            continue;
        }
        let target = resolve(tree, object.id);
        if target != part.id {
            found.push((RuleId::PPartPrecedingObj, np.to_vec(), BTreeSet::from([target, part.id]), target));
        }
    }

    for verb in tree.nodes.iter().filter(|n| n.category == Category::Verb) {
        if let Some(subj) = first_child(tree, verb.id, DepRel::Subj) {
            let subj = resolve(tree, subj.id);
            if subj != verb.id {
                found.push((RuleId::SubjVerb, verbal.to_vec(), BTreeSet::from([subj, verb.id]), verb.id));
            }
        }
    }

    for aux in tree.nodes.iter().filter(|n| n.category == Category::Aux) {
        if !in_relative_clause(tree, aux.id) {
            continue;
        }
        if let Some(subj) = first_child(tree, aux.id, DepRel::Subj) {
            let subj = resolve(tree, subj.id);
            if subj != aux.id {
                found.push((RuleId::SubjAux, verbal.to_vec(), BTreeSet::from([subj, aux.id]), aux.id));
            }
        }
    }

    for rel in tree.nodes.iter().filter(|n| n.category == Category::RelPron) {
        if let Some(ante) = antecedent(tree, rel.id) {
            let variables = tree.node(ante).features.variables().collect();
            found.push((RuleId::RelPronLink, variables, BTreeSet::from([ante, rel.id]), ante));
        }
    }

    found
        .into_iter()
        .enumerate()
        .map(|(id, (rule, variables, members, governor))| RuleInstance {
            id,
            rule,
            variables,
            members,
            governor,
        })
        .collect()
}

/// Outcome of unifying a group's values for one variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "values", rename_all = "snake_case")]
pub enum GroupCheck {
    Consistent(ValueSet),
    Inconsistent,
}

impl GroupCheck {
    pub fn is_consistent(&self) -> bool {
        matches!(self, GroupCheck::Consistent(_))
    }
}

/// Intersects the members' value sets. Every member must bear the variable.
pub fn check_group(
    tree: &DepTree,
    members: impl IntoIterator<Item = usize>,
    variable: Variable,
) -> Result<GroupCheck, AgreementError> {
    let mut acc: Option<ValueSet> = None;
    for id in members {
        let values = tree
            .node(id)
            .features
            .get(variable)
            .ok_or(AgreementError::MissingVariable { node: id, variable })?;
        acc = Some(match acc {
            None => values.clone(),
            Some(prev) => prev.intersection(values).copied().collect(),
        });
    }
    match acc {
        None => Err(AgreementError::EmptyGroup),
        Some(set) if set.is_empty() => Ok(GroupCheck::Inconsistent),
        Some(set) => Ok(GroupCheck::Consistent(set)),
    }
}

/// Pairwise check between a governor and one dependant. A node lacking the
/// variable never agrees.
pub fn check_pair(governor: &DepNode, dependant: &DepNode, variable: Variable) -> bool {
    match (governor.features.get(variable), dependant.features.get(variable)) {
        (Some(g), Some(d)) => !g.is_disjoint(d),
        _ => false,
    }
}

/// The pairwise checker over a set of members: every (governor, dependant)
/// pair that fails.
pub fn failing_pairs(
    tree: &DepTree,
    governor: usize,
    members: &BTreeSet<usize>,
    variable: Variable,
) -> Vec<(usize, usize)> {
    members
        .iter()
        .filter(|&&m| m != governor)
        .filter(|&&m| !check_pair(tree.node(governor), tree.node(m), variable))
        .map(|&m| (governor, m))
        .collect()
}
