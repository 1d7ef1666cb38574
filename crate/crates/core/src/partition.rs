//! Splits a tree into agreement groups, one variable at a time, and refines a
//! group into one sub-group per rule instance.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::agreement::RuleInstance;
use crate::deptree::DepTree;
use crate::features::Variable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Top,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementGroup {
    pub variable: Variable,
    /// Node ids in linear order.
    pub members: Vec<usize>,
    pub governor: usize,
    pub source_instances: Vec<usize>,
    pub level: Level,
}

impl AgreementGroup {
    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// Instance members that bear the variable.
fn bearing_members(tree: &DepTree, instance: &RuleInstance, variable: Variable) -> Vec<usize> {
    instance
        .members
        .iter()
        .copied()
        .filter(|&id| tree.node(id).bears(variable))
        .collect()
}

/// Connected components of the graph whose edges join nodes that share an
/// instance constraining `variable`. Singletons are dropped.
pub fn partition(tree: &DepTree, instances: &[RuleInstance], variable: Variable) -> Vec<AgreementGroup> {
    let relevant: Vec<(&RuleInstance, Vec<usize>)> = instances
        .iter()
        .filter(|inst| inst.constrains(variable))
        .map(|inst| (inst, bearing_members(tree, inst, variable)))
        .filter(|(_, members)| members.len() >= 2)
        .collect();

    let mut components = UnionFind::<usize>::new(tree.len() + 1);
    for (_, members) in &relevant {
        for pair in members.windows(2) {
            components.union(pair[0], pair[1]);
        }
    }

    let mut by_root: BTreeMap<usize, (BTreeSet<usize>, Vec<&RuleInstance>)> = BTreeMap::new();
    for (inst, members) in &relevant {
        let entry = by_root.entry(components.find(members[0])).or_default();
        entry.0.extend(members.iter().copied());
        entry.1.push(inst);
    }

    let mut groups: Vec<AgreementGroup> = by_root
        .into_values()
        .map(|(members, insts)| {
            let governor = insts
                .iter()
                .filter(|inst| members.contains(&inst.governor))
                .min_by_key(|inst| (tree.depth(inst.governor), inst.id))
                .map(|inst| inst.governor)
                .unwrap_or_else(|| *members.iter().next().unwrap());
            AgreementGroup {
                variable,
                members: members.into_iter().collect(),
                governor,
                source_instances: insts.iter().map(|inst| inst.id).collect(),
                level: Level::Top,
            }
        })
        .collect();
    groups.sort_by_key(|g| g.members[0]);
    groups
}

/// One sub-group per source instance of a top group.
pub fn subpartition(tree: &DepTree, group: &AgreementGroup, instances: &[RuleInstance]) -> Vec<AgreementGroup> {
    group
        .source_instances
        .iter()
        .filter_map(|&id| instances.iter().find(|inst| inst.id == id))
        .map(|inst| {
            let members: Vec<usize> = bearing_members(tree, inst, group.variable)
                .into_iter()
                .filter(|&m| group.contains(m))
                .collect();
            let governor = if members.contains(&inst.governor) { inst.governor } else { members[0] };
            AgreementGroup {
                variable: group.variable,
                members,
                governor,
                source_instances: vec![inst.id],
                level: Level::Sub,
            }
        })
        .filter(|g| g.members.len() >= 2)
        .collect()
}

/// Nodes shared by at least two sub-groups, most shared first, then by id.
pub fn pivot_nodes(subgroups: &[AgreementGroup]) -> Vec<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for g in subgroups {
        for &m in &g.members {
            *counts.entry(m).or_default() += 1;
        }
    }
    let mut shared: Vec<(usize, usize)> = counts.into_iter().filter(|&(_, c)| c >= 2).collect();
    shared.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    shared.into_iter().map(|(id, _)| id).collect()
}
