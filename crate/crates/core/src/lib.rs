//! Detection and weighted correction of agreement errors (gender, number,
//! person) in dependency-parsed French sentences.
//!
//! The pipeline: [`agreement::rule_instances`] extracts the agreement rules
//! that apply to a tree, [`partition`] groups the words they tie together,
//! [`heuristics`] scores each way of fixing a group, and [`corrector`]
//! aggregates, decides between correcting automatically and asking the user,
//! and re-checks until the tree is consistent. [`profile`] holds the weights
//! and threshold that adapt to the user's answers.

pub mod agreement;
pub mod cli;
pub mod corrector;
pub mod deptree;
pub mod features;
pub mod heuristics;
pub mod lexicon;
pub mod partition;
pub mod profile;
pub mod service;

pub use agreement::{check_group, check_pair, rule_instances, GroupCheck, RuleId, RuleInstance};
pub use corrector::{
    correct_tree, diagnose, rank_forest, AnswerSource, AutoPolicy, CorrectionReport, CorrectionRun, Diagnosis,
    Evaluation, Question, ScriptedAnswers, StrictPolicy,
};
pub use deptree::{parse_treebank, serialize_treebank, DepNode, DepTree};
pub use features::{Category, DepRel, Features, Value, Variable};
pub use lexicon::{LexEntry, Lexicon};
pub use partition::{partition, pivot_nodes, subpartition, AgreementGroup};
pub use profile::{default_profile, Criterion, Profile, Strategy, Weights};
