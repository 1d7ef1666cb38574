//! Candidate generation, sub-group aggregation, the auto-correct/ask decision,
//! question phrasing, correction application and the re-checking loop.

use std::collections::{BTreeMap, VecDeque};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::{check_group, rule_instances, AgreementError, GroupCheck, RuleInstance};
use crate::deptree::DepTree;
use crate::features::{Assignment, Value, ValueSet, Variable};
use crate::heuristics::{argmax_by, confidence_vectors, standalone_verdicts, Candidate, ConfidenceVector, TIE_EPSILON};
use crate::lexicon::{phonetic_alteration, InflectError, LexEntry, Lexicon};
use crate::partition::{partition, pivot_nodes, subpartition, AgreementGroup};
use crate::profile::{Profile, Strategy, WeightUpdate};

/// Full re-check passes before a run is declared oscillating.
pub const MAX_PASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectorError {
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Inflect(#[from] InflectError),
    #[error("no question is pending")]
    NoPendingQuestion,
    #[error("question `{given}` is not the pending question `{pending}`")]
    StaleQuestion { pending: String, given: String },
    #[error("`{0}` is not one of the question's options")]
    InvalidChoice(Value),
}

/// Agreed value sets per variable and node, taken from the consistent
/// agreement groups of a tree. Used to pick, say, the gender of *les* when
/// regenerating it in the singular.
#[derive(Debug, Clone, Default)]
pub struct Consensus(BTreeMap<(Variable, usize), ValueSet>);

impl Consensus {
    pub fn of(tree: &DepTree, instances: &[RuleInstance]) -> Self {
        let mut map = BTreeMap::new();
        for variable in Variable::ALL {
            for group in partition(tree, instances, variable) {
                if let Ok(GroupCheck::Consistent(set)) = check_group(tree, group.members.iter().copied(), variable) {
                    for &m in &group.members {
                        map.insert((variable, m), set.clone());
                    }
                }
            }
        }
        Consensus(map)
    }

    pub fn get(&self, variable: Variable, node: usize) -> Option<&ValueSet> {
        self.0.get(&(variable, node))
    }
}

/// Regenerates one word with `variable = value`, keeping its other features.
/// Ambiguous other features are narrowed by the consensus; every remaining
/// reading must give the same spelling.
pub fn regenerate(
    tree: &DepTree,
    lexicon: &Lexicon,
    consensus: &Consensus,
    node: usize,
    variable: Variable,
    value: Value,
) -> Result<LexEntry, InflectError> {
    let word = tree.node(node);
    let others: Vec<Vec<(Variable, Value)>> = word
        .features
        .iter()
        .filter(|(var, _)| *var != variable)
        .map(|(var, set)| {
            let narrowed: ValueSet = match consensus.get(var, node) {
                Some(agreed) if set.len() > 1 => set.intersection(agreed).copied().collect(),
                _ => set.clone(),
            };
            let options = if narrowed.is_empty() { set.clone() } else { narrowed };
            options.into_iter().map(|v| (var, v)).collect()
        })
        .collect();

    let mut found: Option<&LexEntry> = None;
    let mut last_err = None;
    let readings: Vec<Vec<(Variable, Value)>> = if others.is_empty() {
        vec![vec![]]
    } else {
        others.into_iter().multi_cartesian_product().collect()
    };
    for reading in readings {
        let mut target: Assignment = reading.into_iter().collect();
        target.insert(variable, value);
        match lexicon.inflect(&word.lemma, word.category, &target) {
            Ok(entry) => match found {
                Some(prev) if prev.surface != entry.surface => {
                    return Err(InflectError::Ambiguous {
                        lemma: word.lemma.clone(),
                        category: word.category,
                        target: format!("{variable}={value}"),
                        surfaces: vec![prev.surface.clone(), entry.surface.clone()],
                    })
                }
                Some(_) => {}
                None => found = Some(entry),
            },
            Err(e) => last_err = Some(e),
        }
    }
    match found {
        Some(entry) => Ok(entry.clone()),
        None => Err(last_err.expect("at least one reading")),
    }
}

fn alteration(tree: &DepTree, lexicon: &Lexicon, node: usize, after: &LexEntry) -> u32 {
    let word = tree.node(node);
    match lexicon.lookup(&word.surface, &word.lemma, word.category, &word.features) {
        Some(before) => phonetic_alteration(before, after),
        // a form missing from the lexicon cannot be shown to sound the same
        None => 1,
    }
}

/// The candidate for one value, or the generation error that rules it out.
pub fn candidate_for(
    tree: &DepTree,
    group: &AgreementGroup,
    lexicon: &Lexicon,
    consensus: &Consensus,
    value: Value,
) -> Result<Candidate, CorrectorError> {
    let variable = group.variable;
    let mut corrected = Vec::new();
    let mut kept = Vec::new();
    let mut new_forms = BTreeMap::new();
    let mut alterations = 0;
    for &m in &group.members {
        let node = tree.node(m);
        if !node.bears(variable) {
            return Err(AgreementError::MissingVariable { node: m, variable }.into());
        }
        if node.features.admits(value) {
            kept.push(m);
        } else {
            let entry = regenerate(tree, lexicon, consensus, m, variable, value)?;
            alterations += alteration(tree, lexicon, m, &entry);
            corrected.push(m);
            new_forms.insert(m, entry);
        }
    }
    Ok(Candidate { variable, value, corrected, kept, new_forms, phonetic_alterations: alterations })
}

/// Candidates over `values`; values some member cannot take are dropped.
pub fn candidates_for(
    tree: &DepTree,
    group: &AgreementGroup,
    lexicon: &Lexicon,
    consensus: &Consensus,
    values: impl IntoIterator<Item = Value>,
) -> Result<Vec<Candidate>, CorrectorError> {
    let mut out = Vec::new();
    for value in values {
        match candidate_for(tree, group, lexicon, consensus, value) {
            Ok(c) => out.push(c),
            Err(CorrectorError::Inflect(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One candidate per feasible value of the group's variable. A consistent
/// group only gets its current values.
pub fn candidates(tree: &DepTree, group: &AgreementGroup, lexicon: &Lexicon) -> Result<Vec<Candidate>, CorrectorError> {
    let consensus = Consensus::of(tree, &rule_instances(tree));
    let values: Vec<Value> = match check_group(tree, group.members.iter().copied(), group.variable)? {
        GroupCheck::Consistent(set) => set.into_iter().collect(),
        GroupCheck::Inconsistent => group.variable.domain().to_vec(),
    };
    candidates_for(tree, group, lexicon, &consensus, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub strategy: Strategy,
    pub totals: BTreeMap<Value, f64>,
    /// `None` on a tie.
    pub winner: Option<Value>,
    pub margin: f64,
}

/// Combines per-sub-group vectors into a whole-group verdict.
pub fn aggregate(subgroup_vectors: &[Vec<ConfidenceVector>], strategy: Strategy) -> AggregateResult {
    let mut totals: BTreeMap<Value, f64> = BTreeMap::new();
    for vectors in subgroup_vectors {
        for v in vectors {
            totals.entry(v.value).or_insert(0.0);
        }
        match strategy {
            Strategy::Simple => {
                if let Some(best) = argmax_by(vectors.iter().map(|v| (v.value, v.sum))) {
                    *totals.entry(best).or_default() += 1.0;
                }
            }
            Strategy::Proportional => {
                for v in vectors {
                    *totals.entry(v.value).or_default() += v.sum;
                }
            }
            Strategy::WeightedProportional => {
                for v in vectors {
                    *totals.entry(v.value).or_default() += v.percentage;
                }
            }
        }
    }
    let mut ranked: Vec<f64> = totals.values().copied().collect();
    ranked.sort_by(|a, b| b.total_cmp(a));
    let margin = match ranked.as_slice() {
        [] => 0.0,
        [only] => *only,
        [best, second, ..] => best - second,
    };
    AggregateResult { strategy, winner: argmax_by(totals.iter().map(|(v, t)| (*v, *t))), totals, margin }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Verdict {
    AlreadyConsistent,
    AutoCorrect(Value),
    AskUser,
    Unresolvable,
}

/// Auto-correct when only one value is feasible or the winner's margin exceeds
/// the threshold; otherwise ask.
pub fn decide(consistent: bool, candidates: &[Candidate], result: &AggregateResult, profile: &Profile) -> Verdict {
    if consistent {
        return Verdict::AlreadyConsistent;
    }
    match candidates {
        [] => Verdict::Unresolvable,
        [only] => Verdict::AutoCorrect(only.value),
        _ => match result.winner {
            Some(winner) if result.margin > profile.threshold => Verdict::AutoCorrect(winner),
            _ => Verdict::AskUser,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub value: Value,
    pub text: String,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub variable: Variable,
    /// The sentence as written.
    pub sentence: String,
    /// The sentence with the group's words in brackets.
    pub highlighted: String,
    pub pivot: usize,
    pub options: Vec<QuestionOption>,
}

impl Question {
    pub fn prompt(&self) -> String {
        let options = self.options.iter().map(|o| o.text.as_str()).collect::<Vec<_>>().join(" or ");
        format!("In the sentence: {}\nDid you want to say {} ?", self.sentence, options)
    }
}

/// Article used to present a pivot word in a question. `plural` only matters
/// for gender questions, where a plural pivot takes *des*.
pub fn article(value: Value, gender: Value, plural: bool) -> &'static str {
    match value {
        Value::Mas | Value::Fem if plural => "des",
        Value::Sin => {
            if gender == Value::Fem {
                "une"
            } else {
                "un"
            }
        }
        Value::Plu => "des",
        Value::Mas => "un",
        Value::Fem => "une",
        Value::First | Value::Second | Value::Third => "",
    }
}

fn pivot_gender(tree: &DepTree, consensus: &Consensus, pivot: usize, form: Option<&LexEntry>) -> Value {
    let single = |set: &ValueSet| if set.len() == 1 { set.iter().next().copied() } else { None };
    let own = form.map(|e| &e.features).unwrap_or(&tree.node(pivot).features);
    own.get(Variable::Gender)
        .and_then(single)
        .or_else(|| consensus.get(Variable::Gender, pivot).and_then(single))
        .unwrap_or(Value::Mas)
}

/// Phrases the user question around the word shared by the sub-groups (the
/// governor when there is none).
pub fn make_question(
    id: impl Into<String>,
    tree: &DepTree,
    group: &AgreementGroup,
    subgroups: &[AgreementGroup],
    candidates: &[Candidate],
    result: &AggregateResult,
    consensus: &Consensus,
) -> Question {
    let pivot = pivot_nodes(subgroups).first().copied().unwrap_or(group.governor);
    let total: f64 = result.totals.values().sum();
    let options = candidates
        .iter()
        .map(|c| {
            let form = c.new_forms.get(&pivot);
            let surface = form.map(|e| e.surface.as_str()).unwrap_or(&tree.node(pivot).surface);
            let features = form.map(|e| &e.features).unwrap_or(&tree.node(pivot).features);
            let plural = features.get(Variable::Number).is_some_and(|n| !n.contains(&Value::Sin));
            let art = article(c.value, pivot_gender(tree, consensus, pivot, form), plural);
            let phrase = if art.is_empty() { surface.to_string() } else { format!("{art} {surface}") };
            let share = result.totals.get(&c.value).copied().unwrap_or(0.0);
            QuestionOption {
                value: c.value,
                text: format!("{phrase} ({})", c.value.label()),
                percentage: if total > 0.0 { 100.0 * share / total } else { 100.0 / candidates.len() as f64 },
            }
        })
        .collect();
    Question {
        id: id.into(),
        variable: group.variable,
        sentence: tree.text(),
        highlighted: tree.render(|n, s| if group.contains(n.id) { format!("[{s}]") } else { s.to_string() }),
        pivot,
        options,
    }
}

/// Writes a candidate's regenerated forms into a copy of the tree.
pub fn apply_candidate(tree: &DepTree, candidate: &Candidate) -> DepTree {
    let mut out = tree.clone();
    for (&id, entry) in &candidate.new_forms {
        let node = out.node_mut(id);
        node.surface = entry.surface.clone();
        node.features = entry.features.clone();
    }
    out
}

pub fn apply_correction(
    tree: &DepTree,
    group: &AgreementGroup,
    value: Value,
    lexicon: &Lexicon,
) -> Result<DepTree, CorrectorError> {
    let consensus = Consensus::of(tree, &rule_instances(tree));
    let candidate = candidate_for(tree, group, lexicon, &consensus, value)?;
    Ok(apply_candidate(tree, &candidate))
}

/// Everything computed for one top group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub group: AgreementGroup,
    pub check: GroupCheck,
    pub candidates: Vec<Candidate>,
    pub subgroups: Vec<AgreementGroup>,
    pub subgroup_vectors: Vec<Vec<ConfidenceVector>>,
    /// Vectors of the group taken as a single unit.
    pub whole_vectors: Vec<ConfidenceVector>,
    pub aggregate: AggregateResult,
    pub verdict: Verdict,
    pub question: Option<Question>,
}

impl Evaluation {
    pub fn candidate(&self, value: Value) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.value == value)
    }

    /// What each criterion would have chosen on its own.
    pub fn standalone_verdicts(&self) -> [Option<Value>; 4] {
        standalone_verdicts(&self.subgroup_vectors)
    }
}

pub fn evaluate(
    tree: &DepTree,
    group: &AgreementGroup,
    instances: &[RuleInstance],
    lexicon: &Lexicon,
    profile: &Profile,
    consensus: &Consensus,
    question_id: &str,
) -> Result<Evaluation, CorrectorError> {
    let check = check_group(tree, group.members.iter().copied(), group.variable)?;
    let values: Vec<Value> = match &check {
        GroupCheck::Consistent(set) => set.iter().copied().collect(),
        GroupCheck::Inconsistent => group.variable.domain().to_vec(),
    };
    let candidates = candidates_for(tree, group, lexicon, consensus, values)?;
    let feasible: Vec<Value> = candidates.iter().map(|c| c.value).collect();
    let subgroups = subpartition(tree, group, instances);
    let subgroup_vectors = subgroups
        .iter()
        .map(|sg| {
            let cands = candidates_for(tree, sg, lexicon, consensus, feasible.iter().copied())?;
            Ok(confidence_vectors(tree, sg, &cands, &profile.weights))
        })
        .collect::<Result<Vec<_>, CorrectorError>>()?;
    let whole_vectors = confidence_vectors(tree, group, &candidates, &profile.weights);
    let aggregate = aggregate(&subgroup_vectors, profile.strategy);
    let verdict = decide(check.is_consistent(), &candidates, &aggregate, profile);
    let question = (verdict == Verdict::AskUser)
        .then(|| make_question(question_id, tree, group, &subgroups, &candidates, &aggregate, consensus));
    Ok(Evaluation {
        group: group.clone(),
        check,
        candidates,
        subgroups,
        subgroup_vectors,
        whole_vectors,
        aggregate,
        verdict,
        question,
    })
}

/// How the applied value of a step was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Single feasible value, or margin above the threshold.
    Automatic,
    /// Answered by a non-interactive policy.
    Policy,
    /// Answered by the user.
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub pass: usize,
    pub variable: Variable,
    pub members: Vec<usize>,
    pub applied: Value,
    pub resolution: Resolution,
    pub corrected: Vec<usize>,
    /// Threshold in force when the decision was taken.
    pub threshold: f64,
    pub weight_update: Option<WeightUpdate>,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub original: DepTree,
    pub final_tree: DepTree,
    pub steps: Vec<Step>,
    pub passes: usize,
    pub converged: bool,
    pub aborted: bool,
    pub unresolvable: Vec<Evaluation>,
}

/// Reply to a question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    /// Apply `value`; `learn` feeds the choice to the weight update.
    Choose { value: Value, learn: bool },
    Abort,
}

pub trait AnswerSource {
    fn answer(&mut self, question: &Question, evaluation: &Evaluation) -> Answer;
}

impl<F: FnMut(&Question, &Evaluation) -> Answer> AnswerSource for F {
    fn answer(&mut self, question: &Question, evaluation: &Evaluation) -> Answer {
        self(question, evaluation)
    }
}

/// Answers with the aggregation winner. Ties fall back to the group's own
/// vector, then to the first candidate. Never teaches the profile.
#[derive(Debug, Clone, Copy, Default)]
pub struct AutoPolicy;

impl AutoPolicy {
    pub fn choose(evaluation: &Evaluation) -> Option<Value> {
        evaluation
            .aggregate
            .winner
            .or_else(|| argmax_by(evaluation.whole_vectors.iter().map(|v| (v.value, v.sum))))
            .or_else(|| evaluation.candidates.first().map(|c| c.value))
    }
}

impl AnswerSource for AutoPolicy {
    fn answer(&mut self, _: &Question, evaluation: &Evaluation) -> Answer {
        match AutoPolicy::choose(evaluation) {
            Some(value) => Answer::Choose { value, learn: false },
            None => Answer::Abort,
        }
    }
}

/// Refuses every question.
#[derive(Debug, Clone, Copy, Default)]
pub struct StrictPolicy;

impl AnswerSource for StrictPolicy {
    fn answer(&mut self, _: &Question, _: &Evaluation) -> Answer {
        Answer::Abort
    }
}

/// Plays back recorded user answers in order, then aborts.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAnswers(pub VecDeque<Value>);

impl ScriptedAnswers {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Self {
        ScriptedAnswers(values.into_iter().collect())
    }
}

impl AnswerSource for ScriptedAnswers {
    fn answer(&mut self, _: &Question, _: &Evaluation) -> Answer {
        match self.0.pop_front() {
            Some(value) => Answer::Choose { value, learn: true },
            None => Answer::Abort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    AwaitingAnswer,
    Converged,
    NotConverged,
    Aborted,
}

impl RunState {
    pub fn is_finished(self) -> bool {
        matches!(self, RunState::Converged | RunState::NotConverged | RunState::Aborted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Progress {
    Question(Question),
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Pending {
    question: Question,
    evaluation: Evaluation,
    threshold: f64,
}

/// A resumable correction loop over one tree. Each pass walks the variables in
/// order (number, gender, person) twice: first applying the corrections that
/// need no answer, then asking about the groups left over. Passes repeat until
/// one changes nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRun {
    original: DepTree,
    tree: DepTree,
    steps: Vec<Step>,
    unresolvable: Vec<Evaluation>,
    pass: usize,
    cursor: usize,
    changed: bool,
    handled: Vec<(Variable, Vec<usize>)>,
    /// Groups that need a question, put off until the pass's automatic
    /// corrections are done.
    deferred: Vec<(Variable, Vec<usize>)>,
    /// Second half of a pass: deferred groups may now ask.
    asking: bool,
    pending: Option<Pending>,
    asked: usize,
    state: RunState,
}

impl CorrectionRun {
    pub fn new(tree: DepTree) -> Self {
        CorrectionRun {
            original: tree.clone(),
            tree,
            steps: Vec::new(),
            unresolvable: Vec::new(),
            pass: 0,
            cursor: Variable::ALL.len(),
            changed: false,
            handled: Vec::new(),
            deferred: Vec::new(),
            asking: true,
            pending: None,
            asked: 0,
            state: RunState::Running,
        }
    }

    pub fn state(&self) -> RunState {
        self.state
    }

    pub fn tree(&self) -> &DepTree {
        &self.tree
    }

    pub fn original(&self) -> &DepTree {
        &self.original
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn passes(&self) -> usize {
        self.pass
    }

    pub fn pending_question(&self) -> Option<&Question> {
        self.pending.as_ref().map(|p| &p.question)
    }

    pub fn pending_evaluation(&self) -> Option<&Evaluation> {
        self.pending.as_ref().map(|p| &p.evaluation)
    }

    /// Runs until a question needs an answer or the loop ends.
    pub fn advance(&mut self, lexicon: &Lexicon, profile: &Profile) -> Result<Progress, CorrectorError> {
        if let Some(p) = &self.pending {
            return Ok(Progress::Question(p.question.clone()));
        }
        if self.state.is_finished() {
            return Ok(Progress::Finished);
        }
        loop {
            if self.cursor >= Variable::ALL.len() {
                if !self.asking {
                    self.asking = true;
                    self.cursor = 0;
                    continue;
                }
                if self.pass > 0 && !self.changed {
                    self.state = if self.unresolvable.is_empty() { RunState::Converged } else { RunState::NotConverged };
                    return Ok(Progress::Finished);
                }
                if self.pass >= MAX_PASSES {
                    self.state = RunState::NotConverged;
                    return Ok(Progress::Finished);
                }
                self.pass += 1;
                self.cursor = 0;
                self.changed = false;
                self.handled.clear();
                self.deferred.clear();
                self.asking = false;
                self.unresolvable.clear();
            }
            let variable = Variable::ALL[self.cursor];
            let instances = rule_instances(&self.tree);
            let mut next = None;
            for group in partition(&self.tree, &instances, variable) {
                let key = (variable, group.members.clone());
                if self.handled.contains(&key) || (!self.asking && self.deferred.contains(&key)) {
                    continue;
                }
                if !check_group(&self.tree, group.members.iter().copied(), variable)?.is_consistent() {
                    next = Some(group);
                    break;
                }
            }
            let Some(group) = next else {
                self.cursor += 1;
                continue;
            };
            self.handled.push((variable, group.members.clone()));
            let consensus = Consensus::of(&self.tree, &instances);
            let question_id = format!("q{}", self.asked + 1);
            let evaluation = evaluate(&self.tree, &group, &instances, lexicon, profile, &consensus, &question_id)?;
            match evaluation.verdict.clone() {
                Verdict::AutoCorrect(value) => {
                    self.apply(evaluation, value, Resolution::Automatic, profile.threshold, None);
                }
                Verdict::AskUser if !self.asking => {
                    self.handled.pop();
                    self.deferred.push((variable, group.members.clone()));
                }
                Verdict::AskUser => {
                    self.asked += 1;
                    let question = evaluation.question.clone().expect("question for ask verdict");
                    self.pending = Some(Pending { question: question.clone(), evaluation, threshold: profile.threshold });
                    self.state = RunState::AwaitingAnswer;
                    return Ok(Progress::Question(question));
                }
                Verdict::Unresolvable => self.unresolvable.push(evaluation),
                Verdict::AlreadyConsistent => {}
            }
        }
    }

    fn apply(
        &mut self,
        evaluation: Evaluation,
        value: Value,
        resolution: Resolution,
        threshold: f64,
        weight_update: Option<WeightUpdate>,
    ) {
        let candidate = evaluation.candidate(value).expect("feasible value").clone();
        self.tree = apply_candidate(&self.tree, &candidate);
        self.changed = true;
        self.steps.push(Step {
            pass: self.pass,
            variable: evaluation.group.variable,
            members: evaluation.group.members.clone(),
            applied: value,
            resolution,
            corrected: candidate.corrected.clone(),
            threshold,
            weight_update,
            evaluation,
        });
    }

    /// Applies the answer to the pending question. With `learn`, the profile
    /// weights and threshold are updated from the criteria's own verdicts.
    pub fn answer(
        &mut self,
        question_id: &str,
        value: Value,
        learn: bool,
        profile: &mut Profile,
    ) -> Result<Option<WeightUpdate>, CorrectorError> {
        let pending = self.pending.as_ref().ok_or(CorrectorError::NoPendingQuestion)?;
        if pending.question.id != question_id {
            return Err(CorrectorError::StaleQuestion {
                pending: pending.question.id.clone(),
                given: question_id.to_string(),
            });
        }
        if pending.evaluation.candidate(value).is_none() {
            return Err(CorrectorError::InvalidChoice(value));
        }
        let pending = self.pending.take().expect("checked above");
        let update = learn.then(|| profile.update_weights(&pending.evaluation.standalone_verdicts(), value));
        let resolution = if learn { Resolution::User } else { Resolution::Policy };
        self.apply(pending.evaluation, value, resolution, pending.threshold, update.clone());
        self.state = RunState::Running;
        Ok(update)
    }

    /// Gives up on the pending question and stops the run.
    pub fn abort(&mut self) {
        if let Some(p) = self.pending.take() {
            self.unresolvable.push(p.evaluation);
        }
        self.state = RunState::Aborted;
    }

    pub fn report(&self) -> CorrectionReport {
        CorrectionReport {
            original: self.original.clone(),
            final_tree: self.tree.clone(),
            steps: self.steps.clone(),
            passes: self.pass,
            converged: self.state == RunState::Converged,
            aborted: self.state == RunState::Aborted,
            unresolvable: self.unresolvable.clone(),
        }
    }
}

/// Runs the loop to completion, routing questions to `answers`.
pub fn correct_tree(
    tree: &DepTree,
    lexicon: &Lexicon,
    profile: &mut Profile,
    answers: &mut dyn AnswerSource,
) -> Result<CorrectionReport, CorrectorError> {
    let mut run = CorrectionRun::new(tree.clone());
    loop {
        match run.advance(lexicon, profile)? {
            Progress::Finished => break,
            Progress::Question(question) => {
                let evaluation = run.pending_evaluation().expect("pending").clone();
                match answers.answer(&question, &evaluation) {
                    Answer::Choose { value, learn } => {
                        run.answer(&question.id, value, learn, profile)?;
                    }
                    Answer::Abort => {
                        run.abort();
                        break;
                    }
                }
            }
        }
    }
    Ok(run.report())
}

/// Group-by-group state of a tree, without correcting anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub sentence_id: String,
    pub text: String,
    pub groups: Vec<GroupStatus>,
    pub evaluations: Vec<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatus {
    pub variable: Variable,
    pub members: Vec<usize>,
    pub governor: usize,
    pub check: GroupCheck,
}

impl Diagnosis {
    pub fn error_count(&self) -> usize {
        self.evaluations.len()
    }

    /// Largest aggregation margin among the erroneous groups.
    pub fn best_margin(&self) -> f64 {
        self.evaluations.iter().map(|e| e.aggregate.margin).fold(0.0, f64::max)
    }
}

pub fn diagnose(tree: &DepTree, lexicon: &Lexicon, profile: &Profile) -> Result<Diagnosis, CorrectorError> {
    let instances = rule_instances(tree);
    let consensus = Consensus::of(tree, &instances);
    let mut groups = Vec::new();
    let mut evaluations = Vec::new();
    for variable in Variable::ALL {
        for group in partition(tree, &instances, variable) {
            let check = check_group(tree, group.members.iter().copied(), variable)?;
            if !check.is_consistent() {
                let qid = format!("{}-q{}", tree.sentence_id, evaluations.len() + 1);
                evaluations.push(evaluate(tree, &group, &instances, lexicon, profile, &consensus, &qid)?);
            }
            groups.push(GroupStatus { variable, members: group.members, governor: group.governor, check });
        }
    }
    Ok(Diagnosis { sentence_id: tree.sentence_id.clone(), text: tree.text(), groups, evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestEntry {
    pub tree: DepTree,
    pub errors: usize,
    pub best_margin: f64,
    pub diagnosis: Diagnosis,
}

/// Checks each candidate tree of one sentence on its own and orders them by
/// error count, then by how confidently their errors can be fixed.
pub fn rank_forest(trees: &[DepTree], lexicon: &Lexicon, profile: &Profile) -> Result<Vec<ForestEntry>, CorrectorError> {
    let mut ranked = trees
        .iter()
        .map(|tree| {
            let diagnosis = diagnose(tree, lexicon, profile)?;
            Ok(ForestEntry {
                tree: tree.clone(),
                errors: diagnosis.error_count(),
                best_margin: diagnosis.best_margin(),
                diagnosis,
            })
        })
        .collect::<Result<Vec<_>, CorrectorError>>()?;
    ranked.sort_by(|a, b| {
        a.errors
            .cmp(&b.errors)
            .then_with(|| {
                if (a.best_margin - b.best_margin).abs() <= TIE_EPSILON {
                    std::cmp::Ordering::Equal
                } else {
                    b.best_margin.total_cmp(&a.best_margin)
                }
            })
    });
    Ok(ranked)
}
