//! Morphological vocabulary shared by the lexicon, the trees and the checkers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown value `{value}` for variable `{variable}`")]
    UnknownValue { variable: String, value: String },
    #[error("empty value set for variable `{0}`")]
    EmptyValues(String),
    #[error("variable `{0}` given twice")]
    DuplicateVariable(String),
    #[error("malformed feature `{0}`, expected var=v1,v2")]
    Malformed(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unknown dependency label `{0}`")]
    UnknownDepRel(String),
}

/// Agreement variables. The declaration order is the processing order of the
/// correction loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Number,
    Gender,
    Person,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Number, Variable::Gender, Variable::Person];

    pub fn key(self) -> &'static str {
        match self {
            Variable::Number => "num",
            Variable::Gender => "gen",
            Variable::Person => "per",
        }
    }

    pub fn domain(self) -> &'static [Value] {
        match self {
            Variable::Number => &[Value::Sin, Value::Plu],
            Variable::Gender => &[Value::Mas, Value::Fem],
            Variable::Person => &[Value::First, Value::Second, Value::Third],
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Variable {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "num" | "number" => Ok(Variable::Number),
            "gen" | "gender" => Ok(Variable::Gender),
            "per" | "person" => Ok(Variable::Person),
            _ => Err(FeatureError::UnknownVariable(s.to_string())),
        }
    }
}

/// A value of one agreement variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Sin,
    Plu,
    Mas,
    Fem,
    First,
    Second,
    Third,
}

impl Value {
    pub fn variable(self) -> Variable {
        match self {
            Value::Sin | Value::Plu => Variable::Number,
            Value::Mas | Value::Fem => Variable::Gender,
            Value::First | Value::Second | Value::Third => Variable::Person,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Value::Sin => "sin",
            Value::Plu => "plu",
            Value::Mas => "mas",
            Value::Fem => "fem",
            Value::First => "1",
            Value::Second => "2",
            Value::Third => "3",
        }
    }

    /// English label used in user questions.
    pub fn label(self) -> &'static str {
        match self {
            Value::Sin => "singular",
            Value::Plu => "plural",
            Value::Mas => "masculine",
            Value::Fem => "feminine",
            Value::First => "1st person",
            Value::Second => "2nd person",
            Value::Third => "3rd person",
        }
    }

    pub fn parse_for(variable: Variable, s: &str) -> Result<Value, FeatureError> {
        variable
            .domain()
            .iter()
            .copied()
            .find(|v| v.code() == s)
            .ok_or_else(|| FeatureError::UnknownValue {
                variable: variable.key().to_string(),
                value: s.to_string(),
            })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Value {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variable::ALL
            .iter()
            .find_map(|var| Value::parse_for(*var, s).ok())
            .ok_or_else(|| FeatureError::UnknownValue {
                variable: "?".to_string(),
                value: s.to_string(),
            })
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Set of values a word admits for one variable. More than one value means the
/// form is ambiguous for that variable (*les* is both masculine and feminine).
pub type ValueSet = BTreeSet<Value>;

/// One value per variable, as requested from the morphological generator.
pub type Assignment = BTreeMap<Variable, Value>;

/// The feature-value sets borne by a word, at most one per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Features(BTreeMap<Variable, ValueSet>);

impl Features {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, variable: Variable) -> Option<&ValueSet> {
        self.0.get(&variable)
    }

    pub fn bears(&self, variable: Variable) -> bool {
        self.0.contains_key(&variable)
    }

    pub fn admits(&self, value: Value) -> bool {
        self.get(value.variable()).is_some_and(|set| set.contains(&value))
    }

    /// Replaces the value set of a variable. Empty sets remove the variable.
    pub fn set(&mut self, variable: Variable, values: ValueSet) {
        debug_assert!(values.iter().all(|v| v.variable() == variable));
        if values.is_empty() {
            self.0.remove(&variable);
        } else {
            self.0.insert(variable, values);
        }
    }

    pub fn with(mut self, variable: Variable, values: &[Value]) -> Self {
        self.set(variable, values.iter().copied().collect());
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (Variable, &ValueSet)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.0.keys().copied()
    }

    /// True when every targeted value is admitted.
    pub fn matches(&self, target: &Assignment) -> bool {
        target.values().all(|v| self.admits(*v))
    }
}

impl fmt::Display for Features {
    /// `num=plu|gen=mas,fem`, or `_` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (var, values)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}=", var.key())?;
            for (j, v) in values.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(v.code())?;
            }
        }
        Ok(())
    }
}

impl FromStr for Features {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut features = Features::new();
        if s == "_" || s.is_empty() {
            return Ok(features);
        }
        for part in s.split('|') {
            let (var, values) = part
                .split_once('=')
                .ok_or_else(|| FeatureError::Malformed(part.to_string()))?;
            let variable: Variable = var.trim().parse()?;
            if features.bears(variable) {
                return Err(FeatureError::DuplicateVariable(var.to_string()));
            }
            let set = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| Value::parse_for(variable, v))
                .collect::<Result<ValueSet, _>>()?;
            if set.is_empty() {
                return Err(FeatureError::EmptyValues(var.to_string()));
            }
            features.set(variable, set);
        }
        Ok(features)
    }
}

impl Serialize for Features {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Features {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lexical categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Det,
    Noun,
    Adj,
    Verb,
    Aux,
    PastPart,
    Pron,
    RelPron,
    Prep,
}

impl Category {
    pub fn code(self) -> &'static str {
        match self {
            Category::Det => "det",
            Category::Noun => "noun",
            Category::Adj => "adj",
            Category::Verb => "verb",
            Category::Aux => "aux",
            Category::PastPart => "pastpart",
            Category::Pron => "pron",
            Category::RelPron => "relpron",
            Category::Prep => "prep",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Category {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "det" => Category::Det,
            "noun" => Category::Noun,
            "adj" => Category::Adj,
            "verb" => Category::Verb,
            "aux" => Category::Aux,
            "pastpart" => Category::PastPart,
            "pron" => Category::Pron,
            "relpron" => Category::RelPron,
            "prep" => Category::Prep,
            _ => return Err(FeatureError::UnknownCategory(s.to_string())),
        })
    }
}

/// Dependency labels. The set is closed: every label is consumed by the rule
/// catalog or is inert for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepRel {
    Root,
    Det,
    Adj,
    Subj,
    Obj,
    RelCl,
    Aux,
    PPart,
    Prep,
    PObj,
    Attr,
}

impl DepRel {
    pub fn code(self) -> &'static str {
        match self {
            DepRel::Root => "root",
            DepRel::Det => "det",
            DepRel::Adj => "adj",
            DepRel::Subj => "subj",
            DepRel::Obj => "obj",
            DepRel::RelCl => "relcl",
            DepRel::Aux => "aux",
            DepRel::PPart => "ppart",
            DepRel::Prep => "prep",
            DepRel::PObj => "pobj",
            DepRel::Attr => "attr",
        }
    }
}

impl fmt::Display for DepRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DepRel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "root" => DepRel::Root,
            "det" => DepRel::Det,
            "adj" => DepRel::Adj,
            "subj" => DepRel::Subj,
            "obj" => DepRel::Obj,
            "relcl" => DepRel::RelCl,
            "aux" => DepRel::Aux,
            "ppart" => DepRel::PPart,
            "prep" => DepRel::Prep,
            "pobj" => DepRel::PObj,
            "attr" => DepRel::Attr,
            _ => return Err(FeatureError::UnknownDepRel(s.to_string())),
        })
    }
}
