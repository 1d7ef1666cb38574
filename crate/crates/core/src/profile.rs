//! Per-user criterion weights and auto-correction threshold, with the online
//! update applied after every answered question.
//!
//! Profiles are stored as flat `key = value` lines (`profile.cfg`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Value;

pub const DEFAULT_FILE_NAME: &str = "profile.cfg";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid profile: {0}")]
    Invalid(String),
}

/// Aggregation of sub-group scores into a whole-group verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Each sub-group votes for its best candidate.
    Simple,
    /// Confidence sums are added across sub-groups.
    Proportional,
    /// Percentages are added across sub-groups.
    WeightedProportional,
}

impl Strategy {
    pub fn code(self) -> &'static str {
        match self {
            Strategy::Simple => "simple",
            Strategy::Proportional => "proportional",
            Strategy::WeightedProportional => "weighted_proportional",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(Strategy::Simple),
            "proportional" => Ok(Strategy::Proportional),
            "weighted_proportional" | "weighted-proportional" | "weighted" => {
                Ok(Strategy::WeightedProportional)
            }
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// The four correction criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Fewest corrected words.
    A,
    /// Fewest phonetic alterations.
    B,
    /// Missing letters rather than extra ones.
    C,
    /// Follow the head of the phrase.
    D,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::A, Criterion::B, Criterion::C, Criterion::D];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Weights {
    pub fn get(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::A => self.a,
            Criterion::B => self.b,
            Criterion::C => self.c,
            Criterion::D => self.d,
        }
    }

    pub fn get_mut(&mut self, criterion: Criterion) -> &mut f64 {
        match criterion {
            Criterion::A => &mut self.a,
            Criterion::B => &mut self.b,
            Criterion::C => &mut self.c,
            Criterion::D => &mut self.d,
        }
    }

    pub fn scaled(&self, factor: f64) -> Weights {
        Weights { a: self.a * factor, b: self.b * factor, c: self.c * factor, d: self.d * factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub weights: Weights,
    pub k_min: f64,
    pub k_max: f64,
    pub threshold: f64,
    pub threshold_floor: f64,
    pub eta: f64,
    pub delta: f64,
    pub strategy: Strategy,
    pub update_count: u64,
}

impl Default for Profile {
    fn default() -> Self {
        default_profile()
    }
}

pub fn default_profile() -> Profile {
    Profile {
        weights: Weights { a: 2.0, b: 2.0, c: 2.0, d: 1.0 },
        k_min: 0.1,
        k_max: 10.0,
        threshold: 5.0,
        threshold_floor: 0.5,
        eta: 0.1,
        delta: 0.25,
        strategy: Strategy::Proportional,
        update_count: 0,
    }
}

/// What an answer did to the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightUpdate {
    pub before: Weights,
    pub after: Weights,
    pub threshold_before: f64,
    pub threshold_after: f64,
}

impl WeightUpdate {
    pub fn delta(&self, criterion: Criterion) -> f64 {
        self.after.get(criterion) - self.before.get(criterion)
    }
}

impl Profile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let invalid = |msg: String| Err(ProfileError::Invalid(msg));
        let finite = [
            self.weights.a,
            self.weights.b,
            self.weights.c,
            self.weights.d,
            self.k_min,
            self.k_max,
            self.threshold,
            self.threshold_floor,
            self.eta,
            self.delta,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite number".into());
        }
        if !(self.k_min > 0.0 && self.k_min <= self.k_max) {
            return invalid(format!("need 0 < k_min <= k_max, got {} and {}", self.k_min, self.k_max));
        }
        for c in Criterion::ALL {
            let k = self.weights.get(c);
            if k <= 0.0 || k < self.k_min || k > self.k_max {
                return invalid(format!(
                    "weight {c:?} = {k} outside [{}, {}]",
                    self.k_min, self.k_max
                ));
            }
        }
        if self.threshold_floor < 0.0 {
            return invalid(format!("negative threshold floor {}", self.threshold_floor));
        }
        if self.threshold < self.threshold_floor {
            return invalid(format!(
                "threshold {} below its floor {}",
                self.threshold, self.threshold_floor
            ));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return invalid(format!("eta {} not in (0, 1)", self.eta));
        }
        if self.delta <= 0.0 {
            return invalid(format!("delta {} must be positive", self.delta));
        }
        Ok(())
    }

    pub fn decay_threshold(&mut self) {
        self.threshold = (self.threshold - self.delta).max(self.threshold_floor);
    }

    /// `verdicts[i]` is the candidate criterion i picks on its own (`None` for
    /// a tie or when it cannot discriminate). Agreeing criteria are
    /// strengthened, disagreeing ones weakened; the threshold then decays.
    pub fn update_weights(&mut self, verdicts: &[Option<Value>; 4], chosen: Value) -> WeightUpdate {
        let before = self.weights;
        let threshold_before = self.threshold;
        for c in Criterion::ALL {
            let k = self.weights.get_mut(c);
            match verdicts[c.index()] {
                Some(v) if v == chosen => *k = (*k * (1.0 + self.eta)).min(self.k_max),
                Some(_) => *k = (*k * (1.0 - self.eta)).max(self.k_min),
                None => {}
            }
        }
        self.decay_threshold();
        self.update_count += 1;
        WeightUpdate { before, after: self.weights, threshold_before, threshold_after: self.threshold }
    }

    pub fn to_text(&self) -> String {
        format!(
            "k_a = {}\nk_b = {}\nk_c = {}\nk_d = {}\nk_min = {}\nk_max = {}\nthreshold = {}\nthreshold_floor = {}\neta = {}\ndelta = {}\nstrategy = {}\nupdate_count = {}\n",
            self.weights.a,
            self.weights.b,
            self.weights.c,
            self.weights.d,
            self.k_min,
            self.k_max,
            self.threshold,
            self.threshold_floor,
            self.eta,
            self.delta,
            self.strategy,
            self.update_count,
        )
    }

    pub fn from_text(text: &str) -> Result<Profile, ProfileError> {
        let mut nums: [Option<f64>; 10] = [None; 10];
        const KEYS: [&str; 10] = [
            "k_a", "k_b", "k_c", "k_d", "k_min", "k_max", "threshold", "threshold_floor", "eta", "delta",
        ];
        let mut strategy = None;
        let mut update_count = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (key, value) = raw.split_once('=').ok_or(ProfileError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ProfileError::BadValue { line, key: key.to_string(), value: value.to_string() };
            if let Some(i) = KEYS.iter().position(|k| *k == key) {
                nums[i] = Some(value.parse().map_err(|_| bad())?);
            } else if key == "strategy" {
                strategy = Some(value.parse::<Strategy>().map_err(|_| bad())?);
            } else if key == "update_count" {
                update_count = Some(value.parse::<u64>().map_err(|_| bad())?);
            } else {
                return Err(ProfileError::UnknownKey { line, key: key.to_string() });
            }
        }
        let get = |i: usize| nums[i].ok_or(ProfileError::MissingKey(KEYS[i]));
        let profile = Profile {
            weights: Weights { a: get(0)?, b: get(1)?, c: get(2)?, d: get(3)? },
            k_min: get(4)?,
            k_max: get(5)?,
            threshold: get(6)?,
            threshold_floor: get(7)?,
            eta: get(8)?,
            delta: get(9)?,
            strategy: strategy.ok_or(ProfileError::MissingKey("strategy"))?,
            update_count: update_count.ok_or(ProfileError::MissingKey("update_count"))?,
        };
        profile.validate()?;
        Ok(profile)
    }
}
