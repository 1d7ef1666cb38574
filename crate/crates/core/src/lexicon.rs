//! Full-form lexicon: analysis (surface to entries) and generation (lemma plus
//! target features to surface), with a phonemic transcription per form.
//!
//! File format, one entry per line, tab separated:
//!
//! ```text
//! SURFACE  LEMMA  CAT  FEATS  PHON
//! calculs  calcul noun num=plu|gen=mas  kalkyl
//! ```
//!
//! `FEATS` is `_` for a form that bears no agreement variable. Lines starting
//! with `#` are comments.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Assignment, Category, FeatureError, Features, Variable};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected 5 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: {source}")]
    Feature {
        line: usize,
        #[source]
        source: FeatureError,
    },
    #[error("line {line}: form `{surface}` bears number or gender but has no phonetic string")]
    MissingPhon { line: usize, surface: String },
    #[error("line {line}: duplicate entry `{surface}` ({category}, {features})")]
    Duplicate {
        line: usize,
        surface: String,
        category: Category,
        features: String,
    },
    #[error("line {line}: empty {column}")]
    EmptyColumn { line: usize, column: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InflectError {
    #[error("no form of `{lemma}` ({category}) for {target}")]
    NoSuchForm {
        lemma: String,
        category: Category,
        target: String,
    },
    #[error("`{lemma}` ({category}) has several forms for {target}: {surfaces:?}")]
    Ambiguous {
        lemma: String,
        category: Category,
        target: String,
        surfaces: Vec<String>,
    },
}

/// One inflected form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexEntry {
    pub surface: String,
    pub lemma: String,
    pub category: Category,
    pub features: Features,
    pub phon: String,
}

impl LexEntry {
    fn to_line(&self) -> String {
        let phon = if self.phon.is_empty() { "_" } else { &self.phon };
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.surface, self.lemma, self.category, self.features, phon
        )
    }
}

/// 1 when the two forms are pronounced differently, 0 otherwise.
pub fn phonetic_alteration(before: &LexEntry, after: &LexEntry) -> u32 {
    u32::from(before.phon != after.phon)
}

/// Typographic apostrophes are folded onto the ASCII one so that *l’* and *l'*
/// analyze alike. Nothing else is normalized.
pub fn normalize_surface(surface: &str) -> String {
    surface.replace(['\u{2019}', '\u{2032}'], "'")
}

fn describe(target: &Assignment) -> String {
    if target.is_empty() {
        return "no features".to_string();
    }
    target
        .iter()
        .map(|(var, v)| format!("{var}={v}"))
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    by_surface: HashMap<String, Vec<usize>>,
    by_lemma: HashMap<(String, Category), Vec<usize>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LexEntry>) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon::new();
        for (i, entry) in entries.into_iter().enumerate() {
            lexicon.insert(entry, i + 1)?;
        }
        Ok(lexicon)
    }

    pub fn load<R: Read>(mut reader: R) -> Result<Self, LexiconError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(LexiconError::ColumnCount { line, found: cols.len() });
            }
            for (col, name) in cols.iter().zip(["surface", "lemma", "category", "features", "phon"]) {
                if col.is_empty() {
                    return Err(LexiconError::EmptyColumn { line, column: name });
                }
            }
            let feature_err = |source| LexiconError::Feature { line, source };
            let category: Category = cols[2].parse().map_err(feature_err)?;
            let features: Features = cols[3].parse().map_err(feature_err)?;
            let phon = if cols[4] == "_" { String::new() } else { cols[4].to_string() };
            let entry = LexEntry {
                surface: normalize_surface(cols[0]),
                lemma: cols[1].to_string(),
                category,
                features,
                phon,
            };
            lexicon.insert(entry, line)?;
        }
        Ok(lexicon)
    }

    fn insert(&mut self, entry: LexEntry, line: usize) -> Result<(), LexiconError> {
        let needs_phon =
            entry.features.bears(Variable::Number) || entry.features.bears(Variable::Gender);
        if needs_phon && entry.phon.is_empty() {
            return Err(LexiconError::MissingPhon { line, surface: entry.surface });
        }
        let duplicate = self.by_surface.get(&entry.surface).is_some_and(|ids| {
            ids.iter().any(|&i| {
                let e = &self.entries[i];
                e.category == entry.category && e.features == entry.features
            })
        });
        if duplicate {
            return Err(LexiconError::Duplicate {
                line,
                features: entry.features.to_string(),
                surface: entry.surface,
                category: entry.category,
            });
        }
        let id = self.entries.len();
        self.by_surface.entry(entry.surface.clone()).or_default().push(id);
        self.by_lemma
            .entry((entry.lemma.clone(), entry.category))
            .or_default()
            .push(id);
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    /// All entries spelled `surface`. Unknown words give an empty list.
    pub fn analyze(&self, surface: &str) -> Vec<&LexEntry> {
        let key = normalize_surface(surface);
        self.by_surface
            .get(&key)
            .map(|ids| ids.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    pub fn forms_of(&self, lemma: &str, category: Category) -> Vec<&LexEntry> {
        self.by_lemma
            .get(&(lemma.to_string(), category))
            .map(|ids| ids.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Looks up the form of a word as it appears in a tree: same surface,
    /// lemma and category, preferring an exact feature match.
    pub fn lookup(
        &self,
        surface: &str,
        lemma: &str,
        category: Category,
        features: &Features,
    ) -> Option<&LexEntry> {
        let candidates: Vec<&LexEntry> = self
            .analyze(surface)
            .into_iter()
            .filter(|e| e.lemma == lemma && e.category == category)
            .collect();
        candidates
            .iter()
            .find(|e| &e.features == features)
            .or_else(|| candidates.first())
            .copied()
    }

    /// Generates the form of `lemma` whose feature sets contain every targeted
    /// value. Several matching entries are fine as long as they share one
    /// spelling.
    pub fn inflect(
        &self,
        lemma: &str,
        category: Category,
        target: &Assignment,
    ) -> Result<&LexEntry, InflectError> {
        let matches: Vec<&LexEntry> = self
            .forms_of(lemma, category)
            .into_iter()
            .filter(|e| e.features.matches(target))
            .collect();
        let Some(first) = matches.first() else {
            return Err(InflectError::NoSuchForm {
                lemma: lemma.to_string(),
                category,
                target: describe(target),
            });
        };
        if matches.iter().any(|e| e.surface != first.surface) {
            let mut surfaces: Vec<String> = matches.iter().map(|e| e.surface.clone()).collect();
            surfaces.sort();
            surfaces.dedup();
            return Err(InflectError::Ambiguous {
                lemma: lemma.to_string(),
                category,
                target: describe(target),
                surfaces,
            });
        }
        Ok(first)
    }

    /// Serializes in the load format, one line per entry in insertion order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_line());
            out.push('\n');
        }
        out
    }
}
