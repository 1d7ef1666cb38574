//! Python bindings. Trees cross the boundary as treebank text and reports
//! come back as plain Python objects decoded from the JSON schema.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use accord_core::corrector::{self, AutoPolicy, CorrectionRun, Progress, StrictPolicy};
use accord_core::deptree::{parse_treebank, serialize_tree, DepTree};
use accord_core::profile::{Profile as CoreProfile, Strategy};
use accord_core::{Lexicon as CoreLexicon, Value};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn trees(text: &str) -> PyResult<Vec<DepTree>> {
    parse_treebank(text).map_err(value_err)
}

fn one_tree(text: &str) -> PyResult<DepTree> {
    let mut all = trees(text)?;
    if all.len() != 1 {
        return Err(PyValueError::new_err(format!("expected one sentence, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// Full-form lexicon, from its tab-separated text.
#[pyclass(frozen)]
struct Lexicon(CoreLexicon);

#[pymethods]
impl Lexicon {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        CoreLexicon::parse(text).map(Lexicon).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(value_err)?;
        Self::new(&text)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn to_text(&self) -> String {
        self.0.to_tsv()
    }
}

/// Weights, threshold and learning parameters. Defaults when built without
/// text.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Profile(CoreProfile);

#[pymethods]
impl Profile {
    #[new]
    #[pyo3(signature = (text=None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let profile = match text {
            Some(t) => CoreProfile::from_text(t).map_err(value_err)?,
            None => CoreProfile::default(),
        };
        profile.validate().map_err(value_err)?;
        Ok(Profile(profile))
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn weights(&self) -> (f64, f64, f64, f64) {
        let w = self.0.weights;
        (w.a, w.b, w.c, w.d)
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.0.threshold
    }

    #[getter]
    fn strategy(&self) -> String {
        self.0.strategy.to_string()
    }

    #[setter]
    fn set_strategy(&mut self, name: &str) -> PyResult<()> {
        self.0.strategy = name.parse::<Strategy>().map_err(value_err)?;
        Ok(())
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0)
    }
}

fn profile_or_default(profile: Option<&Profile>) -> CoreProfile {
    profile.map(|p| p.0.clone()).unwrap_or_default()
}

/// Diagnoses every sentence of a treebank without correcting.
#[pyfunction]
#[pyo3(signature = (treebank, lexicon, profile=None))]
fn check(py: Python<'_>, treebank: &str, lexicon: &Lexicon, profile: Option<&Profile>) -> PyResult<Py<PyAny>> {
    let profile = profile_or_default(profile);
    let diagnoses = trees(treebank)?
        .iter()
        .map(|t| corrector::diagnose(t, &lexicon.0, &profile).map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    to_py(py, &diagnoses)
}

/// Corrects every sentence. With `auto`, questions get the best-scoring
/// answer; otherwise they leave the sentence unresolved.
#[pyfunction]
#[pyo3(signature = (treebank, lexicon, profile=None, auto=true))]
fn correct(
    py: Python<'_>,
    treebank: &str,
    lexicon: &Lexicon,
    profile: Option<&Profile>,
    auto: bool,
) -> PyResult<Py<PyAny>> {
    let mut profile = profile_or_default(profile);
    let reports = trees(treebank)?
        .iter()
        .map(|t| {
            if auto {
                corrector::correct_tree(t, &lexicon.0, &mut profile, &mut AutoPolicy)
            } else {
                corrector::correct_tree(t, &lexicon.0, &mut profile, &mut StrictPolicy)
            }
            .map_err(value_err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    to_py(py, &reports)
}

/// Orders alternative analyses of one sentence, best first.
#[pyfunction]
#[pyo3(signature = (treebank, lexicon, profile=None))]
fn rank_forest(py: Python<'_>, treebank: &str, lexicon: &Lexicon, profile: Option<&Profile>) -> PyResult<Py<PyAny>> {
    let profile = profile_or_default(profile);
    let ranked = corrector::rank_forest(&trees(treebank)?, &lexicon.0, &profile).map_err(value_err)?;
    to_py(py, &ranked)
}

/// Interactive correction of one sentence with its own profile.
#[pyclass]
struct Correction {
    run: CorrectionRun,
    lexicon: Py<Lexicon>,
    profile: CoreProfile,
}

#[pymethods]
impl Correction {
    #[new]
    #[pyo3(signature = (sentence, lexicon, profile=None))]
    fn new(sentence: &str, lexicon: Py<Lexicon>, profile: Option<&Profile>) -> PyResult<Self> {
        Ok(Correction { run: CorrectionRun::new(one_tree(sentence)?), lexicon, profile: profile_or_default(profile) })
    }

    /// Runs until a question is pending (returned as a dict) or the run ends
    /// (returns None).
    fn advance(&mut self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        let lexicon = self.lexicon.get();
        match self.run.advance(&lexicon.0, &self.profile).map_err(value_err)? {
            Progress::Question(q) => Ok(Some(to_py(py, &q)?)),
            Progress::Finished => Ok(None),
        }
    }

    /// Answers the pending question with a value code (`sin`, `plu`, `mas`,
    /// `fem`, `1`, `2`, `3`); returns the weight update when learning.
    #[pyo3(signature = (question_id, value, learn=true))]
    fn answer(&mut self, py: Python<'_>, question_id: &str, value: &str, learn: bool) -> PyResult<Option<Py<PyAny>>> {
        let value: Value = value.parse().map_err(value_err)?;
        let update = self.run.answer(question_id, value, learn, &mut self.profile).map_err(value_err)?;
        update.map(|u| to_py(py, &u)).transpose()
    }

    #[getter]
    fn state(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.run.state())
    }

    #[getter]
    fn text(&self) -> String {
        self.run.tree().text()
    }

    #[getter]
    fn tree(&self) -> String {
        serialize_tree(self.run.tree())
    }

    #[getter]
    fn profile(&self) -> Profile {
        Profile(self.profile.clone())
    }

    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.run.report())
    }
}

#[pymodule]
mod accord {
    #[pymodule_export]
    use super::{check, correct, rank_forest, Correction, Lexicon, Profile};
}
