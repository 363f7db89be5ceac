//! Python bindings. The module is importable as `stampede`.
//!
//! Data-validation failures raise `ValueError`, unreadable files raise
//! `OSError`. Structured results (simulation outcomes, fit summaries) are
//! returned as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;
use stampede_core::crowdsim::{self, RitualSchedule, RitualWindow, SimError, SimParams};
use stampede_core::dataset::{self, DatasetError};
use stampede_core::regression::{self, DesignMatrix, RegressionError};
use stampede_core::risk::{self, CriReference, CriWeights, RiskError, RiskInput, RiskThresholds};
use stampede_core::textmine::{self, Normalizer, TextError};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dataset_err(e: DatasetError) -> PyErr {
    match e {
        DatasetError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_error(other),
    }
}

fn text_err(e: TextError) -> PyErr {
    match e {
        TextError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_error(other),
    }
}

fn regression_err(e: RegressionError) -> PyErr {
    value_error(e)
}

fn risk_err(e: RiskError) -> PyErr {
    value_error(e)
}

fn sim_err(e: SimError) -> PyErr {
    value_error(e)
}

/// Converts a JSON value into the equivalent Python object.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

/// The three bundled tables joined on year.
#[pyclass(frozen, module = "stampede")]
struct Panel {
    inner: dataset::JoinedPanel,
    #[pyo3(get)]
    warnings: Vec<String>,
}

#[pymethods]
impl Panel {
    #[getter]
    fn years(&self) -> Vec<i32> {
        self.inner.years()
    }

    #[getter]
    fn fatalities(&self) -> Vec<f64> {
        self.inner.fatalities()
    }

    #[getter]
    fn densities(&self) -> Vec<f64> {
        self.inner.densities()
    }

    #[getter]
    fn admin_scores(&self) -> Vec<f64> {
        self.inner.admin_scores()
    }

    #[getter]
    fn chokepoint_widths(&self) -> Vec<f64> {
        self.inner
            .rows
            .iter()
            .map(|r| r.venue.chokepoint_width)
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Panel(years={:?})", self.inner.years())
    }
}

/// Loads `incidents.csv`, `inquiries.csv` and `venues.csv` from `data_dir`.
#[pyfunction]
fn load_panel(data_dir: PathBuf) -> PyResult<Panel> {
    let (inner, warnings) = dataset::load_panel(data_dir).map_err(dataset_err)?;
    Ok(Panel { inner, warnings })
}

#[pyclass(frozen, module = "stampede")]
struct Fit {
    inner: regression::RegressionFit,
}

#[pymethods]
impl Fit {
    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names.clone()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn fitted(&self) -> Vec<f64> {
        self.inner.fitted.clone()
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.inner.r_squared
    }

    #[getter]
    fn dof(&self) -> usize {
        self.inner.dof
    }

    /// None when the fit has no residual degrees of freedom.
    #[getter]
    fn std_errors(&self) -> Option<Vec<f64>> {
        self.inner.inference.as_ref().map(|i| i.std_errors.clone())
    }

    #[getter]
    fn t_stats(&self) -> Option<Vec<f64>> {
        self.inner.inference.as_ref().map(|i| i.t_stats.clone())
    }

    #[getter]
    fn p_values(&self) -> Option<Vec<f64>> {
        self.inner.inference.as_ref().map(|i| i.p_values.clone())
    }

    fn coefficient(&self, name: &str) -> Option<f64> {
        self.inner.coefficient(name)
    }

    /// `row` must include the leading 1 when the model has an intercept.
    fn predict(&self, row: Vec<f64>) -> PyResult<f64> {
        regression::predict(&self.inner, &row).map_err(regression_err)
    }

    fn __repr__(&self) -> String {
        let terms: Vec<String> = self
            .inner
            .names
            .iter()
            .zip(&self.inner.coefficients)
            .map(|(n, b)| format!("{n}={b:.6}"))
            .collect();
        format!("Fit({})", terms.join(", "))
    }
}

/// Ordinary least squares of `y` on named predictor columns.
#[pyfunction]
#[pyo3(signature = (columns, y, intercept = true))]
fn fit_ols(columns: Vec<(String, Vec<f64>)>, y: Vec<f64>, intercept: bool) -> PyResult<Fit> {
    let x = DesignMatrix::from_columns(columns, intercept).map_err(regression_err)?;
    let inner = regression::fit_ols(&x, &y).map_err(regression_err)?;
    Ok(Fit { inner })
}

/// Returns `(slope, intercept, r_squared)`.
#[pyfunction]
fn fit_trend(years: Vec<i32>, values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let t = regression::fit_trend(&years, &values).map_err(regression_err)?;
    Ok((t.slope, t.intercept, t.r_squared))
}

fn weights(w: Option<(f64, f64, f64, f64)>) -> PyResult<CriWeights> {
    match w {
        Some((d, c, v, a)) => CriWeights::new(d, c, v, a).map_err(risk_err),
        None => Ok(CriWeights::default()),
    }
}

/// Crowd Risk Index of one situation. `weights` is
/// `(density, choke, velocity, admin)` and must sum to 1.
#[pyfunction]
#[pyo3(signature = (density, chokepoint_width, velocity_multiplier, admin_score, weights = None))]
fn cri(
    density: f64,
    chokepoint_width: f64,
    velocity_multiplier: f64,
    admin_score: u8,
    weights: Option<(f64, f64, f64, f64)>,
) -> PyResult<f64> {
    let input = RiskInput {
        density,
        chokepoint_width,
        velocity_multiplier,
        admin_score,
    };
    risk::cri(&input, &self::weights(weights)?, &CriReference::default()).map_err(risk_err)
}

/// `[(year, cri), ...]` for every panel year.
#[pyfunction]
#[pyo3(signature = (panel, weights = None))]
fn cri_timeline(panel: &Panel, weights: Option<(f64, f64, f64, f64)>) -> PyResult<Vec<(i32, f64)>> {
    let rows = risk::cri_timeline(
        &panel.inner,
        &self::weights(weights)?,
        &CriReference::default(),
    )
    .map_err(risk_err)?;
    Ok(rows.into_iter().map(|r| (r.year, r.cri)).collect())
}

/// `"Safe"`, `"Elevated"` or `"Critical"`.
#[pyfunction]
fn classify_density(density: f64) -> String {
    format!(
        "{:?}",
        risk::classify_density(density, &RiskThresholds::default())
    )
}

#[pyfunction]
fn stem(word: &str) -> String {
    textmine::stem(word)
}

#[pyclass(frozen, module = "stampede")]
struct TfIdf {
    corpus: textmine::Corpus,
    model: textmine::TfIdfModel,
}

#[pymethods]
impl TfIdf {
    #[getter]
    fn years(&self) -> Vec<i32> {
        self.model.years.clone()
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.model.terms.clone()
    }

    /// Weight of `term` in the document for `year`; the raw term is
    /// normalized (stopwords, stemming) first.
    fn weight(&self, year: i32, term: &str) -> PyResult<f64> {
        let doc = self
            .corpus
            .doc_index(year)
            .ok_or_else(|| value_error(format!("no document for year {year}")))?;
        Ok(Normalizer::default()
            .term(term)
            .map_or(0.0, |t| self.model.weight(doc, &t)))
    }

    #[pyo3(signature = (year, k = 5))]
    fn top_terms(&self, year: i32, k: usize) -> PyResult<Vec<(String, f64)>> {
        let doc = self
            .corpus
            .doc_index(year)
            .ok_or_else(|| value_error(format!("no document for year {year}")))?;
        Ok(textmine::top_terms(&self.model, doc, k))
    }

    /// `[(ngram, [years...]), ...]` for n-grams shared by at least two years.
    #[pyo3(signature = (n = 1))]
    fn recurring_phrases(&self, n: usize) -> Vec<(String, Vec<i32>)> {
        textmine::recurring_phrases(&self.corpus, n)
            .into_iter()
            .map(|p| (p.ngram, p.years))
            .collect()
    }
}

/// TF-IDF over `[(year, [phrase, ...]), ...]` with the default English
/// stopwords and Porter stemming.
#[pyfunction]
fn tfidf(documents: Vec<(i32, Vec<String>)>) -> PyResult<TfIdf> {
    let corpus = textmine::Corpus::new(documents, &Normalizer::default()).map_err(text_err)?;
    let model = textmine::tfidf(&corpus).map_err(text_err)?;
    Ok(TfIdf { corpus, model })
}

/// Runs one venue preset and returns the outcome as a dict. `rituals` is a
/// list of `(start, end, multiplier)` windows. `overrides` sets simulation
/// parameters by name.
#[pyfunction]
#[pyo3(signature = (
    data_dir, year, agents = 200, duration = 60.0, seed = 42,
    vip_closure = true, parallel = true, rituals = None, overrides = None
))]
#[allow(clippy::too_many_arguments)]
fn simulate_preset(
    py: Python<'_>,
    data_dir: PathBuf,
    year: i32,
    agents: usize,
    duration: f64,
    seed: u64,
    vip_closure: bool,
    parallel: bool,
    rituals: Option<Vec<(f64, f64, f64)>>,
    overrides: Option<Vec<(String, String)>>,
) -> PyResult<Py<PyAny>> {
    let venues = dataset::load_venues(data_dir.join("venues.csv"))
        .map_err(dataset_err)?
        .records;
    let venue = venues
        .iter()
        .find(|v| v.year == year)
        .ok_or_else(|| sim_err(SimError::UnknownPreset(year)))?;
    let scenario = crowdsim::preset(venue, agents, duration, vip_closure).map_err(sim_err)?;
    let mut params = SimParams {
        seed,
        parallel,
        ..SimParams::default()
    };
    for (k, v) in overrides.unwrap_or_default() {
        params.set(&k, &v).map_err(sim_err)?;
    }
    let windows = rituals
        .unwrap_or_default()
        .into_iter()
        .map(|(start, end, speed_multiplier)| RitualWindow {
            start,
            end,
            speed_multiplier,
        })
        .collect();
    let schedule = RitualSchedule::new(windows).map_err(sim_err)?;
    // The simulation does not touch Python objects, so release the interpreter.
    let outcome = py
        .detach(|| crowdsim::run(&scenario, &params, &schedule))
        .map_err(sim_err)?;
    let mut json = outcome.to_json();
    json["open_exits"] = scenario.open_exit_count().into();
    to_py(py, &json)
}

#[pymodule]
fn stampede(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Panel>()?;
    m.add_class::<Fit>()?;
    m.add_class::<TfIdf>()?;
    m.add_function(wrap_pyfunction!(load_panel, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ols, m)?)?;
    m.add_function(wrap_pyfunction!(fit_trend, m)?)?;
    m.add_function(wrap_pyfunction!(cri, m)?)?;
    m.add_function(wrap_pyfunction!(cri_timeline, m)?)?;
    m.add_function(wrap_pyfunction!(classify_density, m)?)?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(tfidf, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_preset, m)?)?;
    Ok(())
}
