//! Python bindings: text cleaning, TF-IDF, the six classifiers, budgeted
//! augmentation and the evaluation metrics.
//!
//! Structured values (records, configs, plans, reports) cross the boundary as
//! plain dicts and lists.

use std::collections::BTreeSet;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use foodaug_core::augment::{self as aug, AugmentConfig, Augmenter, SynonymDb, TableProvider, Technique};
use foodaug_core::corpus::{self, Category, IncidentRecord, TableFormat};
use foodaug_core::evaluate;
use foodaug_core::features::{self, SparseMatrix, TfidfConfig, TfidfModel};
use foodaug_core::models::{self, ClassifierConfig, ClassifierModel, Family};
use foodaug_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let s: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&s).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn tfidf_config(config: Option<&Bound<'_, PyDict>>) -> PyResult<TfidfConfig> {
    match config {
        Some(c) => from_py(c.as_any()),
        None => Ok(TfidfConfig::default()),
    }
}

/// Normalises raw announcement text: strips special characters, markup and
/// entities, and collapses whitespace.
#[pyfunction]
fn clean_text(text: &str) -> String {
    corpus::clean_text(text)
}

/// Tokens as produced by the vectorizer for `config` (a TF-IDF config dict).
#[pyfunction]
#[pyo3(signature = (text, config=None))]
fn tokenize(text: &str, config: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<String>> {
    Ok(features::tokenize(text, &tfidf_config(config)?))
}

fn sparse_rows(x: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    x.rows().map(|r| r.iter().collect()).collect()
}

/// A TF-IDF vectorizer. Rows are returned as lists of `(column, weight)`.
#[pyclass(name = "Tfidf", module = "foodaug")]
struct PyTfidf {
    config: TfidfConfig,
    model: Option<TfidfModel>,
}

impl PyTfidf {
    fn fitted(&self) -> PyResult<&TfidfModel> {
        self.model
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("vectorizer is not fitted"))
    }
}

#[pymethods]
impl PyTfidf {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let config = tfidf_config(config)?;
        config.validate().map_err(py_err)?;
        Ok(PyTfidf { config, model: None })
    }

    fn fit(&mut self, docs: Vec<String>) -> PyResult<()> {
        self.model = Some(features::fit(&docs, &self.config).map_err(py_err)?);
        Ok(())
    }

    fn transform(&self, docs: Vec<String>) -> PyResult<Vec<Vec<(usize, f64)>>> {
        Ok(sparse_rows(&self.fitted()?.transform(&docs)))
    }

    fn fit_transform(&mut self, docs: Vec<String>) -> PyResult<Vec<Vec<(usize, f64)>>> {
        self.fit(docs.clone())?;
        self.transform(docs)
    }

    fn idf(&self, term: &str) -> PyResult<Option<f64>> {
        Ok(self.fitted()?.idf_of(term))
    }

    #[getter]
    fn n_features(&self) -> PyResult<usize> {
        Ok(self.fitted()?.n_features())
    }
}

/// TF-IDF features followed by one of the six classifier families
/// (`svm`, `lr`, `dt`, `rf`, `nb`, `knn`). `params` overrides family
/// hyperparameters and `class_weight`.
#[pyclass(name = "TextClassifier", module = "foodaug")]
struct PyTextClassifier {
    features: TfidfConfig,
    config: ClassifierConfig,
    fitted: Option<(TfidfModel, ClassifierModel)>,
}

impl PyTextClassifier {
    fn fitted(&self) -> PyResult<&(TfidfModel, ClassifierModel)> {
        self.fitted
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("classifier is not fitted"))
    }
}

#[pymethods]
impl PyTextClassifier {
    #[new]
    #[pyo3(signature = (family, seed=0, params=None, features=None))]
    fn new(
        family: &str,
        seed: u64,
        params: Option<&Bound<'_, PyDict>>,
        features: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let family: Family = parse(family)?;
        let mut config = ClassifierConfig::new(family, seed);
        if let Some(p) = params {
            let mut merged = serde_json::to_value(&config).map_err(|e| PyValueError::new_err(e.to_string()))?;
            let extra: serde_json::Map<String, serde_json::Value> = from_py(p.as_any())?;
            merged.as_object_mut().expect("config serializes to an object").extend(extra);
            config = serde_json::from_value(merged).map_err(|e| PyValueError::new_err(e.to_string()))?;
        }
        config.validate().map_err(py_err)?;
        Ok(PyTextClassifier {
            features: tfidf_config(features)?,
            config,
            fitted: None,
        })
    }

    fn fit(&mut self, docs: Vec<String>, labels: Vec<String>) -> PyResult<()> {
        let tfidf = features::fit(&docs, &self.features).map_err(py_err)?;
        let model = models::train(&self.config, &tfidf.transform(&docs), &labels).map_err(py_err)?;
        self.fitted = Some((tfidf, model));
        Ok(())
    }

    fn predict(&self, docs: Vec<String>) -> PyResult<Vec<String>> {
        let (tfidf, model) = self.fitted()?;
        model.predict(&tfidf.transform(&docs)).map_err(py_err)
    }

    /// Per-class probabilities (columns follow `classes`); `None` for
    /// families without probabilistic output.
    fn predict_proba(&self, docs: Vec<String>) -> PyResult<Option<Vec<Vec<f64>>>> {
        let (tfidf, model) = self.fitted()?;
        model.predict_proba(&tfidf.transform(&docs)).map_err(py_err)
    }

    #[getter]
    fn classes(&self) -> PyResult<Vec<String>> {
        Ok(self.fitted()?.1.labels.clone())
    }

    #[getter]
    fn config(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.config)
    }

    /// The trained model as JSON, in the format written by the CLI.
    fn model_json(&self) -> PyResult<String> {
        self.fitted()?.1.to_json().map_err(py_err)
    }
}

fn augment_config(
    category: &str,
    technique: &str,
    seed: u64,
    threshold: Option<usize>,
    budget: Option<usize>,
) -> PyResult<AugmentConfig> {
    let mut cfg = AugmentConfig::preset(parse(category)?, parse(technique)?, seed);
    if let Some(t) = threshold {
        cfg.threshold = t;
    }
    if let Some(b) = budget {
        cfg.budget = b;
    }
    Ok(cfg)
}

/// Allocation of synthetic samples to minority classes. Threshold and budget
/// default to the published preset for the category.
#[pyfunction]
#[pyo3(signature = (records, category, threshold=None, budget=None, technique="SR"))]
fn build_plan(
    py: Python<'_>,
    records: &Bound<'_, PyAny>,
    category: &str,
    threshold: Option<usize>,
    budget: Option<usize>,
    technique: &str,
) -> PyResult<Py<PyAny>> {
    let train: Vec<IncidentRecord> = from_py(records)?;
    let cfg = augment_config(category, technique, 0, threshold, budget)?;
    let space = corpus::compute_label_space(&train, cfg.category);
    let plan = aug::build_plan(&cfg, &space, &train).map_err(py_err)?;
    to_py(py, &plan)
}

fn synonym_db(flat: &str) -> PyResult<SynonymDb> {
    SynonymDb::from_flat(flat.as_bytes()).map_err(py_err)
}

/// Training records followed by the synthetic records of the chosen technique.
/// SR needs `synonyms` (flat `word<TAB>syn1,syn2` text); CW needs `candidates`,
/// a list of insertion words.
#[pyfunction]
#[pyo3(signature = (records, category, technique, seed=0, threshold=None, budget=None, synonyms=None, candidates=None))]
#[allow(clippy::too_many_arguments)]
fn augment(
    py: Python<'_>,
    records: &Bound<'_, PyAny>,
    category: &str,
    technique: &str,
    seed: u64,
    threshold: Option<usize>,
    budget: Option<usize>,
    synonyms: Option<&str>,
    candidates: Option<Vec<String>>,
) -> PyResult<Py<PyAny>> {
    let train: Vec<IncidentRecord> = from_py(records)?;
    let cfg = augment_config(category, technique, seed, threshold, budget)?;
    let augmenter = match cfg.technique {
        Technique::SR => Augmenter::SynonymReplacement {
            db: synonym_db(synonyms.ok_or_else(|| PyValueError::new_err("SR needs synonyms"))?)?,
            rate: cfg.rate,
        },
        Technique::RW => Augmenter::RandomSwap {
            swap_fraction: cfg.swap_fraction,
        },
        Technique::CW => Augmenter::ContextualInsertion {
            provider: Box::new(TableProvider::new(
                candidates.ok_or_else(|| PyValueError::new_err("CW needs candidates"))?,
            )),
            rate: cfg.rate,
            top_k: cfg.top_k,
        },
    };
    let (_, out) = aug::augment_training(&cfg, &train, &augmenter).map_err(py_err)?;
    to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (text, synonyms, rate=0.1, seed=0))]
fn synonym_replace(text: &str, synonyms: &str, rate: f64, seed: u64) -> PyResult<String> {
    Ok(aug::synonym_replace(text, rate, &synonym_db(synonyms)?, seed))
}

#[pyfunction]
#[pyo3(signature = (text, n_swaps=None, seed=0))]
fn random_swap(text: &str, n_swaps: Option<usize>, seed: u64) -> String {
    let n = n_swaps.unwrap_or_else(|| aug::default_swaps(text.split_whitespace().count()));
    aug::random_swap(text, n, seed)
}

#[pyfunction]
#[pyo3(signature = (text, candidates, rate=0.1, top_k=5, seed=0))]
fn contextual_insert(text: &str, candidates: Vec<String>, rate: f64, top_k: usize, seed: u64) -> String {
    aug::contextual_insert(text, rate, top_k, &TableProvider::new(candidates), seed)
}

#[pyfunction]
fn f1_macro(truth: Vec<String>, pred: Vec<String>) -> PyResult<f64> {
    evaluate::f1_macro(&truth, &pred).map_err(py_err)
}

/// Hazard macro-F1 averaged with product macro-F1 on the samples whose
/// hazard was predicted correctly.
#[pyfunction]
fn task_score(
    py: Python<'_>,
    hazard_true: Vec<String>,
    product_true: Vec<String>,
    hazard_pred: Vec<String>,
    product_pred: Vec<String>,
) -> PyResult<Py<PyAny>> {
    let r = evaluate::task_score(&hazard_true, &product_true, &hazard_pred, &product_pred).map_err(py_err)?;
    to_py(py, &r)
}

/// Returns `(H, p)`.
#[pyfunction]
fn kruskal_wallis(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    let kw = evaluate::kruskal_wallis(&[&a, &b]).map_err(py_err)?;
    Ok((kw.h, kw.p))
}

#[pyfunction]
fn grouped_confusion(
    py: Python<'_>,
    truth: Vec<String>,
    pred: Vec<String>,
    minority_classes: BTreeSet<String>,
) -> PyResult<Py<PyAny>> {
    let g = evaluate::grouped_confusion(&truth, &pred, &minority_classes).map_err(py_err)?;
    to_py(py, &g)
}

/// Records of a comma- or tab-separated corpus file as dicts.
#[pyfunction]
fn load_corpus(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Py<PyAny>> {
    let loaded = corpus::load_corpus(&path, TableFormat::from_path(&path)).map_err(py_err)?;
    to_py(py, &loaded.records)
}

/// Seeded synthetic corpus for demos and tests.
#[pyfunction]
#[pyo3(signature = (n, first_id=0, seed=0))]
fn toy_corpus(py: Python<'_>, n: usize, first_id: usize, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &corpus::toy_corpus(n, first_id, seed))
}

#[pymodule]
fn foodaug(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTfidf>()?;
    m.add_class::<PyTextClassifier>()?;
    m.add_function(wrap_pyfunction!(clean_text, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(build_plan, m)?)?;
    m.add_function(wrap_pyfunction!(augment, m)?)?;
    m.add_function(wrap_pyfunction!(synonym_replace, m)?)?;
    m.add_function(wrap_pyfunction!(random_swap, m)?)?;
    m.add_function(wrap_pyfunction!(contextual_insert, m)?)?;
    m.add_function(wrap_pyfunction!(f1_macro, m)?)?;
    m.add_function(wrap_pyfunction!(task_score, m)?)?;
    m.add_function(wrap_pyfunction!(kruskal_wallis, m)?)?;
    m.add_function(wrap_pyfunction!(grouped_confusion, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(toy_corpus, m)?)?;
    m.add("TOY_SYNONYMS", corpus::TOY_SYNONYMS)?;
    m.add("CATEGORIES", Category::ALL.iter().map(|c| c.column()).collect::<Vec<_>>())?;
    Ok(())
}
