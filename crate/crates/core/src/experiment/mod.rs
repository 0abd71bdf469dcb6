//! Experiment manifests and the end-to-end pipeline: cleaning, augmentation,
//! training, prediction, scoring, tuning, significance comparison and reports.

mod analysis;
mod pipeline;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, Technique};
use crate::corpus::{load_corpus, Category, DatasetSplit, Field, IncidentRecord, TableFormat};
use crate::error::{Error, Result, StageExt};
use crate::features::TfidfConfig;
use crate::models::ClassifierConfig;
use crate::tune::SamplerKind;

pub use analysis::{
    compare_runs, generate_external_configs, report_runs, score_file, tune, CompareCell, CompareReport,
    CompareRow, GroupedRow, ReportRow, RunReport, TuneOutcome,
};
pub use pipeline::{
    augment, clean_file, predict, run, train, AugmentSummary, AugmentSummaryRow, CategoryScore,
    RunSummary, SeedScores, SubtaskScore,
};

/// Seeds of the three repeated runs per configuration.
pub const PRESET_SEEDS: [u64; 3] = [2024, 2025, 2026];

fn default_true() -> bool {
    true
}

fn all_categories() -> Vec<Category> {
    Category::ALL.to_vec()
}

fn preset_seeds() -> Vec<u64> {
    PRESET_SEEDS.to_vec()
}

fn default_rate() -> f64 {
    0.1
}

fn default_top_k() -> usize {
    5
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub threshold: usize,
    pub budget: usize,
}

/// Augmentation settings and the resources the technique needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub technique: Technique,
    /// Synonym database for SR: flat `word<TAB>syn,...` file or a WordNet `data.*` file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
    /// Static word vectors for CW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    /// Precomputed CW candidates per record id (JSON); preferred over embeddings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<PathBuf>,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_rate")]
    pub swap_fraction: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Per-category replacements for the preset threshold and budget.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<Category, Budget>,
}

impl AugmentationSpec {
    pub fn new(technique: Technique) -> Self {
        AugmentationSpec {
            technique,
            synonyms: None,
            embeddings: None,
            candidates: None,
            rate: default_rate(),
            swap_fraction: default_rate(),
            top_k: default_top_k(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn config(&self, category: Category, seed: u64) -> AugmentConfig {
        let mut cfg = AugmentConfig::preset(category, self.technique, seed);
        if let Some(b) = self.overrides.get(&category) {
            cfg.threshold = b.threshold;
            cfg.budget = b.budget;
        }
        cfg.rate = self.rate;
        cfg.swap_fraction = self.swap_fraction;
        cfg.top_k = self.top_k;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Dev,
    #[default]
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub sampler: SamplerKind,
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec {
            n_trials: default_trials(),
            sampler: SamplerKind::Random,
        }
    }
}

/// One experiment: data, field, optional augmentation, vectorizer,
/// classifier, seeds and output directory. Relative paths are resolved
/// against the manifest's directory when loaded from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub name: String,
    pub corpus: CorpusPaths,
    #[serde(default = "default_true")]
    pub clean: bool,
    pub field: Field,
    #[serde(default = "all_categories")]
    pub categories: Vec<Category>,
    /// `None` runs the baseline.
    #[serde(default)]
    pub augmentation: Option<AugmentationSpec>,
    #[serde(default)]
    pub features: TfidfConfig,
    pub classifier: ClassifierConfig,
    #[serde(default = "preset_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub eval_split: EvalSplit,
    /// Train on train + dev.
    #[serde(default)]
    pub train_with_dev: bool,
    #[serde(default)]
    pub tuning: TuningSpec,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentManifest {
    pub fn from_json(s: &str) -> Result<Self> {
        let m: ExperimentManifest = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        resolve(base, &mut m.corpus.train);
        for p in [&mut m.corpus.dev, &mut m.corpus.test].into_iter().flatten() {
            resolve(base, p);
        }
        if let Some(a) = &mut m.augmentation {
            for p in [&mut a.synonyms, &mut a.embeddings, &mut a.candidates].into_iter().flatten() {
                resolve(base, p);
            }
        }
        resolve(base, &mut m.output_dir);
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("manifest name is empty".into()));
        }
        if self.categories.is_empty() {
            return Err(Error::Config("manifest lists no categories".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("manifest lists no seeds".into()));
        }
        self.features.validate()?;
        self.classifier.validate()?;
        if let Some(a) = &self.augmentation {
            for &c in &self.categories {
                a.config(c, 0).validate()?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn technique_name(&self) -> String {
        self.augmentation
            .as_ref()
            .map_or("none".to_string(), |a| a.technique.to_string())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(field) = o.field {
            self.field = field;
        }
        if let Some(category) = o.category {
            self.categories = vec![category];
        }
        match o.technique {
            None => {}
            Some(None) => self.augmentation = None,
            Some(Some(t)) => match &mut self.augmentation {
                Some(a) => a.technique = t,
                None => self.augmentation = Some(AugmentationSpec::new(t)),
            },
        }
        if let Some(n) = o.n_trials {
            self.tuning.n_trials = n;
        }
        if let Some(s) = o.sampler {
            self.tuning.sampler = s;
        }
        self.validate()
    }
}

/// Command-line replacements for manifest settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub field: Option<Field>,
    pub category: Option<Category>,
    /// `Some(None)` switches augmentation off.
    pub technique: Option<Option<Technique>>,
    pub n_trials: Option<usize>,
    pub sampler: Option<SamplerKind>,
}

fn load_part(path: &Path, clean: bool) -> Result<Vec<IncidentRecord>> {
    let loaded = load_corpus(path, TableFormat::from_path(path))?;
    if !loaded.report.is_clean() {
        warn!(
            "{}: {} rows skipped, {} flagged",
            path.display(),
            loaded.report.counts.get("skipped").copied().unwrap_or(0),
            loaded.report.counts.get("flagged").copied().unwrap_or(0)
        );
    }
    Ok(if clean {
        loaded.records.iter().map(IncidentRecord::cleaned).collect()
    } else {
        loaded.records
    })
}

/// Loads (and optionally cleans) every corpus part named by the manifest.
pub fn load_data(m: &ExperimentManifest) -> Result<DatasetSplit> {
    let train = load_part(&m.corpus.train, m.clean).stage("load corpus")?;
    let dev = match &m.corpus.dev {
        Some(p) => load_part(p, m.clean).stage("load corpus")?,
        None => Vec::new(),
    };
    let test = match &m.corpus.test {
        Some(p) => load_part(p, m.clean).stage("load corpus")?,
        None => Vec::new(),
    };
    DatasetSplit::new(train, dev, test).stage("load corpus")
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
