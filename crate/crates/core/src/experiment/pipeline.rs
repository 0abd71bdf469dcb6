use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::{load_data, read_json, write_json, AugmentationSpec, EvalSplit, ExperimentManifest};
use crate::augment::{
    augment_training, class_stats, AugmentConfig, AugmentationPlan, Augmenter, ClassStats, EmbeddingProvider,
    ExternalCandidates, SynonymDb, Technique,
};
use crate::corpus::{
    compute_label_space, load_corpus, write_corpus, Category, DatasetSplit, Field, IncidentRecord, Level,
    TableFormat, ValidationReport,
};
use crate::error::{Error, Result, StageExt};
use crate::evaluate::{f1_macro, grouped_confusion, task_score, write_predictions, GroupedConfusion, PredictionRow};
use crate::features::{fit, TfidfModel};
use crate::models::{self, ClassifierModel, Family};

/// Cleans the title and text of every record of a corpus file.
pub fn clean_file(input: &Path, output: &Path) -> Result<ValidationReport> {
    let loaded = load_corpus(input, TableFormat::from_path(input)).stage("load corpus")?;
    let cleaned: Vec<IncidentRecord> = loaded.records.iter().map(IncidentRecord::cleaned).collect();
    write_corpus(output, &cleaned, TableFormat::from_path(output)).stage("write outputs")?;
    Ok(loaded.report)
}

fn build_augmenter(spec: &AugmentationSpec) -> Result<Augmenter> {
    Ok(match spec.technique {
        Technique::SR => {
            let path = spec
                .synonyms
                .as_ref()
                .ok_or_else(|| Error::Config("SR needs a `synonyms` database path".into()))?;
            Augmenter::SynonymReplacement {
                db: SynonymDb::load(path)?,
                rate: spec.rate,
            }
        }
        Technique::RW => Augmenter::RandomSwap {
            swap_fraction: spec.swap_fraction,
        },
        Technique::CW => {
            let provider: Box<dyn crate::augment::InsertionProvider> =
                match (&spec.candidates, &spec.embeddings) {
                    (Some(c), _) => Box::new(ExternalCandidates::load(c)?),
                    (None, Some(e)) => Box::new(EmbeddingProvider::load(e)?),
                    (None, None) => {
                        return Err(Error::Config(
                            "CW needs `candidates` or `embeddings` resources".into(),
                        ))
                    }
                };
            Augmenter::ContextualInsertion {
                provider,
                rate: spec.rate,
                top_k: spec.top_k,
            }
        }
    })
}

/// Training records for one category, after augmentation if configured.
struct Prepared {
    records: Vec<IncidentRecord>,
    plan: Option<AugmentationPlan>,
    minority: BTreeSet<String>,
}

fn base_training(m: &ExperimentManifest, data: &DatasetSplit) -> Vec<IncidentRecord> {
    let mut base = data.train.clone();
    if m.train_with_dev {
        base.extend(data.dev.iter().cloned());
    }
    base
}

fn prepare(
    m: &ExperimentManifest,
    base: &[IncidentRecord],
    augmenter: Option<&Augmenter>,
    category: Category,
    seed: u64,
) -> Result<Prepared> {
    match (&m.augmentation, augmenter) {
        (Some(spec), Some(aug)) => {
            let cfg = spec.config(category, seed);
            let (plan, records) = augment_training(&cfg, base, aug)?;
            Ok(Prepared {
                minority: plan.minority_classes(),
                records,
                plan: Some(plan),
            })
        }
        _ => {
            // the classes the preset would augment
            let threshold = AugmentConfig::preset(category, Technique::RW, seed).threshold;
            let space = compute_label_space(base, category);
            let minority = space
                .counts
                .iter()
                .filter(|(_, &c)| c < threshold)
                .map(|(k, _)| k.clone())
                .collect();
            Ok(Prepared {
                records: base.to_vec(),
                plan: None,
                minority,
            })
        }
    }
}

fn eval_records<'a>(m: &ExperimentManifest, data: &'a DatasetSplit) -> Result<(&'a [IncidentRecord], &'static str)> {
    let (records, name) = match m.eval_split {
        EvalSplit::Test => (&data.test, "test"),
        EvalSplit::Dev => (&data.dev, "dev"),
    };
    if records.is_empty() {
        return Err(Error::Config(format!("manifest has no records in the {name} split")));
    }
    Ok((records, name))
}

fn seed_dir(m: &ExperimentManifest, seed: u64) -> PathBuf {
    m.output_dir.join(format!("seed-{seed}"))
}

fn model_paths(m: &ExperimentManifest, seed: u64, category: Category) -> (PathBuf, PathBuf, PathBuf) {
    let dir = seed_dir(m, seed).join("models");
    let c = category.column();
    (
        dir.join(format!("{c}.model.json")),
        dir.join(format!("{c}.tfidf.json")),
        dir.join(format!("{c}.meta.json")),
    )
}

/// Facts about one trained category model needed at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CategoryMeta {
    category: Category,
    field: Field,
    train_size: usize,
    synthetic: usize,
    minority_classes: BTreeSet<String>,
}

fn texts(records: &[IncidentRecord], field: Field) -> Vec<&str> {
    records.iter().map(|r| r.field(field)).collect()
}

fn write_manifest(m: &ExperimentManifest) -> Result<()> {
    let dir = &m.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, m.to_json()).map_err(|e| Error::io(path, e))
}

/// Fits a vectorizer and classifier per (seed, category) and saves them under
/// `<output_dir>/seed-<seed>/models/`.
pub fn train(m: &ExperimentManifest) -> Result<()> {
    m.validate().stage("load manifest")?;
    write_manifest(m).stage("write outputs")?;
    let data = load_data(m)?;
    let augmenter = m
        .augmentation
        .as_ref()
        .map(build_augmenter)
        .transpose()
        .stage("augment")?;
    let base = base_training(m, &data);
    for &seed in &m.seeds {
        for &category in &m.categories {
            info!("training {category} with seed {seed}");
            let prep = prepare(m, &base, augmenter.as_ref(), category, seed).stage("augment")?;
            let docs = texts(&prep.records, m.field);
            let tfidf = fit(&docs, &m.features).stage("features")?;
            let x = tfidf.transform(&docs);
            let y: Vec<&str> = prep.records.iter().map(|r| r.label(category)).collect();
            let mut cfg = m.classifier.clone();
            cfg.seed = seed;
            let model = models::train(&cfg, &x, &y).stage("train")?;
            let meta = CategoryMeta {
                category,
                field: m.field,
                train_size: prep.records.len(),
                synthetic: prep.records.iter().filter(|r| r.is_synthetic).count(),
                minority_classes: prep.minority,
            };
            let (mp, tp, meta_path) = model_paths(m, seed, category);
            (|| {
                write_json(&meta_path, &meta)?;
                model.save(&mp)?;
                tfidf.save(&tp)
            })()
            .stage("write outputs")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub f1_macro: f64,
    pub grouped: GroupedConfusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtaskScore {
    pub f1_hazard: f64,
    pub f1_product_on_correct_hazard: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScores {
    pub seed: u64,
    pub split: String,
    pub n_samples: usize,
    pub categories: BTreeMap<Category, CategoryScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub st1: Option<SubtaskScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub st2: Option<SubtaskScore>,
}

impl SeedScores {
    /// Scores by report column: category names, `ST1`, `ST2`.
    pub fn columns(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self
            .categories
            .iter()
            .map(|(c, s)| (c.column().to_string(), s.f1_macro))
            .collect();
        if let Some(s) = self.st1 {
            out.insert("ST1".into(), s.combined);
        }
        if let Some(s) = self.st2 {
            out.insert("ST2".into(), s.combined);
        }
        out
    }
}

/// Per-seed scores of one run plus their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub family: Family,
    pub field: Field,
    pub technique: String,
    pub seeds: Vec<SeedScores>,
    pub mean: BTreeMap<String, f64>,
}

impl RunSummary {
    /// Score of every seed for a report column.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.seeds.iter().filter_map(|s| s.columns().get(name).copied()).collect()
    }
}

fn labelled(records: &[IncidentRecord], categories: &[Category]) -> bool {
    records
        .iter()
        .all(|r| categories.iter().all(|&c| !r.label(c).trim().is_empty()))
}

/// Applies the saved models to the evaluation split (or `input`), writes
/// predictions per seed and, when gold labels are present, scores.
pub fn predict(m: &ExperimentManifest, input: Option<&Path>) -> Result<Option<RunSummary>> {
    m.validate().stage("load manifest")?;
    let (owned, split_name);
    let records: &[IncidentRecord] = match input {
        Some(p) => {
            let loaded = load_corpus(p, TableFormat::from_path(p)).stage("load corpus")?;
            owned = if m.clean {
                loaded.records.iter().map(IncidentRecord::cleaned).collect()
            } else {
                loaded.records
            };
            split_name = "input";
            &owned
        }
        None => {
            let data = load_data(m)?;
            let (r, name) = eval_records(m, &data).stage("load corpus")?;
            owned = r.to_vec();
            split_name = name;
            &owned
        }
    };
    let scored = labelled(records, &m.categories);
    let docs = texts(records, m.field);
    let mut all_scores = Vec::new();
    for &seed in &m.seeds {
        let mut preds: BTreeMap<Category, Vec<String>> = BTreeMap::new();
        let mut metas: BTreeMap<Category, CategoryMeta> = BTreeMap::new();
        for &category in &m.categories {
            let (mp, tp, meta_path) = model_paths(m, seed, category);
            let (model, tfidf, meta) = (|| {
                Ok::<_, Error>((
                    ClassifierModel::load(&mp)?,
                    TfidfModel::load(&tp)?,
                    read_json::<CategoryMeta>(&meta_path)?,
                ))
            })()
            .stage("load model")?;
            if meta.field != m.field {
                return Err(Error::Config(format!(
                    "model for {category} was trained on the {:?} field",
                    meta.field
                )))
                .stage("load model");
            }
            let x = tfidf.transform(&docs);
            preds.insert(category, model.predict(&x).stage("predict")?);
            metas.insert(category, meta);
        }
        let dir = seed_dir(m, seed);
        write_prediction_files(&dir, records, &preds).stage("write outputs")?;
        if scored {
            let s = score_seed(seed, split_name, records, &preds, &metas).stage("score")?;
            write_json(&dir.join("scores.json"), &s).stage("write outputs")?;
            all_scores.push(s);
        }
    }
    if !scored {
        return Ok(None);
    }
    let summary = summarize(m, all_scores);
    write_json(&m.output_dir.join("scores.json"), &summary).stage("write outputs")?;
    Ok(Some(summary))
}

fn summarize(m: &ExperimentManifest, seeds: Vec<SeedScores>) -> RunSummary {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in &seeds {
        for (k, v) in s.columns() {
            let e = sums.entry(k).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    RunSummary {
        name: m.name.clone(),
        family: m.classifier.family(),
        field: m.field,
        technique: m.technique_name(),
        seeds,
        mean: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
    }
}

fn write_prediction_files(
    dir: &Path,
    records: &[IncidentRecord],
    preds: &BTreeMap<Category, Vec<String>>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("predictions.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    let cats: Vec<Category> = preds.keys().copied().collect();
    wtr.write_record(std::iter::once("id").chain(cats.iter().map(|c| c.column())))?;
    for (i, r) in records.iter().enumerate() {
        wtr.write_record(std::iter::once(r.id.as_str()).chain(cats.iter().map(|c| preds[c][i].as_str())))?;
    }
    wtr.flush().map_err(|e| Error::io(&path, e))?;

    for (level, name) in [(Level::Coarse, "coarse"), (Level::Fine, "fine")] {
        let (hc, pc) = level.categories();
        let (Some(hp), Some(pp)) = (preds.get(&hc), preds.get(&pc)) else {
            continue;
        };
        let rows: Vec<PredictionRow> = records
            .iter()
            .enumerate()
            .map(|(i, r)| PredictionRow {
                id: r.id.clone(),
                hazard_pred: hp[i].clone(),
                product_pred: pp[i].clone(),
            })
            .collect();
        let path = dir.join(format!("predictions-{name}.csv"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_predictions(BufWriter::new(file), &rows)?;
    }
    Ok(())
}

fn score_seed(
    seed: u64,
    split: &str,
    records: &[IncidentRecord],
    preds: &BTreeMap<Category, Vec<String>>,
    metas: &BTreeMap<Category, CategoryMeta>,
) -> Result<SeedScores> {
    let mut categories = BTreeMap::new();
    let gold = |c: Category| -> Vec<&str> { records.iter().map(|r| r.label(c)).collect() };
    for (&c, p) in preds {
        let truth = gold(c);
        let pred: Vec<&str> = p.iter().map(String::as_str).collect();
        categories.insert(
            c,
            CategoryScore {
                f1_macro: f1_macro(&truth, &pred)?,
                grouped: grouped_confusion(&truth, &pred, &metas[&c].minority_classes)?,
            },
        );
    }
    let subtask = |level: Level| -> Result<Option<SubtaskScore>> {
        let (hc, pc) = level.categories();
        let (Some(hp), Some(pp)) = (preds.get(&hc), preds.get(&pc)) else {
            return Ok(None);
        };
        let r = task_score(&gold(hc), &gold(pc), &as_strs(hp), &as_strs(pp))?;
        Ok(Some(SubtaskScore {
            f1_hazard: r.f1_hazard,
            f1_product_on_correct_hazard: r.f1_product_on_correct_hazard,
            combined: r.combined,
        }))
    };
    Ok(SeedScores {
        seed,
        split: split.to_string(),
        n_samples: records.len(),
        categories,
        st1: subtask(Level::Coarse)?,
        st2: subtask(Level::Fine)?,
    })
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Trains, then predicts and scores the evaluation split.
pub fn run(m: &ExperimentManifest) -> Result<Option<RunSummary>> {
    train(m)?;
    predict(m, None)
}

/// Class-support statistics before and after augmentation for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSummaryRow {
    pub category: Category,
    pub threshold: usize,
    pub budget: usize,
    pub minority_classes: usize,
    pub synthetic: usize,
    pub before: ClassStats,
    pub after: ClassStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub technique: Technique,
    pub seed: u64,
    pub rows: Vec<AugmentSummaryRow>,
}

impl AugmentSummary {
    /// Before/after statistics, one block per category.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>6} {:>6} {:>9} {:>9} {:>6} {:>6} {:>6} {:>6} {:>7} {:>8}",
            "category", "stage", "count", "mean", "std", "min", "25%", "50%", "75%", "max", "total"
        );
        for r in &self.rows {
            for (stage, s) in [("before", &r.before), ("after", &r.after)] {
                let _ = writeln!(
                    out,
                    "{:<18} {:>6} {:>6} {:>9.2} {:>9.2} {:>6} {:>6} {:>6} {:>6} {:>7} {:>8}",
                    r.category.column(),
                    stage,
                    s.count,
                    s.mean,
                    s.std,
                    s.min,
                    s.q25,
                    s.q50,
                    s.q75,
                    s.max,
                    s.total
                );
            }
        }
        out
    }
}

/// Augments the training split for every manifest category with the first
/// seed. Writes `augment/<category>/{train.csv,plan.json}` and
/// `augment/summary.json`.
pub fn augment(m: &ExperimentManifest) -> Result<AugmentSummary> {
    m.validate().stage("load manifest")?;
    let spec = m
        .augmentation
        .as_ref()
        .ok_or_else(|| Error::Config("manifest has no augmentation config (baseline run)".into()))
        .stage("augment")?;
    write_manifest(m).stage("write outputs")?;
    let data = load_data(m)?;
    let augmenter = build_augmenter(spec).stage("augment")?;
    let base = base_training(m, &data);
    let seed = m.seeds[0];
    let mut rows = Vec::new();
    for &category in &m.categories {
        let prep = prepare(m, &base, Some(&augmenter), category, seed).stage("augment")?;
        let plan = prep.plan.expect("augmentation configured");
        let dir = m.output_dir.join("augment").join(category.column());
        (|| {
            write_json(&dir.join("plan.json"), &plan)?;
            write_corpus(dir.join("train.csv"), &prep.records, TableFormat::Comma)
        })()
        .stage("write outputs")?;
        rows.push(AugmentSummaryRow {
            category,
            threshold: plan.threshold,
            budget: plan.budget,
            minority_classes: plan.classes.len(),
            synthetic: plan.total(),
            before: class_stats(&compute_label_space(&base, category)),
            after: class_stats(&compute_label_space(&prep.records, category)),
        });
    }
    let summary = AugmentSummary {
        technique: spec.technique,
        seed,
        rows,
    };
    write_json(&m.output_dir.join("augment").join("summary.json"), &summary).stage("write outputs")?;
    Ok(summary)
}

pub(crate) fn tuning_inputs(
    m: &ExperimentManifest,
) -> Result<(Vec<IncidentRecord>, Vec<IncidentRecord>, Option<Augmenter>)> {
    let data = load_data(m)?;
    if data.dev.is_empty() {
        return Err(Error::Config("tuning needs a dev corpus".into())).stage("tune");
    }
    let augmenter = m
        .augmentation
        .as_ref()
        .map(build_augmenter)
        .transpose()
        .stage("augment")?;
    Ok((data.train.clone(), data.dev.clone(), augmenter))
}

pub(crate) fn prepared_records(
    m: &ExperimentManifest,
    train: &[IncidentRecord],
    augmenter: Option<&Augmenter>,
    category: Category,
    seed: u64,
) -> Result<Vec<IncidentRecord>> {
    Ok(prepare(m, train, augmenter, category, seed)?.records)
}
