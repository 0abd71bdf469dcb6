use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::pipeline::{prepared_records, tuning_inputs, RunSummary};
use super::{read_json, write_json, ExperimentManifest};
use crate::corpus::{load_corpus, Category, Field, Level, TableFormat};
use crate::error::{Error, Result, StageExt};
use crate::evaluate::{f1_macro, kruskal_wallis_2group, read_predictions_file, score_against_gold, ScoreReport};
use crate::features::{fit, TfidfConfig};
use crate::models::{self, ClassifierConfig, Family};
use crate::tune::{
    classifier_from_point, external_model_config, make_sampler, run_search, tfidf_from_point, SamplerKind,
    SearchResult, SearchSpace,
};

/// Scores an external prediction file against a gold corpus.
pub fn score_file(predictions: &Path, gold: &Path, level: Level) -> Result<ScoreReport> {
    let preds = read_predictions_file(predictions).stage("load predictions")?;
    let gold = load_corpus(gold, TableFormat::from_path(gold)).stage("load corpus")?;
    let (_, report) = score_against_gold(&gold.records, &preds, level).stage("score")?;
    Ok(report)
}

const COLUMN_ORDER: [&str; 6] = ["hazard-category", "product-category", "hazard", "product", "ST1", "ST2"];

fn ordered_columns<'a>(present: impl Iterator<Item = &'a String>) -> Vec<String> {
    let present: Vec<&String> = present.collect();
    COLUMN_ORDER
        .iter()
        .filter(|c| present.iter().any(|p| p == c))
        .map(|c| c.to_string())
        .collect()
}

fn load_summary(dir: &Path) -> Result<RunSummary> {
    read_json(&dir.join("scores.json"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub h: f64,
    pub p: f64,
    pub baseline_mean: f64,
    pub variant_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub variant: String,
    pub cells: BTreeMap<String, CompareCell>,
}

/// Raw Kruskal-Wallis p-values of each variant against the baseline, per
/// category and subtask, computed over the per-seed scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub baseline: String,
    pub columns: Vec<String>,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<24}", format!("vs {}", self.baseline));
        for c in &self.columns {
            let _ = write!(out, " {c:>16}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<24}", r.variant);
            for c in &self.columns {
                match r.cells.get(c) {
                    Some(cell) => {
                        let _ = write!(out, " {:>16.4}", cell.p);
                    }
                    None => {
                        let _ = write!(out, " {:>16}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn compare_runs(baseline: &Path, variants: &[PathBuf]) -> Result<CompareReport> {
    let base = load_summary(baseline).stage("compare")?;
    let columns = ordered_columns(base.mean.keys());
    let mut rows = Vec::new();
    for dir in variants {
        let v = load_summary(dir).stage("compare")?;
        let mut cells = BTreeMap::new();
        for c in &columns {
            let a = base.column(c);
            let b = v.column(c);
            if b.is_empty() {
                continue;
            }
            let kw = kruskal_wallis_2group(&a, &b)
                .map_err(|e| Error::Config(format!("{} vs {} on {c}: {e}", base.name, v.name)))
                .stage("compare")?;
            cells.insert(
                c.clone(),
                CompareCell {
                    h: kw.h,
                    p: kw.p,
                    baseline_mean: a.iter().sum::<f64>() / a.len() as f64,
                    variant_mean: b.iter().sum::<f64>() / b.len() as f64,
                },
            );
        }
        rows.push(CompareRow { variant: v.name, cells });
    }
    Ok(CompareReport {
        baseline: base.name,
        columns,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub family: Family,
    pub field: Field,
    pub technique: String,
    pub n_seeds: usize,
    /// Mean over seeds, by column.
    pub scores: BTreeMap<String, f64>,
}

/// Correct predictions of minority and majority gold classes, summed over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedRow {
    pub name: String,
    pub category: Category,
    pub minority_classes: usize,
    pub minority_correct: usize,
    pub minority_total: usize,
    pub majority_correct: usize,
    pub majority_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub grouped: Vec<GroupedRow>,
}

impl RunReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<24} {:>5} {:>5} {:>5}", "run", "model", "field", "aug");
        for c in &self.columns {
            let _ = write!(out, " {c:>16}");
        }
        out.push('\n');
        for r in &self.rows {
            let field = match r.field {
                Field::Title => "title",
                Field::Text => "text",
            };
            let _ = write!(
                out,
                "{:<24} {:>5} {:>5} {:>5}",
                r.name,
                r.family.short_name(),
                field,
                r.technique
            );
            for c in &self.columns {
                match r.scores.get(c) {
                    Some(v) => {
                        let _ = write!(out, " {v:>16.4}");
                    }
                    None => {
                        let _ = write!(out, " {:>16}", "-");
                    }
                }
            }
            out.push('\n');
        }
        if !self.grouped.is_empty() {
            out.push('\n');
            let _ = writeln!(
                out,
                "{:<24} {:<18} {:>9} {:>18} {:>18}",
                "run", "category", "minority", "minority correct", "majority correct"
            );
            for g in &self.grouped {
                let _ = writeln!(
                    out,
                    "{:<24} {:<18} {:>9} {:>18} {:>18}",
                    g.name,
                    g.category.column(),
                    g.minority_classes,
                    format!("{}/{}", g.minority_correct, g.minority_total),
                    format!("{}/{}", g.majority_correct, g.majority_total)
                );
            }
        }
        out
    }
}

/// One row per run with mean category and subtask scores, plus the grouped
/// confusion summary.
pub fn report_runs(dirs: &[PathBuf]) -> Result<RunReport> {
    let mut rows = Vec::new();
    let mut grouped = Vec::new();
    let mut all_columns: Vec<String> = Vec::new();
    for dir in dirs {
        let s = load_summary(dir).stage("report")?;
        all_columns.extend(s.mean.keys().cloned());
        let mut by_cat: BTreeMap<Category, GroupedRow> = BTreeMap::new();
        for seed in &s.seeds {
            for (&c, cs) in &seed.categories {
                let g = by_cat.entry(c).or_insert_with(|| GroupedRow {
                    name: s.name.clone(),
                    category: c,
                    minority_classes: cs.grouped.minority_classes.len(),
                    minority_correct: 0,
                    minority_total: 0,
                    majority_correct: 0,
                    majority_total: 0,
                });
                g.minority_correct += cs.grouped.minority_correct;
                g.minority_total += cs.grouped.minority_total;
                g.majority_correct += cs.grouped.majority_correct;
                g.majority_total += cs.grouped.majority_total;
            }
        }
        grouped.extend(by_cat.into_values());
        rows.push(ReportRow {
            name: s.name.clone(),
            family: s.family,
            field: s.field,
            technique: s.technique.clone(),
            n_seeds: s.seeds.len(),
            scores: s.mean.clone(),
        });
    }
    Ok(RunReport {
        columns: ordered_columns(all_columns.iter()),
        rows,
        grouped,
    })
}

/// Best configuration found for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub category: Category,
    pub best_index: usize,
    pub best_objective: Option<f64>,
    pub features: Option<TfidfConfig>,
    pub classifier: Option<ClassifierConfig>,
    pub n_trials: usize,
}

/// Searches vectorizer and classifier settings per category, maximising
/// dev-set macro-F1. Uses the manifest's first seed, family, class weight
/// and augmentation. Writes `tune/<category>.json` (trial log) and
/// `tune/<category>.best.json`.
pub fn tune(m: &ExperimentManifest) -> Result<Vec<TuneOutcome>> {
    m.validate().stage("load manifest")?;
    let (train, dev, augmenter) = tuning_inputs(m)?;
    let family = m.classifier.family();
    let seed = m.seeds[0];
    let space = SearchSpace::for_family(family);
    let dev_docs: Vec<&str> = dev.iter().map(|r| r.field(m.field)).collect();
    let mut outcomes = Vec::new();
    for &category in &m.categories {
        let records = prepared_records(m, &train, augmenter.as_ref(), category, seed).stage("augment")?;
        let docs: Vec<&str> = records.iter().map(|r| r.field(m.field)).collect();
        let y: Vec<&str> = records.iter().map(|r| r.label(category)).collect();
        let gold: Vec<&str> = dev.iter().map(|r| r.label(category)).collect();
        info!("tuning {family} on {category}: {} trials", m.tuning.n_trials);
        let result: SearchResult = run_search(&space, m.tuning.n_trials, m.tuning.sampler, seed, |point| {
            let tcfg = tfidf_from_point(point)?;
            let ccfg = classifier_from_point(point, family, m.classifier.class_weight, seed)?;
            let tfidf = fit(&docs, &tcfg)?;
            let model = models::train(&ccfg, &tfidf.transform(&docs), &y)?;
            let pred = model.predict(&tfidf.transform(&dev_docs))?;
            f1_macro(&gold, &pred.iter().map(String::as_str).collect::<Vec<_>>())
        })
        .stage("tune")?;
        let best = &result.best;
        let outcome = TuneOutcome {
            category,
            best_index: result.best_index,
            best_objective: result.best_objective,
            features: tfidf_from_point(best).ok(),
            classifier: classifier_from_point(best, family, m.classifier.class_weight, seed).ok(),
            n_trials: result.trials.len(),
        };
        let dir = m.output_dir.join("tune");
        write_json(&dir.join(format!("{}.json", category.column())), &result).stage("write outputs")?;
        write_json(&dir.join(format!("{}.best.json", category.column())), &outcome).stage("write outputs")?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Samples fine-tuning configurations for an externally trained transformer
/// and writes them to `<out_dir>/<model>/trial-<i>.json`.
pub fn generate_external_configs(
    model: &str,
    n_trials: usize,
    sampler: SamplerKind,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<serde_json::Value>> {
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be >= 1".into())).stage("tune");
    }
    let space = SearchSpace::transformer();
    let mut s = make_sampler(sampler, seed);
    let mut configs = Vec::with_capacity(n_trials);
    for i in 0..n_trials {
        let choice = s.sample(&space, &[]);
        let cfg = external_model_config(&space.point(&choice), model, seed);
        write_json(&out_dir.join(model).join(format!("trial-{i}.json")), &cfg).stage("write outputs")?;
        configs.push(cfg);
    }
    Ok(configs)
}
