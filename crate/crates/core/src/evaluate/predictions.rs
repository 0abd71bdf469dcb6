//! Prediction files: `id,hazard_pred,product_pred`, one file per level.
//! Files produced by other systems (e.g. fine-tuned transformers) are scored
//! exactly like the ones written here.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{task_score, ScoreReport};
use crate::corpus::{IncidentRecord, Level};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub hazard_pred: String,
    pub product_pred: String,
}

/// Gold and predicted labels for one level, aligned by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub ids: Vec<String>,
    pub hazard_true: Vec<String>,
    pub product_true: Vec<String>,
    pub hazard_pred: Vec<String>,
    pub product_pred: Vec<String>,
}

impl PredictionSet {
    pub fn score(&self) -> Result<ScoreReport> {
        task_score(
            &self.hazard_true,
            &self.product_true,
            &self.hazard_pred,
            &self.product_pred,
        )
    }
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase().replace('-', "_"))
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (id, hz, pr) = (col("id")?, col("hazard_pred")?, col("product_pred")?);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        rows.push(PredictionRow {
            id: get(id),
            hazard_pred: get(hz),
            product_pred: get(pr),
        });
    }
    Ok(rows)
}

pub fn read_predictions_file(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    let path = path.as_ref();
    read_predictions(File::open(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_predictions<W: Write>(writer: W, rows: &[PredictionRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "hazard_pred", "product_pred"])?;
    for r in rows {
        wtr.write_record([&r.id, &r.hazard_pred, &r.product_pred])?;
    }
    wtr.flush().map_err(|e| Error::io("<prediction writer>", e))?;
    Ok(())
}

/// Aligns predictions to gold records by id (gold order) and scores them.
/// Every gold id must have a prediction; extra predictions are ignored.
pub fn score_against_gold(
    gold: &[IncidentRecord],
    preds: &[PredictionRow],
    level: Level,
) -> Result<(PredictionSet, ScoreReport)> {
    let by_id: HashMap<&str, &PredictionRow> = preds.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != preds.len() {
        return Err(Error::Config("duplicate ids in prediction file".into()));
    }
    let (hc, pc) = level.categories();
    let mut set = PredictionSet {
        ids: Vec::with_capacity(gold.len()),
        hazard_true: Vec::with_capacity(gold.len()),
        product_true: Vec::with_capacity(gold.len()),
        hazard_pred: Vec::with_capacity(gold.len()),
        product_pred: Vec::with_capacity(gold.len()),
    };
    for g in gold {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| Error::Config(format!("no prediction for id `{}`", g.id)))?;
        set.ids.push(g.id.clone());
        set.hazard_true.push(g.label(hc).to_string());
        set.product_true.push(g.label(pc).to_string());
        set.hazard_pred.push(p.hazard_pred.clone());
        set.product_pred.push(p.product_pred.clone());
    }
    if preds.len() > gold.len() {
        warn!("{} predictions without gold record ignored", preds.len() - gold.len());
    }
    let report = set.score()?;
    Ok((set, report))
}
