//! Delimited-table reading and writing for incident records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::IncidentRecord;
use crate::error::{Error, Result};

const MANDATORY: [&str; 6] = [
    "title",
    "text",
    "hazard-category",
    "product-category",
    "hazard",
    "product",
];

/// Field delimiter of a corpus table. Both variants use `"` quoting and a header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Comma,
    Tab,
}

impl TableFormat {
    /// `.tsv` and `.tab` files are tab-separated, everything else comma-separated.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") || ext.eq_ignore_ascii_case("tab") => {
                TableFormat::Tab
            }
            _ => TableFormat::Comma,
        }
    }

    pub fn delimiter(self) -> u8 {
        match self {
            TableFormat::Comma => b',',
            TableFormat::Tab => b'\t',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// Row could not be parsed or had the wrong number of fields; skipped.
    Malformed,
    /// A mandatory field was empty; the record was kept.
    EmptyField,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIssue {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub id: Option<String>,
    pub kind: IssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub row_errors: Vec<RowIssue>,
    pub counts: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn flagged_ids(&self) -> Vec<&str> {
        self.row_errors
            .iter()
            .filter(|e| e.kind == IssueKind::EmptyField)
            .filter_map(|e| e.id.as_deref())
            .collect()
    }

    pub fn is_clean(&self) -> bool {
        self.row_errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub records: Vec<IncidentRecord>,
    pub report: ValidationReport,
}

fn normalize_header(h: &str) -> String {
    h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase().replace('_', "-")
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" | "" => Some(false),
        _ => None,
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: TableFormat) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, format)
}

/// Reads records in file order. Rows with a wrong field count are skipped and
/// reported; rows with empty mandatory fields are kept and flagged.
pub fn read_corpus<R: Read>(reader: R, format: TableFormat) -> Result<LoadedCorpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(normalize_header).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(MANDATORY) {
        *slot = find(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let id_col = find("id");
    let synthetic_col = find("is-synthetic");

    let mut records = Vec::new();
    let mut report = ValidationReport::default();
    let mut rows = 0usize;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        rows += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                warn!("skipping unreadable row {row_no}: {e}");
                report.row_errors.push(RowIssue {
                    row: row_no,
                    id: None,
                    kind: IssueKind::Malformed,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let id = match id_col {
            Some(c) => row.get(c).unwrap_or("").to_string(),
            None => i.to_string(),
        };
        if row.len() != headers.len() {
            warn!(
                "skipping row {row_no}: expected {} fields, found {}",
                headers.len(),
                row.len()
            );
            report.row_errors.push(RowIssue {
                row: row_no,
                id: Some(id),
                kind: IssueKind::Malformed,
                detail: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let is_synthetic = match synthetic_col.map(|c| &row[c]) {
            None => false,
            Some(v) => match parse_flag(v) {
                Some(b) => b,
                None => {
                    report.row_errors.push(RowIssue {
                        row: row_no,
                        id: Some(id),
                        kind: IssueKind::Malformed,
                        detail: format!("invalid is_synthetic value `{v}`"),
                    });
                    continue;
                }
            },
        };
        let field = |k: usize| row[columns[k]].to_string();
        let rec = IncidentRecord {
            id,
            title: field(0),
            text: field(1),
            hazard_category: field(2),
            product_category: field(3),
            hazard: field(4),
            product: field(5),
            is_synthetic,
        };
        let empty: Vec<&str> = MANDATORY
            .iter()
            .zip(columns)
            .filter(|(_, c)| row[*c].trim().is_empty())
            .map(|(name, _)| *name)
            .collect();
        if !empty.is_empty() {
            report.row_errors.push(RowIssue {
                row: row_no,
                id: Some(rec.id.clone()),
                kind: IssueKind::EmptyField,
                detail: format!("empty {}", empty.join(", ")),
            });
        }
        records.push(rec);
    }

    let skipped = report
        .row_errors
        .iter()
        .filter(|e| e.kind == IssueKind::Malformed)
        .count();
    report.counts.insert("rows".into(), rows);
    report.counts.insert("records".into(), records.len());
    report.counts.insert("skipped".into(), skipped);
    report.counts.insert("flagged".into(), report.row_errors.len() - skipped);
    Ok(LoadedCorpus { records, report })
}

/// Writes records in the canonical column order, including `is_synthetic`.
pub fn write_corpus_to<W: Write>(
    writer: W,
    records: &[IncidentRecord],
    format: TableFormat,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(format.delimiter())
        .from_writer(writer);
    wtr.write_record(
        ["id"]
            .into_iter()
            .chain(MANDATORY)
            .chain(["is_synthetic"]),
    )?;
    for r in records {
        wtr.write_record([
            r.id.as_str(),
            &r.title,
            &r.text,
            &r.hazard_category,
            &r.product_category,
            &r.hazard,
            &r.product,
            if r.is_synthetic { "true" } else { "false" },
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<corpus writer>", e))?;
    Ok(())
}

pub fn write_corpus(
    path: impl AsRef<Path>,
    records: &[IncidentRecord],
    format: TableFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus_to(std::io::BufWriter::new(file), records, format)
}
