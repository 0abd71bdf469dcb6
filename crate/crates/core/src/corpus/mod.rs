//! Incident records, label spaces and dataset splits.

mod clean;
mod table;
mod toy;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clean::clean_text;
pub use table::{
    load_corpus, read_corpus, write_corpus, write_corpus_to, IssueKind, LoadedCorpus, RowIssue,
    TableFormat, ValidationReport,
};
pub use toy::{toy_corpus, TOY_SYNONYMS};

/// One of the four annotated label categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    HazardCategory,
    ProductCategory,
    Hazard,
    Product,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::HazardCategory,
        Category::ProductCategory,
        Category::Hazard,
        Category::Product,
    ];

    /// Column name used in corpus files.
    pub fn column(self) -> &'static str {
        match self {
            Category::HazardCategory => "hazard-category",
            Category::ProductCategory => "product-category",
            Category::Hazard => "hazard",
            Category::Product => "product",
        }
    }

    pub fn is_coarse(self) -> bool {
        matches!(self, Category::HazardCategory | Category::ProductCategory)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "hazard-category" => Ok(Category::HazardCategory),
            "product-category" => Ok(Category::ProductCategory),
            "hazard" => Ok(Category::Hazard),
            "product" => Ok(Category::Product),
            other => Err(Error::Config(format!("unknown category `{other}`"))),
        }
    }
}

/// Granularity of the two subtasks: coarse pairs the two category columns,
/// fine pairs the hazard and product columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Coarse,
    Fine,
}

impl Level {
    pub fn categories(self) -> (Category, Category) {
        match self {
            Level::Coarse => (Category::HazardCategory, Category::ProductCategory),
            Level::Fine => (Category::Hazard, Category::Product),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coarse" | "st1" => Ok(Level::Coarse),
            "fine" | "st2" => Ok(Level::Fine),
            other => Err(Error::Config(format!("unknown level `{other}`"))),
        }
    }
}

/// Which free-text field of a record feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Text,
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "title" => Ok(Field::Title),
            "text" => Ok(Field::Text),
            other => Err(Error::Config(format!("unknown field `{other}`"))),
        }
    }
}

/// A single food-recall announcement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub id: String,
    pub title: String,
    pub text: String,
    pub hazard_category: String,
    pub product_category: String,
    pub hazard: String,
    pub product: String,
    #[serde(default)]
    pub is_synthetic: bool,
}

impl IncidentRecord {
    pub fn label(&self, category: Category) -> &str {
        match category {
            Category::HazardCategory => &self.hazard_category,
            Category::ProductCategory => &self.product_category,
            Category::Hazard => &self.hazard,
            Category::Product => &self.product,
        }
    }

    pub fn field(&self, field: Field) -> &str {
        match field {
            Field::Title => &self.title,
            Field::Text => &self.text,
        }
    }

    /// Applies [`clean_text`] to both free-text fields.
    pub fn cleaned(&self) -> IncidentRecord {
        IncidentRecord {
            title: clean_text(&self.title),
            text: clean_text(&self.text),
            ..self.clone()
        }
    }
}

/// Observed classes of one category with their training support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    pub category: Category,
    /// Sorted lexicographically.
    pub classes: Vec<String>,
    pub counts: BTreeMap<String, usize>,
}

impl LabelSpace {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, class: &str) -> usize {
        self.counts.get(class).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub fn compute_label_space(records: &[IncidentRecord], category: Category) -> LabelSpace {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.label(category).to_string()).or_insert(0) += 1;
    }
    LabelSpace {
        category,
        classes: counts.keys().cloned().collect(),
        counts,
    }
}

/// Train/dev/test partition of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<IncidentRecord>,
    pub dev: Vec<IncidentRecord>,
    pub test: Vec<IncidentRecord>,
}

impl DatasetSplit {
    /// Builds a split, checking id disjointness and that synthetic records
    /// only appear in `train`.
    pub fn new(
        train: Vec<IncidentRecord>,
        dev: Vec<IncidentRecord>,
        test: Vec<IncidentRecord>,
    ) -> Result<Self> {
        let split = DatasetSplit { train, dev, test };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, part) in [("dev", &self.dev), ("test", &self.test)] {
            if let Some(r) = part.iter().find(|r| r.is_synthetic) {
                return Err(Error::InvalidSplit(format!(
                    "synthetic record `{}` found in {name}",
                    r.id
                )));
            }
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for (name, part) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            let mut local: HashSet<&str> = HashSet::new();
            for r in part {
                if seen.contains(r.id.as_str()) {
                    return Err(Error::InvalidSplit(format!(
                        "id `{}` in {name} also appears in an earlier split",
                        r.id
                    )));
                }
                local.insert(&r.id);
            }
            seen.extend(local);
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn record(id: &str, title: &str, text: &str, labels: [&str; 4]) -> IncidentRecord {
    IncidentRecord {
        id: id.to_string(),
        title: title.to_string(),
        text: text.to_string(),
        hazard_category: labels[0].to_string(),
        product_category: labels[1].to_string(),
        hazard: labels[2].to_string(),
        product: labels[3].to_string(),
        is_synthetic: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_labels() {
        let recs: Vec<_> = ["A", "A", "B", "A"]
            .iter()
            .enumerate()
            .map(|(i, l)| record(&i.to_string(), "", "", [l, "p", "h", "q"]))
            .collect();
        let space = compute_label_space(&recs, Category::HazardCategory);
        assert_eq!(space.classes, vec!["A", "B"]);
        assert_eq!(space.count("A"), 3);
        assert_eq!(space.count("B"), 1);
        assert_eq!(space.total(), 4);
    }

    #[test]
    fn category_parsing() {
        assert_eq!("hazard_category".parse::<Category>().unwrap(), Category::HazardCategory);
        assert_eq!("product".parse::<Category>().unwrap(), Category::Product);
        assert!("colour".parse::<Category>().is_err());
    }

    #[test]
    fn split_rejects_overlap_and_synthetic_outside_train() {
        let a = record("1", "t", "x", ["a", "b", "c", "d"]);
        let b = record("2", "t", "x", ["a", "b", "c", "d"]);
        assert!(DatasetSplit::new(vec![a.clone()], vec![b.clone()], vec![]).is_ok());
        assert!(DatasetSplit::new(vec![a.clone()], vec![a.clone()], vec![]).is_err());
        let mut s = b.clone();
        s.is_synthetic = true;
        assert!(DatasetSplit::new(vec![a.clone(), s.clone()], vec![], vec![]).is_ok());
        assert!(DatasetSplit::new(vec![a], vec![], vec![s]).is_err());
    }

    proptest! {
        #[test]
        fn label_counts_sum_to_len(labels in proptest::collection::vec("[a-d]", 1..50)) {
            let recs: Vec<_> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| record(&i.to_string(), "", "", [l, l, l, l]))
                .collect();
            for c in Category::ALL {
                let space = compute_label_space(&recs, c);
                prop_assert_eq!(space.total(), recs.len());
                let mut sorted = space.classes.clone();
                sorted.sort();
                prop_assert_eq!(sorted, space.classes.clone());
            }
        }
    }
}
