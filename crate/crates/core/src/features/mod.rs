//! Tokenization and TF-IDF vectorization.

mod sparse;
mod stopwords;
mod tfidf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sparse::{SparseMatrix, SparseRow};
pub use stopwords::{is_stopword, stopwords};
pub use tfidf::{fit, transform, TfidfModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analyzer {
    Word,
    Char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerKind {
    Default,
    StopwordFiltering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub analyzer: Analyzer,
    pub tokenizer: TokenizerKind,
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    /// Fraction of documents; terms with `df > floor(max_df * N)` are dropped.
    pub max_df: f64,
    /// `None` keeps every term passing the document-frequency cutoffs.
    pub max_features: Option<usize>,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            analyzer: Analyzer::Word,
            tokenizer: TokenizerKind::Default,
            ngram_range: (1, 1),
            min_df: 1,
            max_df: 1.0,
            max_features: None,
        }
    }
}

impl TfidfConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if lo < 1 || lo > hi {
            return Err(Error::Config(format!("invalid ngram_range ({lo}, {hi})")));
        }
        if self.min_df < 1 {
            return Err(Error::Config("min_df must be >= 1".into()));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(Error::Config(format!("max_df {} not in (0, 1]", self.max_df)));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be positive".into()));
        }
        Ok(())
    }
}

/// Splits a document into analyzer units.
///
/// The word analyzer lowercases and keeps maximal runs of at least two
/// alphanumeric characters (minus stop words for the filtering tokenizer).
/// The char analyzer yields every character of the lowercased text with
/// whitespace runs collapsed to one space.
pub fn tokenize(text: &str, config: &TfidfConfig) -> Vec<String> {
    let lower = text.to_lowercase();
    match config.analyzer {
        Analyzer::Word => {
            let tokens = lower
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| t.chars().nth(1).is_some());
            match config.tokenizer {
                TokenizerKind::Default => tokens.map(str::to_string).collect(),
                TokenizerKind::StopwordFiltering => tokens
                    .filter(|t| !is_stopword(t))
                    .map(str::to_string)
                    .collect(),
            }
        }
        Analyzer::Char => lower
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .chars()
            .map(String::from)
            .collect(),
    }
}

/// All n-grams of the document for the configured range.
pub fn ngrams(text: &str, config: &TfidfConfig) -> Vec<String> {
    let units = tokenize(text, config);
    let sep = match config.analyzer {
        Analyzer::Word => " ",
        Analyzer::Char => "",
    };
    let (lo, hi) = config.ngram_range;
    let mut out = Vec::new();
    for n in lo..=hi {
        if n > units.len() {
            break;
        }
        out.extend(units.windows(n).map(|w| w.join(sep)));
    }
    out
}
