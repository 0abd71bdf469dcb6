use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::{index, IndexedRandom};

use super::touch_count;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Context around one insertion gap.
#[derive(Debug, Clone, Copy)]
pub struct InsertionQuery<'a> {
    pub record_id: Option<&'a str>,
    pub left: &'a [&'a str],
    pub right: &'a [&'a str],
}

impl<'a> InsertionQuery<'a> {
    pub fn left_word(&self) -> Option<&'a str> {
        self.left.last().copied()
    }

    pub fn right_word(&self) -> Option<&'a str> {
        self.right.first().copied()
    }
}

/// Source of ranked words to insert at a gap. Implementations must be
/// deterministic for a given query.
pub trait InsertionProvider: Send + Sync {
    /// Up to `k` candidates, best first.
    fn candidates(&self, query: &InsertionQuery<'_>, k: usize) -> Vec<String>;

    fn is_empty(&self) -> bool;
}

/// Inserts words at `⌈rate·len⌉` distinct seeded gaps, each drawn uniformly
/// from the provider's top-`k` candidates. Gaps without candidates are skipped.
pub fn contextual_insert(
    text: &str,
    rate: f64,
    top_k: usize,
    provider: &dyn InsertionProvider,
    seed: u64,
) -> String {
    contextual_insert_keyed(text, None, rate, top_k, provider, seed)
}

/// As [`contextual_insert`], passing the source record id to the provider.
pub fn contextual_insert_keyed(
    text: &str,
    record_id: Option<&str>,
    rate: f64,
    top_k: usize,
    provider: &dyn InsertionProvider,
    seed: u64,
) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let n = touch_count(rate, tokens.len());
    if n == 0 || top_k == 0 {
        return text.to_string();
    }
    let mut rng = seeded(seed);
    let mut gaps: Vec<usize> = index::sample(&mut rng, tokens.len() + 1, n).into_vec();
    gaps.sort_unstable();

    let mut inserts: BTreeMap<usize, String> = BTreeMap::new();
    for g in gaps {
        let query = InsertionQuery {
            record_id,
            left: &tokens[..g],
            right: &tokens[g..],
        };
        let cands = provider.candidates(&query, top_k);
        if let Some(word) = cands.choose(&mut rng) {
            inserts.insert(g, word.clone());
        }
    }
    if inserts.is_empty() {
        return text.to_string();
    }
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + inserts.len());
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(w) = inserts.get(&i) {
            out.push(w);
        }
        out.push(tok);
    }
    if let Some(w) = inserts.get(&tokens.len()) {
        out.push(w);
    }
    out.join(" ")
}

/// Candidates looked up by the (left word, right word) pair around the gap,
/// lowercased, with `""` at text edges. Falls back to a default list.
#[derive(Debug, Clone, Default)]
pub struct TableProvider {
    table: HashMap<(String, String), Vec<String>>,
    fallback: Vec<String>,
}

impl TableProvider {
    pub fn new(fallback: Vec<String>) -> Self {
        TableProvider {
            table: HashMap::new(),
            fallback,
        }
    }

    pub fn with(mut self, left: &str, right: &str, words: &[&str]) -> Self {
        self.table.insert(
            (left.to_lowercase(), right.to_lowercase()),
            words.iter().map(|w| w.to_string()).collect(),
        );
        self
    }
}

impl InsertionProvider for TableProvider {
    fn candidates(&self, query: &InsertionQuery<'_>, k: usize) -> Vec<String> {
        let key = (
            query.left_word().unwrap_or("").to_lowercase(),
            query.right_word().unwrap_or("").to_lowercase(),
        );
        let list = self.table.get(&key).unwrap_or(&self.fallback);
        list.iter().take(k).cloned().collect()
    }

    fn is_empty(&self) -> bool {
        self.table.is_empty() && self.fallback.is_empty()
    }
}

/// Nearest neighbours of the summed unit vectors of the two words adjacent to
/// the gap, from a static embedding file (`word v1 v2 ...` per line, an
/// optional `count dim` header line is skipped).
#[derive(Debug, Clone, Default)]
pub struct EmbeddingProvider {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f32>>,
}

impl EmbeddingProvider {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut p = EmbeddingProvider::default();
        let mut dim = None;
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<f32> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("embedding line {}: {e}", n + 1)))?;
            if n == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
                continue;
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::Config(format!(
                        "embedding line {} has {} values, expected {d}",
                        n + 1,
                        values.len()
                    )))
                }
                _ => {}
            }
            p.insert(word, values);
        }
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(File::open(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn insert(&mut self, word: &str, mut vector: Vec<f32>) {
        let norm = vector.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 0.0 {
            vector.iter_mut().for_each(|v| *v /= norm);
        }
        let key = word.to_lowercase();
        match self.index.get(&key) {
            Some(&i) => self.vectors[i] = vector,
            None => {
                self.index.insert(key.clone(), self.words.len());
                self.words.push(key);
                self.vectors.push(vector);
            }
        }
    }

    fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index.get(&word.to_lowercase()).map(|&i| self.vectors[i].as_slice())
    }
}

impl InsertionProvider for EmbeddingProvider {
    fn candidates(&self, query: &InsertionQuery<'_>, k: usize) -> Vec<String> {
        let context: Vec<&str> = [query.left_word(), query.right_word()]
            .into_iter()
            .flatten()
            .collect();
        let vecs: Vec<&[f32]> = context.iter().filter_map(|w| self.vector(w)).collect();
        let Some(first) = vecs.first() else {
            return Vec::new();
        };
        let mut target = vec![0.0f32; first.len()];
        for v in &vecs {
            target.iter_mut().zip(v.iter()).for_each(|(t, x)| *t += x);
        }
        let excluded: Vec<String> = context.iter().map(|w| w.to_lowercase()).collect();
        let mut scored: Vec<(f32, &str)> = self
            .words
            .iter()
            .zip(&self.vectors)
            .filter(|(w, _)| !excluded.contains(w))
            .map(|(w, v)| (v.iter().zip(&target).map(|(a, b)| a * b).sum(), w.as_str()))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(k).map(|(_, w)| w.to_string()).collect()
    }

    fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Candidates produced by an external contextual model, keyed by record id.
/// The same ranked list is offered at every gap of that record.
#[derive(Debug, Clone, Default)]
pub struct ExternalCandidates {
    by_id: HashMap<String, Vec<String>>,
}

impl ExternalCandidates {
    pub fn new(by_id: HashMap<String, Vec<String>>) -> Self {
        ExternalCandidates { by_id }
    }

    /// JSON object `{ "<record id>": ["word", ...], ... }`.
    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        Ok(ExternalCandidates::new(serde_json::from_reader(reader)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(File::open(path).map_err(|e| Error::io(path, e))?)
    }
}

impl InsertionProvider for ExternalCandidates {
    fn candidates(&self, query: &InsertionQuery<'_>, k: usize) -> Vec<String> {
        query
            .record_id
            .and_then(|id| self.by_id.get(id))
            .map(|l| l.iter().take(k).cloned().collect())
            .unwrap_or_default()
    }

    fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}
