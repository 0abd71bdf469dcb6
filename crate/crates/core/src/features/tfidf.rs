use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ngrams, SparseMatrix, TfidfConfig};
use crate::error::{Error, Result};

/// Fitted vocabulary with smoothed idf weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub config: TfidfConfig,
    /// Term to column index; columns follow lexicographic term order.
    pub vocabulary: BTreeMap<String, usize>,
    /// Indexed by column.
    pub idf: Vec<f64>,
    pub n_docs: usize,
}

impl TfidfModel {
    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&c| self.idf[c])
    }

    pub fn transform<S: AsRef<str> + Sync>(&self, docs: &[S]) -> SparseMatrix {
        transform(self, docs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Learns the vocabulary and idf weights.
///
/// Terms are kept when `min_df <= df <= floor(max_df * N)`, then truncated to
/// `max_features` by descending document frequency with ties broken
/// lexicographically.
pub fn fit<S: AsRef<str> + Sync>(docs: &[S], config: &TfidfConfig) -> Result<TfidfModel> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::Config("cannot fit TF-IDF on zero documents".into()));
    }
    let n = docs.len();
    let per_doc: Vec<HashSet<String>> = docs
        .par_iter()
        .map(|d| ngrams(d.as_ref(), config).into_iter().collect())
        .collect();
    let mut df: HashMap<String, usize> = HashMap::new();
    for set in per_doc {
        for t in set {
            *df.entry(t).or_insert(0) += 1;
        }
    }

    let max_count = (config.max_df * n as f64 + 1e-9).floor() as usize;
    let mut kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, d)| d >= config.min_df && d <= max_count)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(cap) = config.max_features {
        kept.truncate(cap);
    }
    if kept.is_empty() {
        return Err(Error::Config(
            "empty vocabulary after document-frequency cutoffs".into(),
        ));
    }

    let dfs: BTreeMap<String, usize> = kept.into_iter().collect();
    let vocabulary = dfs.keys().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let idf = dfs.values().map(|&d| smoothed_idf(n, d)).collect();
    Ok(TfidfModel {
        config: config.clone(),
        vocabulary,
        idf,
        n_docs: n,
    })
}

/// Raw term counts times idf, each row L2-normalized. Unknown terms are ignored.
pub fn transform<S: AsRef<str> + Sync>(model: &TfidfModel, docs: &[S]) -> SparseMatrix {
    let rows: Vec<Vec<(usize, f64)>> = docs
        .par_iter()
        .map(|d| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for g in ngrams(d.as_ref(), &model.config) {
                if let Some(&c) = model.vocabulary.get(&g) {
                    *counts.entry(c).or_insert(0.0) += 1.0;
                }
            }
            let mut row: Vec<(usize, f64)> = counts
                .into_iter()
                .map(|(c, tf)| (c, tf * model.idf[c]))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    SparseMatrix::from_rows(model.n_features(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Analyzer;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_docs() -> Vec<&'static str> {
        vec!["aa bb", "aa"]
    }

    #[test]
    fn smoothed_idf_by_hand() {
        let m = fit(&two_docs(), &TfidfConfig::default()).unwrap();
        // ln(3/3) + 1 and ln(3/2) + 1
        assert_abs_diff_eq!(m.idf_of("aa").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.idf_of("bb").unwrap(), 1.405_465_108_108_164_4, epsilon = 1e-12);
    }

    #[test]
    fn min_df_drops_rare_term() {
        let cfg = TfidfConfig {
            min_df: 2,
            ..TfidfConfig::default()
        };
        let m = fit(&two_docs(), &cfg).unwrap();
        assert_eq!(m.vocabulary.keys().collect::<Vec<_>>(), ["aa"]);
    }

    #[test]
    fn max_features_keeps_highest_df() {
        let cfg = TfidfConfig {
            max_features: Some(1),
            ..TfidfConfig::default()
        };
        let m = fit(&two_docs(), &cfg).unwrap();
        assert_eq!(m.vocabulary.keys().collect::<Vec<_>>(), ["aa"]);
        // equal df: lexicographic order wins
        let m = fit(&["zz yy", "xx"], &cfg).unwrap();
        assert_eq!(m.vocabulary.keys().collect::<Vec<_>>(), ["xx"]);
    }

    #[test]
    fn max_df_cutoff_is_floor() {
        // N = 4, max_df = 0.5 -> df <= 2
        let docs = ["aa bb", "aa bb", "aa cc", "dd"];
        let cfg = TfidfConfig {
            max_df: 0.5,
            ..TfidfConfig::default()
        };
        let m = fit(&docs, &cfg).unwrap();
        assert_eq!(m.vocabulary.keys().collect::<Vec<_>>(), ["bb", "cc", "dd"]);
    }

    #[test]
    fn empty_vocabulary_is_error() {
        let cfg = TfidfConfig {
            min_df: 5,
            ..TfidfConfig::default()
        };
        assert!(matches!(fit(&two_docs(), &cfg), Err(Error::Config(_))));
        assert!(fit::<&str>(&[], &TfidfConfig::default()).is_err());
    }

    #[test]
    fn transform_by_hand() {
        let m = fit(&two_docs(), &TfidfConfig::default()).unwrap();
        let x = m.transform(&["aa aa bb", "", "zz"]);
        let (a, b) = (2.0_f64, 1.0 + 1.5_f64.ln());
        let norm = (a * a + b * b).sqrt();
        let row = x.row(0);
        assert_abs_diff_eq!(row.get(m.vocabulary["aa"]), a / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(row.get(m.vocabulary["bb"]), b / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(a / norm, 0.818_180_207, epsilon = 1e-9);
        assert_abs_diff_eq!(b / norm, 0.574_961_867, epsilon = 1e-9);
        assert_eq!(x.row(1).nnz(), 0);
        assert_eq!(x.row(2).nnz(), 0);
    }

    #[test]
    fn json_sidecar_round_trip() {
        let m = fit(&two_docs(), &TfidfConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tfidf.json");
        m.save(&p).unwrap();
        assert_eq!(TfidfModel::load(&p).unwrap(), m);
    }

    fn arb_config() -> impl Strategy<Value = TfidfConfig> {
        (any::<bool>(), 1usize..3, 0usize..2).prop_map(|(char, lo, extra)| TfidfConfig {
            analyzer: if char { Analyzer::Char } else { Analyzer::Word },
            ngram_range: (lo, lo + extra),
            ..TfidfConfig::default()
        })
    }

    proptest! {
        #[test]
        fn rows_are_unit_or_zero(
            docs in proptest::collection::vec("[abc ]{0,12}", 1..8),
            cfg in arb_config(),
        ) {
            if let Ok(m) = fit(&docs, &cfg) {
                let x = m.transform(&docs);
                for row in x.rows() {
                    let n = row.squared_norm().sqrt();
                    prop_assert!(n.abs() < 1e-9 || (n - 1.0).abs() < 1e-9);
                }
                // idf non-increasing in df
                let dfs: Vec<(usize, f64)> = m.vocabulary.iter().map(|(t, &c)| {
                    let df = docs.iter().filter(|d| ngrams(d, &cfg).contains(t)).count();
                    (df, m.idf[c])
                }).collect();
                for a in &dfs {
                    for b in &dfs {
                        if a.0 < b.0 { prop_assert!(a.1 >= b.1); }
                    }
                }
            }
        }

        #[test]
        fn fit_ignores_document_order(
            docs in proptest::collection::vec("[a-e ]{0,12}", 1..8),
            rot in 0usize..8,
        ) {
            let mut permuted = docs.clone();
            let k = rot % permuted.len();
            permuted.rotate_left(k);
            let cfg = TfidfConfig::default();
            match (fit(&docs, &cfg), fit(&permuted, &cfg)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "fit outcome depends on order"),
            }
        }
    }
}
