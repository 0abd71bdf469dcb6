use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use log::warn;
use rand::seq::{index, IndexedRandom};

use super::touch_count;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Word to synonym list, part-of-speech agnostic. Keys are lowercase;
/// synonyms keep the casing of their source and use `_` for multi-word entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymDb {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, synonym: &str) {
        let key = word.to_lowercase();
        if synonym.eq_ignore_ascii_case(&key) || synonym.is_empty() {
            return;
        }
        let list = self.entries.entry(key).or_default();
        if !list.iter().any(|s| s == synonym) {
            list.push(synonym.to_string());
        }
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .filter(|l| !l.is_empty())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of words in the longest synonym.
    pub fn max_synonym_words(&self) -> usize {
        self.entries
            .values()
            .flatten()
            .map(|s| s.split(['_', ' ']).filter(|w| !w.is_empty()).count())
            .max()
            .unwrap_or(1)
    }

    /// Flat format: `word<TAB>syn1,syn2,...` per line; `#` starts a comment.
    pub fn from_flat<R: Read>(reader: R) -> Result<Self> {
        let mut db = SynonymDb::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<synonym database>", e))?;
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, syns)) = line.split_once('\t') else {
                warn!("synonym line {} has no tab separator; skipped", n + 1);
                continue;
            };
            for s in syns.split(',').map(str::trim) {
                db.insert(word.trim(), s);
            }
        }
        Ok(db)
    }

    /// Reads one or more WordNet `data.<pos>` files. Every lemma of a synset
    /// becomes a synonym of every other lemma of that synset.
    pub fn from_wordnet_data<R: Read>(reader: R) -> Result<Self> {
        let mut db = SynonymDb::new();
        db.extend_wordnet_data(reader)?;
        Ok(db)
    }

    pub fn extend_wordnet_data<R: Read>(&mut self, reader: R) -> Result<()> {
        for line in BufReader::new(reader).lines() {
            let line = line.map_err(|e| Error::io("<wordnet data>", e))?;
            // license header lines start with two spaces
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                continue;
            }
            let Ok(w_cnt) = usize::from_str_radix(fields[3], 16) else {
                continue;
            };
            let lemmas: Vec<&str> = (0..w_cnt)
                .filter_map(|i| fields.get(4 + 2 * i).copied())
                .map(|w| w.split('(').next().unwrap_or(w))
                .collect();
            for a in &lemmas {
                for b in &lemmas {
                    if a != b {
                        self.insert(&a.replace('_', " "), b);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let is_wordnet = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("data."));
        if is_wordnet {
            Self::from_wordnet_data(file)
        } else {
            Self::from_flat(file)
        }
    }
}

/// Splits a token into (leading punctuation, core, trailing punctuation).
fn split_punct(token: &str) -> (&str, &str, &str) {
    let start = token
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map_or(token.len(), |(i, _)| i);
    let end = token
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map_or(start, |(i, c)| i + c.len_utf8());
    (&token[..start], &token[start..end], &token[end..])
}

/// Replaces `⌈rate·len⌉` randomly chosen tokens that have database entries
/// (fewer if not enough do) with a randomly chosen synonym.
pub fn synonym_replace(text: &str, rate: f64, db: &SynonymDb, seed: u64) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let (_, core, _) = split_punct(t);
            !core.is_empty() && db.get(core).is_some()
        })
        .map(|(i, _)| i)
        .collect();
    let n = touch_count(rate, tokens.len()).min(eligible.len());
    if n == 0 {
        return text.to_string();
    }
    let mut rng = seeded(seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|k| eligible[k])
        .collect();
    chosen.sort_unstable();
    let mut out: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    for i in chosen {
        let (pre, core, post) = split_punct(tokens[i]);
        let syns = db.get(core).expect("eligible token has synonyms");
        let pick = syns.choose(&mut rng).expect("non-empty synonym list");
        out[i] = format!("{pre}{}{post}", pick.replace('_', " "));
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_db() -> SynonymDb {
        let flat = "# neighbourhood used in the augmentation example\n\
                    unsafe\tinsecure\n\
                    due\timputable\n\
                    possible\tpotential\n\
                    stella\tFrank_Stella\n";
        SynonymDb::from_flat(flat.as_bytes()).unwrap()
    }

    #[test]
    fn flat_loader() {
        let db = table_db();
        assert_eq!(db.len(), 4);
        assert_eq!(db.get("Unsafe").unwrap(), ["insecure"]);
        assert_eq!(db.max_synonym_words(), 2);
    }

    #[test]
    fn wordnet_loader() {
        let data = "  1 This software and database is being provided\n\
            00001740 00 a 03 able 0 capable(a) 0 fit 0 000 | having the necessary means\n\
            00002098 00 a 02 unable 0 not_able 0 000 | lacking necessary means\n";
        let db = SynonymDb::from_wordnet_data(data.as_bytes()).unwrap();
        assert_eq!(db.get("able").unwrap(), ["capable", "fit"]);
        assert_eq!(db.get("unable").unwrap(), ["not_able"]);
        assert_eq!(db.get("not able").unwrap(), ["unable"]);
    }

    #[test]
    fn replaces_with_full_rate() {
        let db = table_db();
        let out = synonym_replace("unsafe due to possible presence", 1.0, &db, 3);
        assert_eq!(out, "insecure imputable to potential presence");
    }

    #[test]
    fn multiword_synonym_and_punctuation() {
        let db = table_db();
        let out = synonym_replace("(Stella) beer", 1.0, &db, 0);
        assert_eq!(out, "(Frank Stella) beer");
    }

    #[test]
    fn no_hits_unchanged() {
        let db = table_db();
        let s = "glass  particles in beer";
        assert_eq!(synonym_replace(s, 0.5, &db, 1), s);
        assert_eq!(synonym_replace("unsafe", 0.0, &db, 1), "unsafe");
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(split_punct("\"beer!\""), ("\"", "beer", "!\""));
        assert_eq!(split_punct("--"), ("--", "", ""));
    }

    proptest! {
        #[test]
        fn deterministic_and_bounded(
            s in "(unsafe|due|possible|stella|beer|glass)( (unsafe|due|possible|stella|beer|glass)){0,12}",
            rate in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let db = table_db();
            let a = synonym_replace(&s, rate, &db, seed);
            prop_assert_eq!(&a, &synonym_replace(&s, rate, &db, seed));
            let n_in = s.split_whitespace().count();
            let n_out = a.split_whitespace().count();
            let touched = touch_count(rate, n_in);
            prop_assert!(n_out >= n_in);
            prop_assert!(n_out <= n_in + touched * (db.max_synonym_words() - 1));
        }
    }
}
