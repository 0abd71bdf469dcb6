//! Budgeted augmentation of minority classes.
//!
//! Classes whose training support is below a threshold `τ` each receive `S`
//! synthetic records. The budget is spread over the class's records in
//! training-set order: every source gets `⌊S/m⌋` copies and the last one
//! absorbs the remainder. Each copy is produced by one of three word-level
//! augmenters ([`synonym_replace`], [`random_swap`], [`contextual_insert`]).

mod apply;
mod contextual;
mod plan;
mod stats;
mod swap;
mod synonyms;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::error::{Error, Result};

pub use apply::{apply_plan, augment_training, Augmenter};
pub use contextual::{
    contextual_insert, contextual_insert_keyed, EmbeddingProvider, ExternalCandidates,
    InsertionProvider, InsertionQuery, TableProvider,
};
pub use plan::{build_plan, AugmentationPlan, ClassPlan, PlanEntry};
pub use stats::{class_stats, ClassStats};
pub use swap::{default_swaps, random_swap};
pub use synonyms::{synonym_replace, SynonymDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Technique {
    /// Synonym replacement from a lexical database.
    SR,
    /// Random swap of adjacent words.
    RW,
    /// Contextual word insertion.
    CW,
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::SR => "SR",
            Technique::RW => "RW",
            Technique::CW => "CW",
        })
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SR" => Ok(Technique::SR),
            "RW" => Ok(Technique::RW),
            "CW" => Ok(Technique::CW),
            other => Err(Error::Config(format!("unknown technique `{other}`"))),
        }
    }
}

fn default_rate() -> f64 {
    0.1
}

fn default_top_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub category: Category,
    /// Classes with fewer training records than this are augmented (τ).
    pub threshold: usize,
    /// Synthetic records added per minority class (S).
    pub budget: usize,
    pub technique: Technique,
    pub seed: u64,
    /// Fraction of tokens touched by SR and CW.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// RW swaps per field as a fraction of the token count (rounded up).
    #[serde(default = "default_rate")]
    pub swap_fraction: f64,
    /// CW picks among this many top-ranked candidates.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

impl AugmentConfig {
    /// Threshold and budget used for each category in the published experiments:
    /// coarse categories (200, 200), hazard (100, 100), product (100, 50).
    pub fn preset(category: Category, technique: Technique, seed: u64) -> Self {
        let (threshold, budget) = match category {
            Category::HazardCategory | Category::ProductCategory => (200, 200),
            Category::Hazard => (100, 100),
            Category::Product => (100, 50),
        };
        AugmentConfig {
            category,
            threshold,
            budget,
            technique,
            seed,
            rate: default_rate(),
            swap_fraction: default_rate(),
            top_k: default_top_k(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold < 1 || self.budget < 1 {
            return Err(Error::Config("threshold and budget must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rate) || !(0.0..=1.0).contains(&self.swap_fraction) {
            return Err(Error::Config("augmentation rates must lie in [0, 1]".into()));
        }
        if self.top_k < 1 {
            return Err(Error::Config("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Number of tokens to touch for a given rate: `⌈rate·len⌉`, at least one
/// when the rate is positive and the text is non-empty.
pub(crate) fn touch_count(rate: f64, len: usize) -> usize {
    if rate <= 0.0 || len == 0 {
        return 0;
    }
    ((rate * len as f64).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = AugmentConfig::preset(Category::HazardCategory, Technique::SR, 1);
        assert_eq!((p.threshold, p.budget), (200, 200));
        let p = AugmentConfig::preset(Category::ProductCategory, Technique::SR, 1);
        assert_eq!((p.threshold, p.budget), (200, 200));
        let p = AugmentConfig::preset(Category::Hazard, Technique::SR, 1);
        assert_eq!((p.threshold, p.budget), (100, 100));
        let p = AugmentConfig::preset(Category::Product, Technique::SR, 1);
        assert_eq!((p.threshold, p.budget), (100, 50));
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validation() {
        let mut p = AugmentConfig::preset(Category::Hazard, Technique::RW, 0);
        p.budget = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn touch_counts() {
        assert_eq!(touch_count(0.1, 0), 0);
        assert_eq!(touch_count(0.0, 10), 0);
        assert_eq!(touch_count(0.1, 3), 1);
        assert_eq!(touch_count(0.1, 11), 2);
    }

    #[test]
    fn technique_parse() {
        assert_eq!("sr".parse::<Technique>().unwrap(), Technique::SR);
        assert!("BT".parse::<Technique>().is_err());
    }
}
