use rayon::prelude::*;

use super::{
    build_plan, contextual_insert_keyed, random_swap, synonym_replace, touch_count,
    AugmentConfig, AugmentationPlan, InsertionProvider, SynonymDb, Technique,
};
use crate::corpus::{compute_label_space, IncidentRecord};
use crate::error::{Error, Result};
use crate::rng::derive;

const TITLE_TAG: u64 = 0x7469_746c_6500_0000;
const TEXT_TAG: u64 = 0x7465_7874_0000_0000;

/// A technique together with the resources it needs.
pub enum Augmenter {
    SynonymReplacement {
        db: SynonymDb,
        rate: f64,
    },
    RandomSwap {
        swap_fraction: f64,
    },
    ContextualInsertion {
        provider: Box<dyn InsertionProvider>,
        rate: f64,
        top_k: usize,
    },
}

impl Augmenter {
    pub fn technique(&self) -> Technique {
        match self {
            Augmenter::SynonymReplacement { .. } => Technique::SR,
            Augmenter::RandomSwap { .. } => Technique::RW,
            Augmenter::ContextualInsertion { .. } => Technique::CW,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Augmenter::SynonymReplacement { db, .. } if db.is_empty() => {
                Err(Error::Config("synonym database is empty".into()))
            }
            Augmenter::ContextualInsertion { provider, .. } if provider.is_empty() => {
                Err(Error::Config("insertion candidate provider is empty".into()))
            }
            _ => Ok(()),
        }
    }

    /// Transforms one field of one record.
    pub fn transform(&self, text: &str, record_id: &str, seed: u64) -> String {
        match self {
            Augmenter::SynonymReplacement { db, rate } => synonym_replace(text, *rate, db, seed),
            Augmenter::RandomSwap { swap_fraction } => {
                let n = touch_count(*swap_fraction, text.split_whitespace().count());
                random_swap(text, n, seed)
            }
            Augmenter::ContextualInsertion {
                provider,
                rate,
                top_k,
            } => contextual_insert_keyed(text, Some(record_id), *rate, *top_k, provider.as_ref(), seed),
        }
    }
}

/// Generates the synthetic records of a plan, in plan order.
///
/// Copy `k` of the source at training row `r` uses the sub-seed
/// `derive(derive(seed, r), k)`, xor-ed with a per-field tag for title and text.
pub fn apply_plan(
    plan: &AugmentationPlan,
    train: &[IncidentRecord],
    augmenter: &Augmenter,
    seed: u64,
) -> Result<Vec<IncidentRecord>> {
    if plan.technique != augmenter.technique() {
        return Err(Error::Config(format!(
            "plan uses {} but augmenter implements {}",
            plan.technique,
            augmenter.technique()
        )));
    }
    if plan.is_empty() {
        return Ok(Vec::new());
    }
    augmenter.check()?;
    let entries: Vec<_> = plan.classes.iter().flat_map(|c| &c.sources).collect();
    for e in &entries {
        match train.get(e.row) {
            Some(r) if r.id == e.source_id => {}
            _ => {
                return Err(Error::Config(format!(
                    "plan source `{}` at row {} does not match the training list",
                    e.source_id, e.row
                )))
            }
        }
    }
    let tech = plan.technique.to_string().to_lowercase();
    let chunks: Vec<Vec<IncidentRecord>> = entries
        .par_iter()
        .map(|e| {
            let src = &train[e.row];
            let row_seed = derive(seed, e.row as u64);
            (0..e.copies)
                .map(|k| {
                    let s = derive(row_seed, k as u64);
                    IncidentRecord {
                        id: format!("{}_aug_{tech}_{k}", src.id),
                        title: augmenter.transform(&src.title, &src.id, s ^ TITLE_TAG),
                        text: augmenter.transform(&src.text, &src.id, s ^ TEXT_TAG),
                        is_synthetic: true,
                        ..src.clone()
                    }
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Plans and applies augmentation, returning the plan and the training list
/// followed by its synthetic records.
pub fn augment_training(
    config: &AugmentConfig,
    train: &[IncidentRecord],
    augmenter: &Augmenter,
) -> Result<(AugmentationPlan, Vec<IncidentRecord>)> {
    let space = compute_label_space(train, config.category);
    let plan = build_plan(config, &space, train)?;
    let synthetic = apply_plan(&plan, train, augmenter, config.seed)?;
    let mut out = train.to_vec();
    out.extend(synthetic);
    Ok((plan, out))
}
