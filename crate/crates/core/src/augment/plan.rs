use serde::{Deserialize, Serialize};

use super::{AugmentConfig, Technique};
use crate::corpus::{Category, IncidentRecord, LabelSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Position of the source record in the training list.
    pub row: usize,
    pub source_id: String,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPlan {
    pub class: String,
    pub support: usize,
    pub sources: Vec<PlanEntry>,
}

impl ClassPlan {
    pub fn total(&self) -> usize {
        self.sources.iter().map(|e| e.copies).sum()
    }
}

/// Synthetic copies to generate per minority-class record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub category: Category,
    pub threshold: usize,
    pub budget: usize,
    pub technique: Technique,
    pub classes: Vec<ClassPlan>,
}

impl AugmentationPlan {
    pub fn total(&self) -> usize {
        self.classes.iter().map(ClassPlan::total).sum()
    }

    pub fn minority_classes(&self) -> std::collections::BTreeSet<String> {
        self.classes.iter().map(|c| c.class.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Selects the classes with support below the threshold and spreads the
/// per-class budget over their records in training order.
pub fn build_plan(
    config: &AugmentConfig,
    space: &LabelSpace,
    train: &[IncidentRecord],
) -> Result<AugmentationPlan> {
    config.validate()?;
    if space.category != config.category {
        return Err(Error::Config(format!(
            "label space is for {} but augmentation targets {}",
            space.category, config.category
        )));
    }
    let mut classes = Vec::new();
    for class in &space.classes {
        let support = space.count(class);
        if support >= config.threshold {
            continue;
        }
        let rows: Vec<usize> = train
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label(config.category) == class)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(Error::Config(format!(
                "class `{class}` has no record in the training list"
            )));
        }
        let m = rows.len();
        let per_source = config.budget / m;
        let last = config.budget - per_source * (m - 1);
        let sources = rows
            .iter()
            .enumerate()
            .map(|(k, &row)| PlanEntry {
                row,
                source_id: train[row].id.clone(),
                copies: if k + 1 == m { last } else { per_source },
            })
            .collect();
        classes.push(ClassPlan {
            class: class.clone(),
            support,
            sources,
        });
    }
    Ok(AugmentationPlan {
        category: config.category,
        threshold: config.threshold,
        budget: config.budget,
        technique: config.technique,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_label_space, record};
    use proptest::prelude::*;

    fn corpus(counts: &[(&str, usize)]) -> Vec<IncidentRecord> {
        let mut out = Vec::new();
        for (label, n) in counts {
            for _ in 0..*n {
                let id = out.len().to_string();
                out.push(record(&id, "t", "x", [label, "p", "h", "q"]));
            }
        }
        out
    }

    fn cfg(threshold: usize, budget: usize) -> AugmentConfig {
        AugmentConfig {
            threshold,
            budget,
            ..AugmentConfig::preset(Category::HazardCategory, Technique::RW, 0)
        }
    }

    fn plan_for(counts: &[(&str, usize)], threshold: usize, budget: usize) -> AugmentationPlan {
        let train = corpus(counts);
        let space = compute_label_space(&train, Category::HazardCategory);
        build_plan(&cfg(threshold, budget), &space, &train).unwrap()
    }

    #[test]
    fn three_sources_two_hundred() {
        let plan = plan_for(&[("A", 3)], 200, 200);
        let copies: Vec<_> = plan.classes[0].sources.iter().map(|e| e.copies).collect();
        assert_eq!(copies, [66, 66, 68]);
    }

    #[test]
    fn majority_class_not_planned() {
        assert!(plan_for(&[("A", 250)], 200, 200).is_empty());
    }

    #[test]
    fn single_source_absorbs_budget() {
        let plan = plan_for(&[("A", 1)], 100, 100);
        assert_eq!(plan.classes[0].sources[0].copies, 100);
    }

    #[test]
    fn budget_smaller_than_support() {
        // floor(4/7) = 0, last source takes all 4
        let plan = plan_for(&[("A", 7)], 100, 4);
        let copies: Vec<_> = plan.classes[0].sources.iter().map(|e| e.copies).collect();
        assert_eq!(copies, [0, 0, 0, 0, 0, 0, 4]);
    }

    #[test]
    fn sources_follow_training_order() {
        let mut train = corpus(&[("A", 2), ("B", 1)]);
        train.push(record("late", "t", "x", ["A", "p", "h", "q"]));
        let space = compute_label_space(&train, Category::HazardCategory);
        let plan = build_plan(&cfg(10, 10), &space, &train).unwrap();
        let ids: Vec<_> = plan.classes[0].sources.iter().map(|e| e.source_id.as_str()).collect();
        assert_eq!(ids, ["0", "1", "late"]);
        assert_eq!(plan.total(), 20);
    }

    #[test]
    fn wrong_category_space_rejected() {
        let train = corpus(&[("A", 2)]);
        let space = compute_label_space(&train, Category::Hazard);
        assert!(build_plan(&cfg(10, 10), &space, &train).is_err());
    }

    proptest! {
        #[test]
        fn exact_budgeting(
            counts in proptest::collection::vec(1usize..30, 1..6),
            threshold in 1usize..25,
            budget in 1usize..60,
        ) {
            let labels: Vec<String> = (0..counts.len()).map(|i| format!("c{i}")).collect();
            let spec: Vec<(&str, usize)> = labels.iter().map(String::as_str).zip(counts.iter().copied()).collect();
            let plan = plan_for(&spec, threshold, budget);
            let expected_minorities = counts.iter().filter(|&&c| c < threshold).count();
            prop_assert_eq!(plan.classes.len(), expected_minorities);
            for class in &plan.classes {
                prop_assert_eq!(class.total(), budget);
                let m = class.sources.len();
                prop_assert_eq!(m, class.support);
                for e in &class.sources[..m - 1] {
                    prop_assert_eq!(e.copies, budget / m);
                }
            }
        }
    }
}
