//! Scoring: macro-F1, the two-subtask hierarchical score, minority/majority
//! grouped confusion and Kruskal-Wallis comparisons of repeated runs.

mod kruskal;
mod predictions;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kruskal::{kruskal_wallis, kruskal_wallis_2group, KruskalWallis};
pub use predictions::{
    read_predictions, read_predictions_file, score_against_gold, write_predictions, PredictionRow, PredictionSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold samples of this class.
    pub support: usize,
}

fn check_lengths<A, B>(a: &[A], b: &[B], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!(
            "{what}: {} gold labels vs {} predictions",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Per-class precision/recall/F1 over the union of gold and predicted labels,
/// sorted by label. Zero denominators yield zero.
pub fn per_class_metrics<S: AsRef<str>>(truth: &[S], pred: &[S]) -> Result<Vec<ClassMetrics>> {
    check_lengths(truth, pred, "per-class metrics")?;
    // label -> (tp, gold count, predicted count)
    let mut tally: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (t, p) in truth.iter().zip(pred) {
        let (t, p) = (t.as_ref(), p.as_ref());
        tally.entry(t).or_default().1 += 1;
        tally.entry(p).or_default().2 += 1;
        if t == p {
            tally.entry(t).or_default().0 += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(tally
        .into_iter()
        .map(|(label, (tp, n_true, n_pred))| {
            let precision = ratio(tp, n_pred);
            let recall = ratio(tp, n_true);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: label.to_string(),
                precision,
                recall,
                f1,
                support: n_true,
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over the union of gold and predicted labels.
pub fn f1_macro<S: AsRef<str>>(truth: &[S], pred: &[S]) -> Result<f64> {
    if truth.is_empty() && pred.is_empty() {
        return Err(Error::LengthMismatch("f1_macro on empty label lists".into()));
    }
    let table = per_class_metrics(truth, pred)?;
    Ok(table.iter().map(|c| c.f1).sum::<f64>() / table.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub f1_hazard: f64,
    pub f1_product_on_correct_hazard: f64,
    /// Mean of the two terms above.
    pub combined: f64,
    pub n_samples: usize,
    pub n_correct_hazard: usize,
    pub hazard_classes: Vec<ClassMetrics>,
    pub product_classes: Vec<ClassMetrics>,
}

impl ScoreReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples                      {}", self.n_samples);
        let _ = writeln!(s, "correct hazard predictions   {}", self.n_correct_hazard);
        let _ = writeln!(s, "hazard macro-F1              {:.4}", self.f1_hazard);
        let _ = writeln!(
            s,
            "product macro-F1 (on correct) {:.4}",
            self.f1_product_on_correct_hazard
        );
        let _ = writeln!(s, "combined                     {:.4}", self.combined);
        for (name, table) in [("hazard", &self.hazard_classes), ("product", &self.product_classes)] {
            let _ = writeln!(s, "\n{name:<40} {:>9} {:>9} {:>9} {:>7}", "precision", "recall", "f1", "support");
            for c in table {
                let _ = writeln!(
                    s,
                    "{:<40} {:>9.4} {:>9.4} {:>9.4} {:>7}",
                    c.label, c.precision, c.recall, c.f1, c.support
                );
            }
        }
        s
    }
}

/// Hierarchical subtask score: hazard macro-F1 on all samples averaged with
/// product macro-F1 restricted to samples whose hazard was predicted correctly.
pub fn task_score<S: AsRef<str>>(ht: &[S], pt: &[S], hp: &[S], pp: &[S]) -> Result<ScoreReport> {
    check_lengths(ht, hp, "hazard")?;
    check_lengths(pt, pp, "product")?;
    check_lengths(ht, pt, "hazard vs product")?;
    let f1_hazard = f1_macro(ht, hp)?;
    let mask: Vec<usize> = (0..ht.len())
        .filter(|&i| hp[i].as_ref() == ht[i].as_ref())
        .collect();
    let pt_masked: Vec<&str> = mask.iter().map(|&i| pt[i].as_ref()).collect();
    let pp_masked: Vec<&str> = mask.iter().map(|&i| pp[i].as_ref()).collect();
    let (f1_product, product_classes) = if mask.is_empty() {
        warn!("no hazard predicted correctly; product term set to 0");
        (0.0, Vec::new())
    } else {
        (
            f1_macro(&pt_masked, &pp_masked)?,
            per_class_metrics(&pt_masked, &pp_masked)?,
        )
    };
    Ok(ScoreReport {
        f1_hazard,
        f1_product_on_correct_hazard: f1_product,
        combined: (f1_hazard + f1_product) / 2.0,
        n_samples: ht.len(),
        n_correct_hazard: mask.len(),
        hazard_classes: per_class_metrics(ht, hp)?,
        product_classes,
    })
}

/// Correct predictions split by whether the gold class is a minority class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedConfusion {
    pub minority_classes: BTreeSet<String>,
    pub minority_correct: usize,
    pub minority_total: usize,
    pub majority_correct: usize,
    pub majority_total: usize,
}

impl GroupedConfusion {
    pub fn total(&self) -> usize {
        self.minority_total + self.majority_total
    }
}

pub fn grouped_confusion<S: AsRef<str>>(
    truth: &[S],
    pred: &[S],
    minority_classes: &BTreeSet<String>,
) -> Result<GroupedConfusion> {
    check_lengths(truth, pred, "grouped confusion")?;
    let mut g = GroupedConfusion {
        minority_classes: minority_classes.clone(),
        ..Default::default()
    };
    for (t, p) in truth.iter().zip(pred) {
        let correct = usize::from(t.as_ref() == p.as_ref());
        if minority_classes.contains(t.as_ref()) {
            g.minority_total += 1;
            g.minority_correct += correct;
        } else {
            g.majority_total += 1;
            g.majority_correct += correct;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn f1_all_correct() {
        assert_eq!(f1_macro(&["a", "b", "c"], &["a", "b", "c"]).unwrap(), 1.0);
    }

    #[test]
    fn f1_half() {
        let t = per_class_metrics(&["A", "A", "B", "B"], &["A", "B", "A", "B"]).unwrap();
        assert_eq!(t[0].f1, 0.5);
        assert_eq!(t[1].f1, 0.5);
        assert_eq!(f1_macro(&["A", "A", "B", "B"], &["A", "B", "A", "B"]).unwrap(), 0.5);
    }

    #[test]
    fn f1_unseen_predicted_class_counts_zero() {
        // A: p=1, r=1/2 -> 2/3 ; C: 0 -> (2/3 + 0) / 2
        let f = f1_macro(&["A", "A"], &["A", "C"]).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn f1_length_mismatch() {
        assert!(f1_macro(&["A"], &["A", "B"]).is_err());
    }

    #[test]
    fn task_score_worked_examples() {
        let h = ["x", "y", "x"];
        let p = ["a", "b", "c"];
        let wrong = ["b", "c", "a"];
        assert_eq!(task_score(&h, &p, &h, &wrong).unwrap().combined, 0.5);
        assert_eq!(task_score(&h, &p, &h, &p).unwrap().combined, 1.0);
    }

    #[test]
    fn task_score_empty_mask() {
        let ht = ["x", "y"];
        let hp = ["y", "x"];
        let pt = ["a", "b"];
        let r = task_score(&ht, &pt, &hp, &pt).unwrap();
        assert_eq!(r.n_correct_hazard, 0);
        assert_eq!(r.f1_product_on_correct_hazard, 0.0);
        assert_eq!(r.combined, f1_macro(&ht, &hp).unwrap() / 2.0);
    }

    #[test]
    fn grouped_examples() {
        let minority: BTreeSet<String> = ["m".to_string()].into();
        let g = grouped_confusion(&["m", "M"], &["m", "M"], &minority).unwrap();
        assert_eq!((g.minority_correct, g.minority_total), (1, 1));
        assert_eq!((g.majority_correct, g.majority_total), (1, 1));
        let g = grouped_confusion(&["m", "m", "M"], &["M", "m", "M"], &minority).unwrap();
        assert_eq!((g.minority_correct, g.minority_total), (1, 2));
        assert_eq!((g.majority_correct, g.majority_total), (1, 1));
        let g = grouped_confusion(&["m", "M"], &["m", "x"], &BTreeSet::new()).unwrap();
        assert_eq!((g.majority_correct, g.majority_total, g.minority_total), (1, 2, 0));
    }

    fn labels() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
        (1usize..30).prop_flat_map(|n| {
            (
                proptest::collection::vec("[a-d]", n),
                proptest::collection::vec("[a-e]", n),
            )
        })
    }

    proptest! {
        #[test]
        fn f1_invariant_under_relabeling((t, p) in labels()) {
            let rename = |s: &String| format!("class-{}", (b'z' - s.as_bytes()[0]) as char);
            let t2: Vec<String> = t.iter().map(rename).collect();
            let p2: Vec<String> = p.iter().map(rename).collect();
            let a = f1_macro(&t, &p).unwrap();
            let b = f1_macro(&t2, &p2).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn precision_recall_swap_on_reversal((t, p) in labels()) {
            let fwd = per_class_metrics(&t, &p).unwrap();
            let rev = per_class_metrics(&p, &t).unwrap();
            for (f, r) in fwd.iter().zip(&rev) {
                prop_assert_eq!(&f.label, &r.label);
                prop_assert!((f.precision - r.recall).abs() < 1e-12);
            }
        }

        #[test]
        fn task_score_bounded((h, p) in labels(), flip in any::<bool>()) {
            let hp = if flip { p.clone() } else { h.clone() };
            let r = task_score(&h, &p, &hp, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.combined));
            prop_assert_eq!(r.combined, (r.f1_hazard + r.f1_product_on_correct_hazard) / 2.0);
        }

        #[test]
        fn grouped_partitions((t, p) in labels()) {
            let minority: BTreeSet<String> = ["a".to_string(), "c".to_string()].into();
            let g = grouped_confusion(&t, &p, &minority).unwrap();
            prop_assert_eq!(g.total(), t.len());
        }
    }
}
