use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::{SparseMatrix, SparseRow};

/// Multinomial naive Bayes over non-negative feature weights with additive
/// (Lidstone) smoothing `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_log_prior: Vec<f64>,
    /// Class-major: entry `k * n_features + j`.
    pub feature_log_prob: Vec<f64>,
    pub n_features: usize,
}

impl NaiveBayesModel {
    pub(crate) fn fit(x: &SparseMatrix, y: &[usize], n_classes: usize, alpha: f64) -> Self {
        let d = x.n_cols();
        let mut counts = vec![0.0; n_classes * d];
        let mut class_count = vec![0usize; n_classes];
        for (row, &k) in x.rows().zip(y) {
            class_count[k] += 1;
            for (j, v) in row.iter() {
                counts[k * d + j] += v;
            }
        }
        let n = y.len() as f64;
        let class_log_prior = class_count.iter().map(|&c| (c as f64 / n).ln()).collect();
        let mut feature_log_prob = vec![0.0; n_classes * d];
        for k in 0..n_classes {
            let block = &counts[k * d..(k + 1) * d];
            let denom = (block.iter().sum::<f64>() + alpha * d as f64).ln();
            for (out, c) in feature_log_prob[k * d..(k + 1) * d].iter_mut().zip(block) {
                *out = (c + alpha).ln() - denom;
            }
        }
        NaiveBayesModel {
            class_log_prior,
            feature_log_prob,
            n_features: d,
        }
    }

    pub fn joint_log_likelihood(&self, row: &SparseRow<'_>) -> Vec<f64> {
        let d = self.n_features;
        self.class_log_prior
            .iter()
            .enumerate()
            .map(|(k, prior)| {
                prior
                    + row
                        .iter()
                        .map(|(j, v)| v * self.feature_log_prob[k * d + j])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn proba_row(&self, row: &SparseRow<'_>) -> Vec<f64> {
        let jll = self.joint_log_likelihood(row);
        let m = jll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = jll.iter().map(|v| (v - m).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    pub(crate) fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        x.rows().map(|r| argmax(&self.joint_log_likelihood(&r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{fit as fit_tfidf, TfidfConfig};
    use crate::models::{train, ClassifierConfig, ClassWeight, FamilyParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_word_per_class() {
        let docs = ["aa", "bb"];
        let tfidf = fit_tfidf(&docs, &TfidfConfig::default()).unwrap();
        let x = tfidf.transform(&docs);
        let cfg = ClassifierConfig {
            params: FamilyParams::MultinomialNb { alpha: 1.0 },
            class_weight: ClassWeight::None,
            seed: 0,
        };
        let m = train(&cfg, &x, &["A", "B"]).unwrap();
        let probe = tfidf.transform(&["aa"]);
        assert_eq!(m.predict(&probe).unwrap(), ["A"]);
        let p = m.predict_proba(&probe).unwrap().unwrap();
        assert_abs_diff_eq!(p[0].iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p[0][0] > p[0][1]);
    }

    #[test]
    fn smoothing_by_hand() {
        let x = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let m = NaiveBayesModel::fit(&x, &[0, 1], 2, 1.0);
        assert_abs_diff_eq!(m.feature_log_prob[0], (3.0f64 / 4.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.feature_log_prob[1], (1.0f64 / 4.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.feature_log_prob[3], (2.0f64 / 3.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.class_log_prior[0], 0.5f64.ln(), epsilon = 1e-12);
    }
}
