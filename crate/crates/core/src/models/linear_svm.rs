use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::SparseMatrix;
use crate::rng::{derive, seeded};

const TOLERANCE: f64 = 1e-4;

/// One-vs-rest linear SVM with hinge loss and a regularised bias feature of
/// value 1, solved by dual coordinate descent over seeded epoch permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    /// One weight vector per class; the last entry is the bias.
    pub weights: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
}

pub(crate) fn fit(
    x: &SparseMatrix,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    c: f64,
    max_iter: usize,
    seed: u64,
) -> LinearSvmModel {
    let sq_norms: Vec<f64> = x.rows().map(|r| r.squared_norm() + 1.0).collect();
    // with two classes a single problem decides; keep one vector per class for uniformity
    let solved: Vec<(Vec<f64>, usize)> = (0..n_classes)
        .into_par_iter()
        .map(|k| {
            if n_classes == 2 && k == 1 {
                return (Vec::new(), 0);
            }
            solve_binary(x, y, k, class_weights, c, max_iter, &sq_norms, derive(seed, k as u64))
        })
        .collect();
    let mut weights = Vec::with_capacity(n_classes);
    let mut iterations = Vec::with_capacity(n_classes);
    for (w, it) in solved {
        weights.push(w);
        iterations.push(it);
    }
    if n_classes == 2 {
        weights[1] = weights[0].iter().map(|v| -v).collect();
        iterations[1] = iterations[0];
    }
    LinearSvmModel { weights, iterations }
}

#[allow(clippy::too_many_arguments)]
fn solve_binary(
    x: &SparseMatrix,
    y: &[usize],
    positive: usize,
    class_weights: &[f64],
    c: f64,
    max_iter: usize,
    sq_norms: &[f64],
    seed: u64,
) -> (Vec<f64>, usize) {
    let n = x.n_rows();
    let d = x.n_cols();
    let sign: Vec<f64> = y.iter().map(|&c| if c == positive { 1.0 } else { -1.0 }).collect();
    let upper: Vec<f64> = y.iter().map(|&k| c * class_weights[k]).collect();
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed);
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        order.shuffle(&mut rng);
        let (mut max_pg, mut min_pg) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let row = x.row(i);
            let margin = row.dot_dense(&w) + w[d];
            let g = sign[i] * margin - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper[i] {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / sq_norms[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * sign[i];
                for (col, v) in row.iter() {
                    w[col] += step * v;
                }
                w[d] += step;
            }
        }
        if max_pg - min_pg <= TOLERANCE {
            break;
        }
    }
    (w, iter)
}

impl LinearSvmModel {
    pub fn decision_row(&self, row: &crate::features::SparseRow<'_>) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| row.dot_dense(&w[..w.len() - 1]) + w[w.len() - 1])
            .collect()
    }

    pub(crate) fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        x.rows().map(|r| argmax(&self.decision_row(&r))).collect()
    }
}
