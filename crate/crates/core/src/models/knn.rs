use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, KnnWeights};
use crate::features::{SparseMatrix, SparseRow};

/// Distances at or below this are treated as exact matches.
const ZERO_DISTANCE: f64 = 1e-12;

/// Brute-force Euclidean k-nearest-neighbour vote. Ties in distance go to the
/// earlier training row; ties in the vote go to the lower label index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub n_neighbors: usize,
    pub weights: KnnWeights,
    pub n_classes: usize,
    pub train: SparseMatrix,
    pub labels: Vec<usize>,
}

impl KnnModel {
    pub(crate) fn fit(x: &SparseMatrix, y: &[usize], n_neighbors: usize, weights: KnnWeights) -> Self {
        KnnModel {
            n_neighbors,
            weights,
            n_classes: y.iter().max().map_or(0, |m| m + 1),
            train: x.clone(),
            labels: y.to_vec(),
        }
    }

    /// Column-major view of the training rows, for sparse dot products.
    fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.train.n_cols()];
        for (i, j, v) in self.train.entries() {
            cols[j].push((i, v));
        }
        cols
    }

    fn predict_row(&self, row: &SparseRow<'_>, columns: &[Vec<(usize, f64)>], norms: &[f64]) -> usize {
        let mut dots = vec![0.0; self.train.n_rows()];
        for (j, v) in row.iter() {
            if let Some(col) = columns.get(j) {
                for &(i, t) in col {
                    dots[i] += v * t;
                }
            }
        }
        let q = row.squared_norm();
        let mut dist: Vec<(f64, usize)> = dots
            .iter()
            .zip(norms)
            .enumerate()
            .map(|(i, (d, n))| ((q + n - 2.0 * d).max(0.0).sqrt(), i))
            .collect();
        let k = self.n_neighbors.min(dist.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_distance);
            dist.truncate(k);
        }
        dist.sort_by(by_distance);

        let mut votes = vec![0.0; self.n_classes];
        match self.weights {
            KnnWeights::Uniform => {
                for &(_, i) in &dist {
                    votes[self.labels[i]] += 1.0;
                }
            }
            KnnWeights::Distance => {
                if dist.iter().any(|&(d, _)| d <= ZERO_DISTANCE) {
                    for &(d, i) in &dist {
                        if d <= ZERO_DISTANCE {
                            votes[self.labels[i]] += 1.0;
                        }
                    }
                } else {
                    for &(d, i) in &dist {
                        votes[self.labels[i]] += 1.0 / d;
                    }
                }
            }
        }
        argmax(&votes)
    }

    pub(crate) fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        let columns = self.columns();
        let norms: Vec<f64> = self.train.rows().map(|r| r.squared_norm()).collect();
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row(&x.row(i), &columns, &norms))
            .collect()
    }
}
