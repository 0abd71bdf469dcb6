use serde::{Deserialize, Serialize};

/// Row-compressed sparse matrix of `f64` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(n_cols: usize) -> Self {
        SparseMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, weight)` lists. Each row is
    /// sorted by column; zero weights are dropped.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut m = SparseMatrix::empty(n_cols);
        for row in rows {
            m.push_row(row);
        }
        m
    }

    pub fn push_row(&mut self, mut row: Vec<(usize, f64)>) {
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            assert!(c < self.n_cols, "column {c} out of bounds ({})", self.n_cols);
            if v != 0.0 {
                self.indices.push(c);
                self.data.push(v);
            }
        }
        self.indptr.push(self.indices.len());
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        SparseMatrix::from_rows(
            n_cols,
            rows.iter()
                .map(|r| r.iter().copied().enumerate().collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            indices: &self.indices[a..b],
            values: &self.data[a..b],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// All stored `(row, col, weight)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, c, v)))
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut m = SparseMatrix::empty(self.n_cols);
        for &r in rows {
            m.push_row(self.row(r).iter().collect());
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|row| {
                let mut d = vec![0.0; self.n_cols];
                for (c, v) in row.iter() {
                    d[c] = v;
                }
                d
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.iter()
            .map(|(c, v)| w.get(c).map_or(0.0, |wc| wc * v))
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Value at column `col`, zero when absent.
    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&col) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    /// Dot product of two sorted sparse rows.
    pub fn dot(&self, other: &SparseRow<'_>) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_read() {
        let m = SparseMatrix::from_rows(3, vec![vec![(2, 1.0), (0, 2.0)], vec![], vec![(1, 0.0)]]);
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(0).indices, &[0, 2]);
        assert_eq!(m.row(2).nnz(), 0);
        let e: Vec<_> = m.entries().collect();
        assert_eq!(e, vec![(0, 0, 2.0), (0, 2, 1.0)]);
        assert_eq!(m.to_dense()[0], vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn sparse_dot() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![3.0, 4.0, 5.0]]);
        assert_eq!(m.row(0).dot(&m.row(1)), 13.0);
        assert_eq!(m.row(1).dot_dense(&[1.0, 1.0, 1.0]), 12.0);
        assert_eq!(m.row(1).get(1), 4.0);
        assert_eq!(m.row(0).get(1), 0.0);
    }
}
