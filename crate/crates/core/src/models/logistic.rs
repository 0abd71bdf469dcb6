use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::{SparseMatrix, SparseRow};

const GRAD_TOLERANCE: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

/// Multinomial logistic regression with an L2 penalty of strength `1/C` on the
/// weights (the intercepts are not penalised). Fitted by gradient descent with
/// Barzilai-Borwein steps and Armijo backtracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    /// Feature-major: entry `j * n_classes + k`.
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
}

struct Problem<'a> {
    x: &'a SparseMatrix,
    y: &'a [usize],
    sample_weight: Vec<f64>,
    k: usize,
    inv_c: f64,
    scale: f64,
}

impl Problem<'_> {
    fn logits(&self, params: &[f64], row: &SparseRow<'_>) -> Vec<f64> {
        let k = self.k;
        let bias_at = self.x.n_cols() * k;
        let mut z = params[bias_at..bias_at + k].to_vec();
        for (j, v) in row.iter() {
            for (zc, wc) in z.iter_mut().zip(&params[j * k..(j + 1) * k]) {
                *zc += wc * v;
            }
        }
        z
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let bias_at = self.x.n_cols() * self.k;
        0.5 * self.inv_c * params[..bias_at].iter().map(|w| w * w).sum::<f64>()
    }

    /// Objective only.
    fn value(&self, params: &[f64]) -> f64 {
        let losses: Vec<f64> = (0..self.x.n_rows())
            .into_par_iter()
            .map(|i| {
                let z = self.logits(params, &self.x.row(i));
                self.sample_weight[i] * (log_sum_exp(&z) - z[self.y[i]])
            })
            .collect();
        (losses.iter().sum::<f64>() + self.penalty(params)) * self.scale
    }

    /// Objective and gradient.
    fn value_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let k = self.k;
        let rows: Vec<(f64, Vec<f64>)> = (0..self.x.n_rows())
            .into_par_iter()
            .map(|i| {
                let z = self.logits(params, &self.x.row(i));
                let lse = log_sum_exp(&z);
                let s = self.sample_weight[i];
                let mut r: Vec<f64> = z.iter().map(|zc| s * (zc - lse).exp()).collect();
                r[self.y[i]] -= s;
                (s * (lse - z[self.y[i]]), r)
            })
            .collect();
        let bias_at = self.x.n_cols() * k;
        let mut grad = vec![0.0; params.len()];
        for (g, w) in grad[..bias_at].iter_mut().zip(&params[..bias_at]) {
            *g = self.inv_c * w;
        }
        let mut loss = self.penalty(params);
        for (i, (l, r)) in rows.iter().enumerate() {
            loss += l;
            for (j, v) in self.x.row(i).iter() {
                for (gc, rc) in grad[j * k..(j + 1) * k].iter_mut().zip(r) {
                    *gc += rc * v;
                }
            }
            for (gc, rc) in grad[bias_at..].iter_mut().zip(r) {
                *gc += rc;
            }
        }
        grad.iter_mut().for_each(|g| *g *= self.scale);
        (loss * self.scale, grad)
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn fit(
    x: &SparseMatrix,
    y: &[usize],
    n_classes: usize,
    class_weights: &[f64],
    c: f64,
    max_iter: usize,
) -> LogisticModel {
    let problem = Problem {
        x,
        y,
        sample_weight: y.iter().map(|&k| class_weights[k]).collect(),
        k: n_classes,
        inv_c: 1.0 / c,
        scale: 1.0 / x.n_rows() as f64,
    };
    let mut params = vec![0.0; (x.n_cols() + 1) * n_classes];
    let (mut f, mut g) = problem.value_grad(&params);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < max_iter {
        let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_inf < GRAD_TOLERANCE {
            break;
        }
        iterations += 1;
        let g_sq = dot(&g, &g);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = params.iter().zip(&g).map(|(p, gi)| p - t * gi).collect();
            let ft = problem.value(&trial);
            if ft <= f - ARMIJO * t * g_sq {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((next, f_next)) = accepted else { break };
        let (f_new, g_new) = problem.value_grad(&next);
        debug_assert!((f_new - f_next).abs() <= 1e-9 * f_next.abs().max(1.0));
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &dy);
        step = if sy > 0.0 { dot(&s, &s) / sy } else { t * 2.0 };
        let converged = (f - f_new).abs() <= 1e-12 * f.abs().max(1.0);
        params = next;
        f = f_new;
        g = g_new;
        if converged {
            break;
        }
    }
    let bias_at = x.n_cols() * n_classes;
    LogisticModel {
        n_classes,
        intercepts: params[bias_at..].to_vec(),
        weights: params[..bias_at].to_vec(),
        iterations,
    }
}

impl LogisticModel {
    fn logits(&self, row: &SparseRow<'_>) -> Vec<f64> {
        let k = self.n_classes;
        let mut z = self.intercepts.clone();
        for (j, v) in row.iter() {
            for (zc, wc) in z.iter_mut().zip(&self.weights[j * k..(j + 1) * k]) {
                *zc += wc * v;
            }
        }
        z
    }

    pub fn proba_row(&self, row: &SparseRow<'_>) -> Vec<f64> {
        let z = self.logits(row);
        let lse = log_sum_exp(&z);
        z.iter().map(|v| (v - lse).exp()).collect()
    }

    pub(crate) fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        x.rows().map(|r| argmax(&self.logits(&r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gradient_matches_finite_differences() {
        let x = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.3, 0.7], vec![0.0, 1.0]]);
        let y = [0, 1, 2];
        let p = Problem {
            x: &x,
            y: &y,
            sample_weight: vec![1.0, 2.0, 0.5],
            k: 3,
            inv_c: 0.5,
            scale: 1.0 / 3.0,
        };
        let params: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        let (f, g) = p.value_grad(&params);
        assert_abs_diff_eq!(f, p.value(&params), epsilon = 1e-12);
        for i in 0..params.len() {
            let mut a = params.clone();
            let mut b = params.clone();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (p.value(&a) - p.value(&b)) / 2e-6;
            assert_abs_diff_eq!(g[i], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = crate::models::testdata::separable(3, 10, 0);
        let idx: Vec<usize> = y.iter().map(|l| l[5..].parse().unwrap()).collect();
        let m = fit(&x, &idx, 3, &[1.0; 3], 1.0, 200);
        for r in x.rows() {
            assert_abs_diff_eq!(m.proba_row(&r).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
