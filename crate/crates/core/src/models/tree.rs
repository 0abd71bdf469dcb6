use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::{SparseMatrix, SparseRow};
use crate::rng::{derive, seeded, Rng};

const EPS: f64 = 1e-12;

/// Candidate features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    #[default]
    All,
    /// `max(1, floor(sqrt(n_features)))` features drawn among those that vary
    /// within the node.
    Sqrt,
}

impl FeatureSubsample {
    pub fn sqrt() -> Self {
        FeatureSubsample::Sqrt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Leaf { class: usize },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree with Gini impurity over weighted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

struct Builder<'a> {
    x: &'a SparseMatrix,
    y: &'a [usize],
    w: &'a [f64],
    k: usize,
    max_features: FeatureSubsample,
    n_sampled: usize,
    rng: Rng,
}

struct Split {
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn class_totals(&self, samples: &[usize]) -> Vec<f64> {
        let mut t = vec![0.0; self.k];
        for &i in samples {
            t[self.y[i]] += self.w[i];
        }
        t
    }

    /// Best Gini split of the node, if any lowers the impurity.
    fn best_split(&mut self, samples: &[usize], totals: &[f64]) -> Option<Split> {
        let total_w: f64 = totals.iter().sum();
        let present: Vec<usize> = (0..self.k).filter(|&c| totals[c] > 0.0).collect();
        let parent_sq: f64 = present.iter().map(|&c| totals[c] * totals[c]).sum();
        // (feature, value, sample)
        let mut entries: Vec<(usize, f64, usize)> = samples
            .iter()
            .flat_map(|&i| self.x.row(i).iter().map(move |(j, v)| (j, v, i)))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut groups: Vec<(usize, usize, usize)> = Vec::new();
        let mut start = 0;
        while start < entries.len() {
            let f = entries[start].0;
            let mut end = start;
            while end < entries.len() && entries[end].0 == f {
                end += 1;
            }
            let dense = end - start == samples.len();
            let constant = dense && entries[start].1 == entries[end - 1].1;
            if !constant {
                groups.push((f, start, end));
            }
            start = end;
        }
        if groups.is_empty() {
            return None;
        }
        if self.max_features == FeatureSubsample::Sqrt && groups.len() > self.n_sampled {
            let mut pick = index::sample(&mut self.rng, groups.len(), self.n_sampled).into_vec();
            pick.sort_unstable();
            groups = pick.into_iter().map(|g| groups[g]).collect();
        }

        let mut best: Option<(f64, Split)> = None;
        let mut left = vec![0.0; self.k];
        for (f, s, e) in groups {
            let group = &entries[s..e];
            // weighted class counts of the rows where the feature is zero
            let mut zeros = totals.to_vec();
            for &(_, _, i) in group {
                zeros[self.y[i]] -= self.w[i];
            }
            let zero_w: f64 = present.iter().map(|&c| zeros[c]).sum();
            let has_zeros = group.len() < samples.len();
            let split_neg = group.partition_point(|t| t.1 < 0.0);

            for &c in &present {
                left[c] = 0.0;
            }
            let (mut lw, mut lsq) = (0.0, 0.0);
            let mut rsq = parent_sq;
            let add = |c: usize, wt: f64, lw: &mut f64, lsq: &mut f64, rsq: &mut f64, left: &mut [f64]| {
                let r = totals[c] - left[c];
                *lsq += 2.0 * left[c] * wt + wt * wt;
                *rsq += -2.0 * r * wt + wt * wt;
                left[c] += wt;
                *lw += wt;
            };
            // ordered values: negatives, the zero block, positives
            let mut prev_value: Option<f64> = None;
            let mut consider = |value: f64, lw: f64, lsq: f64, rsq: f64, prev: Option<f64>| {
                let Some(p) = prev else { return };
                if value <= p {
                    return;
                }
                let rw = total_w - lw;
                if lw <= EPS || rw <= EPS {
                    return;
                }
                let score = lsq / lw + rsq / rw;
                if score > parent_sq / total_w + EPS
                    && best.as_ref().is_none_or(|(b, _)| score > *b + EPS)
                {
                    best = Some((
                        score,
                        Split {
                            feature: f,
                            threshold: p + (value - p) / 2.0,
                        },
                    ));
                }
            };
            let mut idx = 0;
            let mut zero_done = !has_zeros;
            loop {
                let next_is_zero = !zero_done && idx == split_neg;
                let value = if next_is_zero {
                    0.0
                } else if idx < group.len() {
                    group[idx].1
                } else {
                    break;
                };
                consider(value, lw, lsq, rsq, prev_value);
                if next_is_zero {
                    for &c in &present {
                        if zeros[c] > 0.0 {
                            add(c, zeros[c], &mut lw, &mut lsq, &mut rsq, &mut left);
                        }
                    }
                    debug_assert!((zero_w - zeros.iter().sum::<f64>()).abs() < 1e-6);
                    zero_done = true;
                } else {
                    let (_, _, i) = group[idx];
                    add(self.y[i], self.w[i], &mut lw, &mut lsq, &mut rsq, &mut left);
                    idx += 1;
                }
                prev_value = Some(value);
            }
        }
        best.map(|(_, s)| s)
    }

    fn build(mut self, max_depth: usize) -> DecisionTree {
        let root: Vec<usize> = (0..self.y.len()).filter(|&i| self.w[i] > 0.0).collect();
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, root, 0usize)];
        let mut depth = 0;
        while let Some((id, samples, d)) = stack.pop() {
            depth = depth.max(d);
            let totals = self.class_totals(&samples);
            let class = argmax(&totals);
            let pure = totals.iter().filter(|&&t| t > 0.0).count() <= 1;
            if pure || d >= max_depth || samples.len() < 2 {
                nodes[id] = Node::Leaf { class };
                continue;
            }
            let Some(split) = self.best_split(&samples, &totals) else {
                nodes[id] = Node::Leaf { class };
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&i| self.x.row(i).get(split.feature) <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { class });
            nodes.push(Node::Leaf { class });
            nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right: left + 1,
            };
            stack.push((left + 1, r, d + 1));
            stack.push((left, l, d + 1));
        }
        DecisionTree { nodes, depth }
    }
}

impl DecisionTree {
    pub(crate) fn fit(
        x: &SparseMatrix,
        y: &[usize],
        sample_weight: &[f64],
        n_classes: usize,
        max_depth: usize,
        max_features: FeatureSubsample,
        seed: u64,
    ) -> Self {
        let builder = Builder {
            x,
            y,
            w: sample_weight,
            k: n_classes,
            max_features,
            n_sampled: ((x.n_cols() as f64).sqrt().floor() as usize).max(1),
            rng: seeded(seed),
        };
        builder.build(max_depth)
    }

    pub fn predict_row(&self, row: &SparseRow<'_>) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row.get(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Bagged trees with per-node feature subsampling and a majority vote.
/// Tree `t` is grown from seed `derive(seed, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn fit(
        x: &SparseMatrix,
        y: &[usize],
        class_weights: &[f64],
        n_classes: usize,
        n_estimators: usize,
        max_depth: usize,
        bootstrap: bool,
        max_features: FeatureSubsample,
        seed: u64,
    ) -> Self {
        let n = y.len();
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|t| {
                let tree_seed = derive(seed, t as u64);
                let mut weights: Vec<f64> = y.iter().map(|&c| class_weights[c]).collect();
                if bootstrap {
                    let mut rng = seeded(derive(tree_seed, u64::MAX));
                    let mut draws = vec![0u32; n];
                    for _ in 0..n {
                        draws[rng.random_range(0..n)] += 1;
                    }
                    weights.iter_mut().zip(&draws).for_each(|(w, &d)| *w *= d as f64);
                }
                DecisionTree::fit(x, y, &weights, n_classes, max_depth, max_features, tree_seed)
            })
            .collect();
        RandomForest { n_classes, trees }
    }

    pub fn predict_row(&self, row: &SparseRow<'_>) -> usize {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1.0;
        }
        argmax(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testdata::separable;

    fn indices(y: &[String]) -> Vec<usize> {
        y.iter().map(|l| l[5..].parse().unwrap()).collect()
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = SparseMatrix::from_dense(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ]);
        let y = [0, 0, 1, 1];
        let w = [1.0; 4];
        let t = DecisionTree::fit(&x, &y, &w, 2, 5, FeatureSubsample::All, 0);
        let pred: Vec<usize> = x.rows().map(|r| t.predict_row(&r)).collect();
        // a greedy split finds no Gini gain at the root of XOR
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(pred, [0, 0, 0, 0]);

        let x = SparseMatrix::from_dense(&[vec![-1.0], vec![0.0], vec![2.0], vec![3.0]]);
        let t = DecisionTree::fit(&x, &[1, 0, 0, 1], &w, 2, 5, FeatureSubsample::All, 0);
        let pred: Vec<usize> = x.rows().map(|r| t.predict_row(&r)).collect();
        assert_eq!(pred, [1, 0, 0, 1]);
        assert_eq!(t.depth, 2);
    }

    #[test]
    fn depth_limit() {
        let (x, y) = separable(4, 10, 3);
        let t = DecisionTree::fit(&x, &indices(&y), &[1.0; 40], 4, 1, FeatureSubsample::All, 0);
        assert_eq!(t.depth, 1);
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn weights_move_the_leaf_label() {
        let x = SparseMatrix::from_dense(&[vec![1.0], vec![1.0], vec![1.0]]);
        let y = [0, 0, 1];
        let t = DecisionTree::fit(&x, &y, &[1.0, 1.0, 3.0], 2, 5, FeatureSubsample::All, 0);
        assert_eq!(t.nodes, [Node::Leaf { class: 1 }]);
    }

    #[test]
    fn single_unbootstrapped_tree_equals_decision_tree() {
        let (x, y) = separable(3, 20, 6);
        let y = indices(&y);
        let cw = [1.0; 3];
        let seed = 42;
        let rf = RandomForest::fit(&x, &y, &cw, 3, 1, 50, false, FeatureSubsample::Sqrt, seed);
        let dt = DecisionTree::fit(&x, &y, &[1.0; 60], 3, 50, FeatureSubsample::Sqrt, derive(seed, 0));
        assert_eq!(rf.trees[0], dt);
    }

    #[test]
    fn forest_fits_training_data() {
        let (x, y) = separable(3, 20, 2);
        let y = indices(&y);
        let rf = RandomForest::fit(&x, &y, &[1.0; 3], 3, 25, 100, true, FeatureSubsample::Sqrt, 9);
        let pred: Vec<usize> = x.rows().map(|r| rf.predict_row(&r)).collect();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc >= 0.95, "{acc}");
    }
}
