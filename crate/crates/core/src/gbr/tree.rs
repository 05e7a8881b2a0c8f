// SPDX-License-Identifier: Apache-2.0
//! Least-squares regression trees with exact greedy splits.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    max_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_leaf_only(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_row(&self, x: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Fit to `target` over the rows of `x`.
    pub(crate) fn fit(x: &Array2<f64>, target: &[f64], params: TreeParams) -> Self {
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            max_depth: params.max_depth,
        };
        let rows: Vec<usize> = (0..x.nrows()).collect();
        tree.grow(x, target, rows, 0, params);
        tree
    }

    fn grow(&mut self, x: &Array2<f64>, target: &[f64], rows: Vec<usize>, depth: usize, params: TreeParams) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| target[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        if depth >= params.max_depth || rows.len() < 2 * params.min_samples_leaf {
            return id;
        }
        let Some(best) = best_split(x, target, &rows, params.min_samples_leaf) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, best.feature]] <= best.threshold);
        let left = self.grow(x, target, l, depth + 1, params);
        let right = self.grow(x, target, r, depth + 1, params);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }
}

/// Gains within this relative margin of the incumbent count as ties, so the
/// choice does not depend on summation order.
const TIE_TOLERANCE: f64 = 1e-9;

/// Largest squared-error reduction over all features and midpoints between
/// distinct sorted values. Ties keep the lowest feature, then the lowest
/// threshold.
fn best_split(x: &Array2<f64>, target: &[f64], rows: &[usize], min_leaf: usize) -> Option<Candidate> {
    let n = rows.len();
    // Centering leaves every gain unchanged and avoids cancellation when the
    // target has a large offset.
    let mean = rows.iter().map(|&r| target[r]).sum::<f64>() / n as f64;
    let centered = |r: usize| target[r] - mean;
    let total: f64 = rows.iter().map(|&r| centered(r)).sum();
    let base = total * total / n as f64;
    let mut best: Option<Candidate> = None;
    let mut sorted = rows.to_vec();
    for feature in 0..x.ncols() {
        sorted.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += centered(sorted[k]);
            let n_left = k + 1;
            let n_right = n - n_left;
            let (lo, hi) = (x[[sorted[k], feature]], x[[sorted[k + 1], feature]]);
            if n_left < min_leaf || n_right < min_leaf || lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64 - base;
            if gain > best.map_or(0.0, |b| b.gain * (1.0 + TIE_TOLERANCE)) {
                best = Some(Candidate {
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                    gain,
                });
            }
        }
    }
    // Guard against splits whose only "gain" is rounding noise.
    let spread: f64 = rows.iter().map(|&r| centered(r) * centered(r)).sum();
    best.filter(|b| b.gain > 1e-12 * spread)
}
