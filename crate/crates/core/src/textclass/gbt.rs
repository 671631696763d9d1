//! Gradient-boosted regression trees on logistic loss with second-order
//! (Newton) leaf weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::logreg::sigmoid;
use super::tfidf::{DesignMatrix, SparseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Multiplier on gradient and hessian of positive rows.
    pub scale_pos_weight: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    /// Minimum loss reduction (gamma) for a split.
    pub min_split_loss: f64,
    /// L2 penalty on leaf weights (lambda).
    pub reg_lambda: f64,
}

impl Default for GbtHyper {
    /// 110 trees, depth 5, learning rate 0.03, positive weight 2,
    /// min child weight 2, min split loss 3.
    fn default() -> Self {
        GbtHyper {
            n_trees: 110,
            max_depth: 5,
            learning_rate: 0.03,
            scale_pos_weight: 2.0,
            min_child_weight: 2.0,
            min_split_loss: 3.0,
            reg_lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &SparseVector) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(feature) < threshold { left } else { right },
            }
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub scale_pos_weight: f64,
    pub min_child_weight: f64,
    pub min_split_loss: f64,
    pub reg_lambda: f64,
    /// Margin before any tree; 0 corresponds to a base probability of 0.5.
    pub base_score: f64,
    /// Training log-loss after `k` trees, `k = 0..=trees.len()`, with
    /// positive rows weighted by `scale_pos_weight` as in boosting.
    #[serde(default)]
    pub staged_log_loss: Vec<f64>,
}

impl GbtModel {
    pub fn predict_margin(&self, x: &SparseVector) -> f64 {
        self.predict_margin_staged(x, self.trees.len())
    }

    /// Margin using only the first `k` trees.
    pub fn predict_margin_staged(&self, x: &SparseVector, k: usize) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().take(k).map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        sigmoid(self.predict_margin(x))
    }
}

pub fn log_loss(probabilities: &[f64], y: &[bool]) -> f64 {
    weighted_log_loss(probabilities, y, 1.0)
}

/// Log-loss averaged with weight `pos_weight` on positive rows and 1 on
/// negative rows.
pub fn weighted_log_loss(probabilities: &[f64], y: &[bool], pos_weight: f64) -> f64 {
    let eps = 1e-15;
    let (mut total, mut weight) = (0.0, 0.0);
    for (&p, &label) in probabilities.iter().zip(y) {
        let p = p.clamp(eps, 1.0 - eps);
        if label {
            total -= pos_weight * p.ln();
            weight += pos_weight;
        } else {
            total -= (1.0 - p).ln();
            weight += 1.0;
        }
    }
    if weight == 0.0 {
        0.0
    } else {
        total / weight
    }
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct TreeBuilder<'a> {
    x: &'a DesignMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    hyper: &'a GbtHyper,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.hyper.reg_lambda)
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.hyper.reg_lambda)
    }

    fn best_split(&self, rows: &[usize], g_total: f64, h_total: f64) -> Option<SplitCandidate> {
        // feature -> nonzero (value, g, h) among the node's rows
        let mut columns: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for &r in rows {
            for &(j, v) in &self.x.rows[r].entries {
                columns.entry(j).or_default().push((v, self.grad[r], self.hess[r]));
            }
        }
        let parent = self.score(g_total, h_total);
        let mut best: Option<SplitCandidate> = None;
        for (feature, mut values) in columns {
            let nonzero = values.len();
            if nonzero < rows.len() {
                let (gz, hz) = values
                    .iter()
                    .fold((g_total, h_total), |(g, h), &(_, gi, hi)| (g - gi, h - hi));
                values.push((0.0, gz, hz));
            }
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            // merge equal values
            let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(values.len());
            for (v, g, h) in values {
                match merged.last_mut() {
                    Some(last) if last.0 == v => {
                        last.1 += g;
                        last.2 += h;
                    }
                    _ => merged.push((v, g, h)),
                }
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in merged.windows(2) {
                gl += w[0].1;
                hl += w[0].2;
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < self.hyper.min_child_weight || hr < self.hyper.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent) - self.hyper.min_split_loss;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        gain,
                        feature,
                        threshold: 0.5 * (w[0].0 + w[1].0),
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let g: f64 = rows.iter().map(|&r| self.grad[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r]).sum();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: self.leaf_value(g, h),
        });
        if depth >= self.hyper.max_depth {
            return id;
        }
        let Some(split) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x.rows[r].get(split.feature) < split.threshold);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Stage-wise boosting. Splits are exact-greedy; ties keep the lowest
/// feature index, then the lowest threshold.
pub fn train_gbt(x: &DesignMatrix, y: &[bool], hyper: &GbtHyper) -> Result<GbtModel> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if hyper.learning_rate <= 0.0
        || hyper.scale_pos_weight <= 0.0
        || hyper.min_child_weight < 0.0
        || hyper.min_split_loss < 0.0
        || hyper.reg_lambda < 0.0
    {
        return Err(Error::InvalidInput("boosting hyperparameters out of range".into()));
    }
    let n = x.n_rows();
    let mut margins = vec![0.0; n];
    let mut model = GbtModel {
        trees: Vec::with_capacity(hyper.n_trees),
        learning_rate: hyper.learning_rate,
        n_trees: hyper.n_trees,
        max_depth: hyper.max_depth,
        scale_pos_weight: hyper.scale_pos_weight,
        min_child_weight: hyper.min_child_weight,
        min_split_loss: hyper.min_split_loss,
        reg_lambda: hyper.reg_lambda,
        base_score: 0.0,
        staged_log_loss: Vec::with_capacity(hyper.n_trees + 1),
    };
    let probs = |m: &[f64]| m.iter().map(|&z| sigmoid(z)).collect::<Vec<f64>>();
    model.staged_log_loss.push(weighted_log_loss(&probs(&margins), y, hyper.scale_pos_weight));
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..hyper.n_trees {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let (target, weight) = if y[i] { (1.0, hyper.scale_pos_weight) } else { (0.0, 1.0) };
            grad[i] = weight * (p - target);
            hess[i] = weight * (p * (1.0 - p)).max(1e-16);
        }
        let mut builder = TreeBuilder {
            x,
            grad: &grad,
            hess: &hess,
            hyper,
            nodes: Vec::new(),
        };
        builder.build((0..n).collect(), 0);
        let tree = RegressionTree { nodes: builder.nodes };
        for (i, row) in x.rows.iter().enumerate() {
            margins[i] += hyper.learning_rate * tree.predict(row);
        }
        model.trees.push(tree);
        model.staged_log_loss.push(weighted_log_loss(&probs(&margins), y, hyper.scale_pos_weight));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_node_is_a_single_leaf() {
        let x = DesignMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let y = vec![true; 4];
        let hyper = GbtHyper {
            n_trees: 3,
            min_split_loss: 0.0,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let m = train_gbt(&x, &y, &hyper).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes.len(), 1);
            assert!(matches!(t.nodes[0], TreeNode::Leaf { value } if value > 0.0));
        }
        assert!(m.predict_proba(&x.rows[0]) > 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let x = DesignMatrix::from_dense(&[vec![1.0]]).unwrap();
        assert!(matches!(train_gbt(&x, &[true, false], &GbtHyper::default()), Err(Error::Dimension(_))));
    }

    #[test]
    fn split_tie_break_prefers_low_feature() {
        // Features 0 and 1 are identical, so both give the same gain.
        let x = DesignMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let y = vec![false, false, true, true];
        let hyper = GbtHyper {
            n_trees: 1,
            max_depth: 1,
            min_split_loss: 0.0,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let m = train_gbt(&x, &y, &hyper).unwrap();
        assert!(matches!(m.trees[0].nodes[0], TreeNode::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn min_split_loss_blocks_weak_splits() {
        let x = DesignMatrix::from_dense(&[vec![0.0], vec![1.0]]).unwrap();
        let y = vec![false, true];
        let hyper = GbtHyper {
            n_trees: 1,
            min_split_loss: 100.0,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let m = train_gbt(&x, &y, &hyper).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
    }
}
