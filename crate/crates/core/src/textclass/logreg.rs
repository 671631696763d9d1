use serde::{Deserialize, Serialize};

use super::tfidf::{DesignMatrix, SparseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegHyper {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper {
            l2: 1e-4,
            learning_rate: 1.0,
            max_iters: 2000,
            tol: 1e-6,
        }
    }
}

/// Binomial logistic regression, L2-penalized (bias excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_strength: f64,
    /// Objective value after each accepted step, starting at the initial point.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2/2 · ||w||²`.
pub fn logistic_loss(x: &DesignMatrix, y: &[bool], weights: &[f64], bias: f64, l2: f64) -> f64 {
    let n = x.n_rows().max(1) as f64;
    let nll: f64 = x
        .rows
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let z = row.dot(weights) + bias;
            if label {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    nll / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logistic_loss`] with respect to `(weights, bias)`.
pub fn logistic_gradient(x: &DesignMatrix, y: &[bool], weights: &[f64], bias: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.n_rows().max(1) as f64;
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_bias = 0.0;
    for (row, &label) in x.rows.iter().zip(y) {
        let residual = (sigmoid(row.dot(weights) + bias) - if label { 1.0 } else { 0.0 }) / n;
        for &(j, v) in &row.entries {
            grad[j] += residual * v;
        }
        grad_bias += residual;
    }
    (grad, grad_bias)
}

fn check_shapes(x: &DesignMatrix, y: &[bool]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    Ok(())
}

/// Full-batch gradient descent with backtracking. A step is accepted only if
/// it satisfies the Armijo condition, so the recorded loss never increases.
pub fn train_logreg(x: &DesignMatrix, y: &[bool], hyper: &LogRegHyper) -> Result<LogisticModel> {
    check_shapes(x, y)?;
    if hyper.l2 < 0.0 || hyper.learning_rate <= 0.0 {
        return Err(Error::InvalidInput("l2 must be >= 0 and learning_rate > 0".into()));
    }
    let mut w = vec![0.0; x.n_cols];
    let mut b = 0.0;
    let mut loss = logistic_loss(x, y, &w, b, hyper.l2);
    let mut history = vec![loss];
    let mut step = hyper.learning_rate;
    for _ in 0..hyper.max_iters {
        let (gw, gb) = logistic_gradient(x, y, &w, b, hyper.l2);
        let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if g2.sqrt() < hyper.tol {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let b_new = b - step * gb;
            let new_loss = logistic_loss(x, y, &w_new, b_new, hyper.l2);
            if new_loss <= loss - 0.5 * step * g2 {
                w = w_new;
                b = b_new;
                loss = new_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(loss);
        step = (step * 2.0).min(hyper.learning_rate * 64.0);
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        l2_strength: hyper.l2,
        loss_history: history,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        let z = x
            .entries
            .iter()
            .filter(|&&(j, _)| j < self.weights.len())
            .map(|&(j, v)| v * self.weights[j])
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn toy_separable() -> (DesignMatrix, Vec<bool>) {
        let pts = [
            ([2.0, 1.0], true),
            ([1.5, 2.0], true),
            ([3.0, 0.5], true),
            ([2.5, 2.5], true),
            ([-1.0, -0.5], false),
            ([-2.0, 0.5], false),
            ([-0.5, -2.0], false),
            ([-1.5, -1.5], false),
        ];
        let rows: Vec<Vec<f64>> = pts.iter().map(|(p, _)| p.to_vec()).collect();
        (DesignMatrix::from_dense(&rows).unwrap(), pts.iter().map(|p| p.1).collect())
    }

    #[test]
    fn dimension_mismatch() {
        let (x, y) = toy_separable();
        assert!(matches!(train_logreg(&x, &y[..3], &LogRegHyper::default()), Err(Error::Dimension(_))));
    }

    #[test]
    fn separable_toy_is_fit() {
        let (x, y) = toy_separable();
        let m = train_logreg(&x, &y, &LogRegHyper::default()).unwrap();
        for (row, &label) in x.rows.iter().zip(&y) {
            assert_eq!(m.predict_proba(row) >= 0.5, label);
        }
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn constant_labels_predict_constant() {
        let (x, _) = toy_separable();
        let y = vec![true; x.n_rows()];
        let m = train_logreg(&x, &y, &LogRegHyper { l2: 0.1, ..Default::default() }).unwrap();
        assert!(x.rows.iter().all(|r| m.predict_proba(r) > 0.5));
        let m = train_logreg(&x, &vec![false; x.n_rows()], &LogRegHyper { l2: 0.1, ..Default::default() }).unwrap();
        assert!(x.rows.iter().all(|r| m.predict_proba(r) < 0.5));
    }

    #[test]
    fn loss_is_midpoint_convex() {
        let (x, y) = toy_separable();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (ba, bb) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            let lm = logistic_loss(&x, &y, &mid, 0.5 * (ba + bb), 0.1);
            let avg = 0.5 * (logistic_loss(&x, &y, &a, ba, 0.1) + logistic_loss(&x, &y, &b, bb, 0.1));
            assert!(lm <= avg + 1e-12);
        }
    }
}
