//! Two-component PCA of the topic-word matrix.
//!
//! Rows are mean-centered; the K×K Gram matrix `X Xᵀ` is diagonalized with
//! cyclic Jacobi rotations, and principal axes are recovered as
//! `Xᵀ u / √λ`. This avoids forming the V×V covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    /// Projection of each centered row onto the two components.
    pub coords: Vec<[f64; 2]>,
    /// Unit-norm principal axes, one per component, each of length V.
    pub components: [Vec<f64>; 2],
    /// Eigenvalues of `X Xᵀ` for the two components (sum of squared scores).
    pub eigenvalues: [f64; 2],
}

/// Symmetric eigendecomposition by cyclic Jacobi. Returns eigenvalues and
/// column eigenvectors (as rows of the returned matrix), sorted by
/// descending eigenvalue, ties by original index.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

// Unit vector orthogonal to `basis`, by Gram-Schmidt over e_0, e_1, ...
fn orthogonal_complement(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
    vec![0.0; dim]
}

/// PCA of the rows of `matrix` (K rows of length V, K ≥ 2).
pub fn pca_2d(matrix: &[Vec<f64>]) -> Result<Pca2> {
    let k = matrix.len();
    if k < 2 {
        return Err(Error::InvalidInput("PCA topic map needs at least 2 topics".into()));
    }
    let dim = matrix[0].len();
    if matrix.iter().any(|r| r.len() != dim) || dim == 0 {
        return Err(Error::Dimension("topic rows must share a non-zero length".into()));
    }
    let mean: Vec<f64> = (0..dim).map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / k as f64).collect();
    let centered: Vec<Vec<f64>> = matrix
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let gram: Vec<Vec<f64>> = centered
        .iter()
        .map(|a| centered.iter().map(|b| dot(a, b)).collect())
        .collect();
    let (values, vectors) = jacobi_eigen(&gram);
    let top = values[0].max(0.0);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut eigenvalues = [0.0; 2];
    for c in 0..2 {
        let lambda = values.get(c).copied().unwrap_or(0.0);
        let mut axis = if lambda > 1e-12 * top && lambda > 0.0 {
            let u = &vectors[c];
            let s = lambda.sqrt();
            let mut axis: Vec<f64> = (0..dim)
                .map(|j| centered.iter().zip(u).map(|(row, ui)| row[j] * ui).sum::<f64>() / s)
                .collect();
            // re-orthonormalize against earlier axes to absorb rounding
            for b in &components {
                let proj = dot(&axis, b);
                axis.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let norm = dot(&axis, &axis).sqrt();
            axis.iter_mut().for_each(|x| *x /= norm);
            eigenvalues[c] = lambda;
            axis
        } else {
            orthogonal_complement(&components, dim)
        };
        fix_sign(&mut axis);
        components.push(axis);
    }
    let coords = centered
        .iter()
        .map(|row| [dot(row, &components[0]), dot(row, &components[1])])
        .collect();
    let [c0, c1]: [Vec<f64>; 2] = components.try_into().expect("two components");
    Ok(Pca2 {
        coords,
        components: [c0, c1],
        eigenvalues,
    })
}
