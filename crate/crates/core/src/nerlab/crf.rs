//! Linear-chain inference in log space.
//!
//! Emission scores are given per position and tag; `Potentials` carries the
//! start, transition and end scores with masked entries set to `-inf`.

use crate::util::logsumexp;

#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub start: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    pub end: Vec<f64>,
}

impl Potentials {
    pub fn n_tags(&self) -> usize {
        self.start.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_z: f64,
    /// `node[i][t] = P(y_i = t)`.
    pub node: Vec<Vec<f64>>,
    /// `pair[a][b] = Σ_i P(y_{i-1} = a, y_i = b)`.
    pub pair: Vec<Vec<f64>>,
}

pub fn path_score(pot: &Potentials, emissions: &[Vec<f64>], path: &[usize]) -> f64 {
    if path.is_empty() {
        return 0.0;
    }
    let mut s = pot.start[path[0]] + emissions[0][path[0]];
    for i in 1..path.len() {
        s += pot.trans[path[i - 1]][path[i]] + emissions[i][path[i]];
    }
    s + pot.end[path[path.len() - 1]]
}

fn forward(pot: &Potentials, emissions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = pot.n_tags();
    let mut alpha = Vec::with_capacity(emissions.len());
    alpha.push((0..n).map(|t| pot.start[t] + emissions[0][t]).collect::<Vec<f64>>());
    let mut buf = vec![0.0; n];
    for em in &emissions[1..] {
        let prev = alpha.last().expect("non-empty");
        let row = (0..n)
            .map(|b| {
                for a in 0..n {
                    buf[a] = prev[a] + pot.trans[a][b];
                }
                logsumexp(&buf) + em[b]
            })
            .collect();
        alpha.push(row);
    }
    alpha
}

fn backward(pot: &Potentials, emissions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = pot.n_tags();
    let len = emissions.len();
    let mut beta = vec![Vec::new(); len];
    beta[len - 1] = pot.end.clone();
    let mut buf = vec![0.0; n];
    for i in (0..len - 1).rev() {
        let row = (0..n)
            .map(|a| {
                for b in 0..n {
                    buf[b] = pot.trans[a][b] + emissions[i + 1][b] + beta[i + 1][b];
                }
                logsumexp(&buf)
            })
            .collect();
        beta[i] = row;
    }
    beta
}

/// Log-partition function. `-inf` when no path is allowed; `0` for an empty sequence.
pub fn log_partition(pot: &Potentials, emissions: &[Vec<f64>]) -> f64 {
    if emissions.is_empty() {
        return 0.0;
    }
    let alpha = forward(pot, emissions);
    let last = alpha.last().expect("non-empty");
    let terms: Vec<f64> = last.iter().zip(&pot.end).map(|(a, e)| a + e).collect();
    logsumexp(&terms)
}

/// Forward-backward marginals. Requires at least one token and one allowed path.
pub fn marginals(pot: &Potentials, emissions: &[Vec<f64>]) -> Marginals {
    let n = pot.n_tags();
    let len = emissions.len();
    assert!(len > 0, "marginals of an empty sequence");
    let alpha = forward(pot, emissions);
    let beta = backward(pot, emissions);
    let terms: Vec<f64> = alpha[len - 1].iter().zip(&pot.end).map(|(a, e)| a + e).collect();
    let log_z = logsumexp(&terms);
    let node = (0..len)
        .map(|i| (0..n).map(|t| (alpha[i][t] + beta[i][t] - log_z).exp()).collect())
        .collect();
    let mut pair = vec![vec![0.0; n]; n];
    for i in 1..len {
        for (a, row) in pair.iter_mut().enumerate() {
            let left = alpha[i - 1][a];
            if left == f64::NEG_INFINITY {
                continue;
            }
            for (b, cell) in row.iter_mut().enumerate() {
                let s = left + pot.trans[a][b] + emissions[i][b] + beta[i][b];
                if s > f64::NEG_INFINITY {
                    *cell += (s - log_z).exp();
                }
            }
        }
    }
    Marginals { log_z, node, pair }
}

/// Highest-scoring path and its score. At every backpointer and at the final
/// position, ties go to the lowest tag index.
pub fn viterbi(pot: &Potentials, emissions: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = pot.n_tags();
    let len = emissions.len();
    if len == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..n).map(|t| pot.start[t] + emissions[0][t]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(len - 1);
    for em in &emissions[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut ptr = vec![0; n];
        for b in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (a, &d) in delta.iter().enumerate() {
                let s = d + pot.trans[a][b];
                if s > best {
                    best = s;
                    arg = a;
                }
            }
            next[b] = best + em[b];
            ptr[b] = arg;
        }
        back.push(ptr);
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for t in 0..n {
        let s = delta[t] + pot.end[t];
        if s > best {
            best = s;
            last = t;
        }
    }
    let mut path = vec![last; len];
    for i in (1..len).rev() {
        path[i - 1] = back[i - 1][path[i]];
    }
    (path, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(n: usize) -> Potentials {
        Potentials {
            start: vec![0.0; n],
            trans: vec![vec![0.0; n]; n],
            end: vec![0.0; n],
        }
    }

    #[test]
    fn single_token_uniform() {
        let mut pot = open(4);
        pot.start[1] = f64::NEG_INFINITY;
        let em = vec![vec![0.7; 4]];
        assert!((log_partition(&pot, &em) - (0.7 + 3f64.ln())).abs() < 1e-12);
        let m = marginals(&pot, &em);
        assert_eq!(m.node[0][1], 0.0);
        assert!((m.node[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn viterbi_tie_goes_to_lowest_index() {
        let pot = open(3);
        let em = vec![vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 2.0]];
        assert_eq!(viterbi(&pot, &em).0, vec![0, 1]);
    }

    #[test]
    fn pair_marginals_sum_to_positions() {
        let pot = open(3);
        let em = vec![vec![0.1, 0.5, -0.3], vec![0.2, 0.0, 0.9], vec![1.0, -1.0, 0.0]];
        let m = marginals(&pot, &em);
        let total: f64 = m.pair.iter().flatten().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }
}
