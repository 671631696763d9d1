use serde::{Deserialize, Serialize};

use crate::actionclass::ActionCategory;
use crate::error::{Error, Result};

const N: usize = ActionCategory::ALL.len();

/// First-order Markov chain over action categories with a START state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovActionModel {
    pub start_counts: [u64; N],
    pub transition_counts: [[u64; N]; N],
    /// Additive smoothing constant λ.
    pub smoothing: f64,
}

/// A ranked chain with its cumulative probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPath {
    pub actions: Vec<ActionCategory>,
    pub probability: f64,
}

pub fn fit_markov(chains: &[Vec<ActionCategory>]) -> Result<MarkovActionModel> {
    fit_markov_smoothed(chains, 0.0)
}

pub fn fit_markov_smoothed(chains: &[Vec<ActionCategory>], smoothing: f64) -> Result<MarkovActionModel> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidInput(format!("smoothing must be finite and non-negative, got {smoothing}")));
    }
    let mut model = MarkovActionModel {
        start_counts: [0; N],
        transition_counts: [[0; N]; N],
        smoothing,
    };
    let mut any = false;
    for chain in chains {
        let Some(first) = chain.first() else { continue };
        any = true;
        model.start_counts[first.index()] += 1;
        for w in chain.windows(2) {
            model.transition_counts[w[0].index()][w[1].index()] += 1;
        }
    }
    if !any {
        return Err(Error::InvalidInput("cannot fit a Markov model: every chain is empty".into()));
    }
    Ok(model)
}

impl MarkovActionModel {
    fn conditional(&self, counts: &[u64; N], to: ActionCategory) -> f64 {
        let total: u64 = counts.iter().sum();
        let denom = total as f64 + N as f64 * self.smoothing;
        if denom == 0.0 {
            0.0
        } else {
            (counts[to.index()] as f64 + self.smoothing) / denom
        }
    }

    /// `P(to | from)`, with `from = None` for the START state.
    pub fn probability(&self, from: Option<ActionCategory>, to: ActionCategory) -> f64 {
        match from {
            None => self.conditional(&self.start_counts, to),
            Some(f) => self.conditional(&self.transition_counts[f.index()], to),
        }
    }

    /// Product of START and transition conditionals along `chain`.
    pub fn chain_probability(&self, chain: &[ActionCategory]) -> f64 {
        let mut prev = None;
        let mut p = 1.0;
        for &a in chain {
            p *= self.probability(prev, a);
            prev = Some(a);
        }
        p
    }

    /// Conditional probability table: row 0 is START, rows 1..=8 follow
    /// `ActionCategory::ALL`.
    pub fn table(&self) -> Vec<Vec<f64>> {
        std::iter::once(None)
            .chain(ActionCategory::ALL.into_iter().map(Some))
            .map(|from| ActionCategory::ALL.iter().map(|&to| self.probability(from, to)).collect())
            .collect()
    }

    /// The `k` most probable chains of length `length`. Zero-probability
    /// chains are never returned; ties go to the lexicographically smaller
    /// chain in category order.
    pub fn top_paths(&self, length: usize, k: usize) -> Vec<ActionPath> {
        if length == 0 || k == 0 {
            return Vec::new();
        }
        // beams[s] holds the k best prefixes ending in state s.
        let mut beams: Vec<Vec<ActionPath>> = ActionCategory::ALL
            .iter()
            .map(|&a| {
                let p = self.probability(None, a);
                if p > 0.0 {
                    vec![ActionPath { actions: vec![a], probability: p }]
                } else {
                    Vec::new()
                }
            })
            .collect();
        for _ in 1..length {
            beams = ActionCategory::ALL
                .iter()
                .map(|&to| {
                    let mut cand: Vec<ActionPath> = beams
                        .iter()
                        .flatten()
                        .filter_map(|path| {
                            let p = path.probability * self.probability(path.actions.last().copied(), to);
                            (p > 0.0).then(|| {
                                let mut actions = path.actions.clone();
                                actions.push(to);
                                ActionPath { actions, probability: p }
                            })
                        })
                        .collect();
                    rank(&mut cand);
                    cand.truncate(k);
                    cand
                })
                .collect();
        }
        let mut all: Vec<ActionPath> = beams.into_iter().flatten().collect();
        rank(&mut all);
        all.truncate(k);
        all
    }
}

fn rank(paths: &mut [ActionPath]) {
    paths.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.actions.cmp(&b.actions)));
}
