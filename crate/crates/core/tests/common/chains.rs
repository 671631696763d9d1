//! Action-chain generators and the bigram count oracle for the Markov model.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use t2br_core::actionclass::ActionCategory::{self, *};

pub fn random_chains(seed: u64, n: usize) -> Vec<Vec<ActionCategory>> {
    let mut rng = super::rng(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(0..7);
            (0..len).map(|_| ActionCategory::ALL[rng.random_range(0..8)]).collect()
        })
        .collect()
}

/// 60 copies of starting → mixing → purification → heating among 40 random chains.
pub fn dominant_pattern_chains(seed: u64) -> Vec<Vec<ActionCategory>> {
    let mut rng = super::rng(seed);
    let mut chains = Vec::new();
    for _ in 0..60 {
        chains.push(vec![Starting, Mixing, Purification, Heating]);
    }
    for _ in 0..40 {
        let len = rng.random_range(2..6);
        chains.push((0..len).map(|_| ActionCategory::ALL[rng.random_range(0..8)]).collect());
    }
    chains.shuffle(&mut rng);
    chains
}

/// Row-normalized bigram counts with `None` as the START state. Rows with
/// no outgoing counts are all zero.
pub fn transition_oracle(chains: &[Vec<ActionCategory>]) -> BTreeMap<(Option<usize>, usize), f64> {
    let mut counts: BTreeMap<(Option<usize>, usize), f64> = BTreeMap::new();
    for c in chains {
        let mut prev = None;
        for a in c {
            *counts.entry((prev, a.index())).or_default() += 1.0;
            prev = Some(a.index());
        }
    }
    let mut table = BTreeMap::new();
    for from in std::iter::once(None).chain((0..8).map(Some)) {
        let row: f64 = (0..8).map(|t| counts.get(&(from, t)).copied().unwrap_or(0.0)).sum();
        for to in 0..8 {
            let p = if row == 0.0 { 0.0 } else { counts.get(&(from, to)).copied().unwrap_or(0.0) / row };
            table.insert((from, to), p);
        }
    }
    table
}
