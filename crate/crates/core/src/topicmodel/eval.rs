use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::lda::{fit_lda, LdaConfig, LdaModel};
use crate::error::{Error, Result};

/// Sum of `ln Σ_k θ_d[k] φ_k[w]` over all tokens, and the token count.
pub fn log_likelihood(theta: &[Vec<f64>], phi: &[Vec<f64>], docs: &[Vec<usize>]) -> (f64, usize) {
    let mut ll = 0.0;
    let mut n = 0;
    for (th, doc) in theta.iter().zip(docs) {
        for &w in doc {
            let p: f64 = th.iter().zip(phi).map(|(t, row)| t * row[w]).sum();
            ll += p.ln();
            n += 1;
        }
    }
    (ll, n)
}

fn perplexity_from(ll: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("no in-vocabulary tokens to evaluate".into()));
    }
    Ok((-ll / n as f64).exp())
}

/// Held-out perplexity; document mixtures come from fold-in with frozen φ.
pub fn perplexity(model: &LdaModel, held_docs: &[Vec<String>]) -> Result<f64> {
    let phi = model.phi_matrix();
    let theta: Vec<Vec<f64>> = held_docs.iter().map(|d| model.fold_in(d)).collect();
    let ids: Vec<Vec<usize>> = held_docs.iter().map(|d| model.vocab.encode(d)).collect();
    let (ll, n) = log_likelihood(&theta, &phi, &ids);
    perplexity_from(ll, n)
}

/// Perplexity of the training documents under their sampled mixtures.
pub fn training_perplexity(model: &LdaModel) -> Result<f64> {
    let phi = model.phi_matrix();
    let theta: Vec<Vec<f64>> = (0..model.docs.len()).map(|d| model.theta(d)).collect();
    let (ll, n) = log_likelihood(&theta, &phi, &model.docs);
    perplexity_from(ll, n)
}

/// Top `n` word ids of a topic: φ descending, then term ascending.
pub(crate) fn top_word_ids(model: &LdaModel, topic: usize, n: usize) -> Vec<usize> {
    let row = &model.n_kw[topic];
    let mut ids: Vec<usize> = (0..model.vocab.len()).collect();
    // φ is monotone in n_kw within a topic, so sort on the integer counts.
    ids.sort_by(|&a, &b| row[b].cmp(&row[a]).then_with(|| model.vocab.term(a).cmp(model.vocab.term(b))));
    ids.truncate(n);
    ids
}

/// UMass coherence averaged over topics. For each topic's top words
/// `w_1..w_n` (by φ) the score is `Σ_{i<j} ln((D(w_i, w_j) + 1) / D(w_j))`
/// with document frequencies taken from `docs`. Pairs whose `D(w_j)` is zero
/// are skipped.
pub fn coherence_umass(model: &LdaModel, docs: &[Vec<String>], top_n: usize) -> Result<f64> {
    if top_n < 2 {
        return Err(Error::InvalidInput("coherence needs top_n >= 2".into()));
    }
    if top_n > model.vocab.len() {
        return Err(Error::InvalidInput(format!(
            "top_n {top_n} exceeds vocabulary size {}",
            model.vocab.len()
        )));
    }
    let doc_sets: Vec<HashSet<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| model.vocab.id(t)).collect())
        .collect();
    let df = |w: usize| doc_sets.iter().filter(|s| s.contains(&w)).count();
    let co_df = |a: usize, b: usize| doc_sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count();
    let mut total = 0.0;
    for topic in 0..model.k {
        let top = top_word_ids(model, topic, top_n);
        let mut score = 0.0;
        for i in 0..top.len() {
            for j in (i + 1)..top.len() {
                let dj = df(top[j]);
                if dj == 0 {
                    continue;
                }
                score += ((co_df(top[i], top[j]) + 1) as f64 / dj as f64).ln();
            }
        }
        total += score;
    }
    Ok(total / model.k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub perplexity: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionReport {
    pub rows: Vec<KScore>,
    pub chosen_k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
    pub top_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectKConfig {
    pub k_values: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
    /// Keywords per topic for coherence; capped at the vocabulary size.
    pub top_n: usize,
}

impl SelectKConfig {
    pub fn range(k_min: usize, k_max: usize, sweeps: usize, seed: u64) -> Self {
        SelectKConfig {
            k_values: (k_min..=k_max).collect(),
            alpha: 5.0,
            beta: 0.01,
            sweeps,
            seed,
            top_n: 10,
        }
    }
}

// Competition rank (1 + number strictly better), with a relative tolerance
// so that rounding noise does not break ties.
fn ranks(values: &[f64], lower_is_better: bool) -> Vec<usize> {
    let better = |a: f64, b: f64| {
        let tol = 1e-9 * a.abs().max(b.abs()).max(1.0);
        if lower_is_better {
            a < b - tol
        } else {
            a > b + tol
        }
    };
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&o| better(o, v)).count())
        .collect()
}

/// Fits one model per K; perplexity is measured by fold-in on `held_out`
/// (or on the training documents when none are given). The chosen K has the
/// smallest rank sum of (low perplexity, high coherence), ties to smaller K.
pub fn select_k(docs: &[Vec<String>], held_out: Option<&[Vec<String>]>, config: &SelectKConfig) -> Result<ModelSelectionReport> {
    let k_values: Vec<usize> = config.k_values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if k_values.is_empty() {
        return Err(Error::InvalidInput("empty K range".into()));
    }
    let eval_docs = held_out.unwrap_or(docs);
    let mut rows = Vec::with_capacity(k_values.len());
    let mut top_n = config.top_n;
    for &k in &k_values {
        let model = fit_lda(
            docs,
            &LdaConfig {
                k,
                alpha: config.alpha,
                beta: config.beta,
                sweeps: config.sweeps,
                seed: config.seed,
            },
        )?;
        top_n = config.top_n.min(model.vocab.len()).max(2);
        rows.push(KScore {
            k,
            perplexity: perplexity(&model, eval_docs)?,
            coherence: coherence_umass(&model, docs, top_n)?,
        });
    }
    let p_ranks = ranks(&rows.iter().map(|r| r.perplexity).collect::<Vec<_>>(), true);
    let c_ranks = ranks(&rows.iter().map(|r| r.coherence).collect::<Vec<_>>(), false);
    let best = (0..rows.len())
        .min_by_key(|&i| (p_ranks[i] + c_ranks[i], rows[i].k))
        .unwrap_or(0);
    Ok(ModelSelectionReport {
        chosen_k: rows[best].k,
        rows,
        alpha: config.alpha,
        beta: config.beta,
        sweeps: config.sweeps,
        seed: config.seed,
        top_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_distributions_give_vocab_size() {
        let v = 10;
        let phi = vec![vec![1.0 / v as f64; v]; 3];
        let theta = vec![vec![1.0 / 3.0; 3]; 2];
        let docs = vec![vec![0, 3, 9], vec![4, 4]];
        let (ll, n) = log_likelihood(&theta, &phi, &docs);
        assert!((perplexity_from(ll, n).unwrap() - 10.0).abs() < 1e-12);
        assert!(perplexity_from(0.0, 0).is_err());
    }

    #[test]
    fn rank_ties_and_order() {
        assert_eq!(ranks(&[3.0, 1.0, 1.0, 2.0], true), vec![4, 1, 1, 3]);
        assert_eq!(ranks(&[3.0, 1.0], false), vec![1, 2]);
    }
}
