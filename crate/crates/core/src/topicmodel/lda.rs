use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Term ↔ index mapping; indices follow first appearance in the corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

impl Vocabulary {
    pub fn build(docs: &[Vec<String>]) -> Self {
        let mut v = Vocabulary::default();
        for term in docs.iter().flatten() {
            if !v.index.contains_key(term) {
                v.index.insert(term.clone(), v.terms.len());
                v.terms.push(term.clone());
            }
        }
        v
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maps terms to ids, dropping out-of-vocabulary terms.
    pub fn encode(&self, doc: &[String]) -> Vec<usize> {
        doc.iter().filter_map(|t| self.id(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Document-topic prior 5.0 and topic-word prior 0.01.
    pub fn new(k: usize, sweeps: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: 5.0,
            beta: 0.01,
            sweeps,
            seed,
        }
    }
}

/// Collapsed Gibbs LDA state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocab: Vocabulary,
    /// Training documents as word ids.
    pub docs: Vec<Vec<usize>>,
    /// Topic of every training token.
    pub z: Vec<Vec<usize>>,
    pub n_dk: Vec<Vec<u32>>,
    pub n_kw: Vec<Vec<u32>>,
    pub n_k: Vec<u32>,
    pub n_d: Vec<u32>,
    pub seed: u64,
    pub sweeps_run: usize,
}

impl LdaModel {
    pub fn n_topics(&self) -> usize {
        self.k
    }

    pub fn total_tokens(&self) -> u64 {
        self.n_d.iter().map(|&n| u64::from(n)).sum()
    }

    /// `(n_dk + α) / (n_d + Kα)` for a training document.
    pub fn theta(&self, d: usize) -> Vec<f64> {
        let denom = f64::from(self.n_d[d]) + self.k as f64 * self.alpha;
        self.n_dk[d].iter().map(|&c| (f64::from(c) + self.alpha) / denom).collect()
    }

    /// `(n_kw + β) / (n_k + Vβ)`.
    pub fn phi(&self, k: usize) -> Vec<f64> {
        let v = self.vocab.len() as f64;
        let denom = f64::from(self.n_k[k]) + v * self.beta;
        self.n_kw[k].iter().map(|&c| (f64::from(c) + self.beta) / denom).collect()
    }

    pub fn phi_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|k| self.phi(k)).collect()
    }

    /// Recounts from `z` and compares with the cached tables.
    pub fn counts_consistent(&self) -> bool {
        let v = self.vocab.len();
        let mut n_dk = vec![vec![0u32; self.k]; self.docs.len()];
        let mut n_kw = vec![vec![0u32; v]; self.k];
        let mut n_k = vec![0u32; self.k];
        for (d, (doc, zs)) in self.docs.iter().zip(&self.z).enumerate() {
            if doc.len() != zs.len() {
                return false;
            }
            for (&w, &t) in doc.iter().zip(zs) {
                n_dk[d][t] += 1;
                n_kw[t][w] += 1;
                n_k[t] += 1;
            }
        }
        let sums_ok = self.n_dk.iter().zip(&self.n_d).all(|(row, &nd)| row.iter().sum::<u32>() == nd)
            && self.n_kw.iter().zip(&self.n_k).all(|(row, &nk)| row.iter().sum::<u32>() == nk)
            && u64::from(self.n_k.iter().sum::<u32>()) == self.total_tokens();
        sums_ok && n_dk == self.n_dk && n_kw == self.n_kw && n_k == self.n_k
    }
}

/// Sequential-sweep collapsed Gibbs sampler.
pub struct GibbsSampler {
    model: LdaModel,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Builds the vocabulary and draws uniform initial assignments.
    pub fn new(docs: &[Vec<String>], config: &LdaConfig) -> Result<Self> {
        if config.k < 1 {
            return Err(Error::InvalidInput("number of topics must be at least 1".into()));
        }
        if docs.is_empty() {
            return Err(Error::InvalidInput("cannot fit LDA on an empty corpus".into()));
        }
        if let Some(i) = docs.iter().position(Vec::is_empty) {
            return Err(Error::InvalidInput(format!("document {i} has no tokens")));
        }
        if !(config.alpha > 0.0 && config.beta > 0.0) {
            return Err(Error::InvalidInput("alpha and beta must be positive".into()));
        }
        let vocab = Vocabulary::build(docs);
        let k = config.k;
        let mut rng = util::rng(config.seed);
        let ids: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();
        let mut n_dk = vec![vec![0u32; k]; ids.len()];
        let mut n_kw = vec![vec![0u32; vocab.len()]; k];
        let mut n_k = vec![0u32; k];
        let mut z = Vec::with_capacity(ids.len());
        for (d, doc) in ids.iter().enumerate() {
            let zs: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
            for (&w, &t) in doc.iter().zip(&zs) {
                n_dk[d][t] += 1;
                n_kw[t][w] += 1;
                n_k[t] += 1;
            }
            z.push(zs);
        }
        let n_d = ids.iter().map(|d| d.len() as u32).collect();
        Ok(GibbsSampler {
            model: LdaModel {
                k,
                alpha: config.alpha,
                beta: config.beta,
                vocab,
                docs: ids,
                z,
                n_dk,
                n_kw,
                n_k,
                n_d,
                seed: config.seed,
                sweeps_run: 0,
            },
            rng,
            weights: vec![0.0; k],
        })
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self) {
        let m = &mut self.model;
        let vbeta = m.vocab.len() as f64 * m.beta;
        for d in 0..m.docs.len() {
            for i in 0..m.docs[d].len() {
                let w = m.docs[d][i];
                let old = m.z[d][i];
                m.n_dk[d][old] -= 1;
                m.n_kw[old][w] -= 1;
                m.n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..m.k {
                    let p = (f64::from(m.n_dk[d][t]) + m.alpha) * (f64::from(m.n_kw[t][w]) + m.beta)
                        / (f64::from(m.n_k[t]) + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                let new = sample_cumulative(&self.weights, self.rng.random::<f64>() * total);
                m.z[d][i] = new;
                m.n_dk[d][new] += 1;
                m.n_kw[new][w] += 1;
                m.n_k[new] += 1;
            }
        }
        m.sweeps_run += 1;
        debug_assert!(m.counts_consistent());
    }

    pub fn model(&self) -> &LdaModel {
        &self.model
    }

    pub fn into_model(self) -> LdaModel {
        self.model
    }
}

fn sample_cumulative(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub fn fit_lda(docs: &[Vec<String>], config: &LdaConfig) -> Result<LdaModel> {
    let mut sampler = GibbsSampler::new(docs, config)?;
    for _ in 0..config.sweeps {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// Gibbs passes over a held-out document with φ frozen.
pub const FOLD_IN_PASSES: usize = 20;

impl LdaModel {
    /// Topic mixture of an unseen document: [`FOLD_IN_PASSES`] Gibbs passes
    /// with frozen φ, averaging θ over the second half of the passes. The
    /// random stream is seeded from the model seed and the document's
    /// content, so the result does not depend on batch order. Documents with
    /// no in-vocabulary tokens get the uniform prior mean.
    pub fn fold_in(&self, doc: &[String]) -> Vec<f64> {
        let ids = self.vocab.encode(doc);
        let k = self.k;
        if ids.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let phi = self.phi_matrix();
        let key: Vec<u8> = ids.iter().flat_map(|&w| (w as u64).to_le_bytes()).collect();
        let mut rng = util::rng(util::fnv1a(self.seed, &key));
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = ids.iter().map(|_| rng.random_range(0..k)).collect();
        for &t in &z {
            counts[t] += 1;
        }
        let burn_in = FOLD_IN_PASSES / 2;
        let mut theta_sum = vec![0.0; k];
        let denom = ids.len() as f64 + k as f64 * self.alpha;
        let mut weights = vec![0.0; k];
        for pass in 0..FOLD_IN_PASSES {
            for (i, &w) in ids.iter().enumerate() {
                counts[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(counts[t]) + self.alpha) * phi[t][w];
                    weights[t] = total;
                }
                z[i] = sample_cumulative(&weights, rng.random::<f64>() * total);
                counts[z[i]] += 1;
            }
            if pass >= burn_in {
                for t in 0..k {
                    theta_sum[t] += (f64::from(counts[t]) + self.alpha) / denom;
                }
            }
        }
        let passes = (FOLD_IN_PASSES - burn_in) as f64;
        theta_sum.iter().map(|s| s / passes).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_lda(&[], &LdaConfig::new(2, 1, 0)).is_err());
        assert!(fit_lda(&docs(&["a b"]), &LdaConfig::new(0, 1, 0)).is_err());
        assert!(fit_lda(&[vec![]], &LdaConfig::new(2, 1, 0)).is_err());
    }

    #[test]
    fn single_topic_is_degenerate() {
        let m = fit_lda(&docs(&["a b c", "c d", "e"]), &LdaConfig::new(1, 5, 1)).unwrap();
        assert!(m.z.iter().flatten().all(|&t| t == 0));
        for d in 0..3 {
            assert_eq!(m.theta(d), vec![1.0]);
        }
        assert_eq!(m.fold_in(&docs(&["a z"])[0]), vec![1.0]);
    }

    #[test]
    fn distributions_are_normalized() {
        let m = fit_lda(&docs(&["a b c a", "c d d", "e a b"]), &LdaConfig::new(3, 10, 4)).unwrap();
        for d in 0..3 {
            assert!((m.theta(d).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for k in 0..3 {
            assert!((m.phi(k).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let folded = m.fold_in(&docs(&["a d q"])[0]);
        assert!((folded.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let corpus = docs(&["a b c a", "c d d", "e a b", "b b c"]);
        let a = fit_lda(&corpus, &LdaConfig::new(2, 25, 11)).unwrap();
        let b = fit_lda(&corpus, &LdaConfig::new(2, 25, 11)).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.fold_in(&corpus[0]), b.fold_in(&corpus[0]));
    }

    #[test]
    fn vocabulary_serializes_as_term_list() {
        let v = Vocabulary::build(&docs(&["b a b"]));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["b","a"]"#);
        let back: Vocabulary = serde_json::from_str(r#"["b","a"]"#).unwrap();
        assert_eq!(back.id("a"), Some(1));
    }
}
