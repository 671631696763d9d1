use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::crf::{self, Potentials};
use super::features::{self, FeatureConfig};
use super::tags::{decode_tags, DecodeMode, EntitySpan, Schema, TagSet, TransitionMask};
use crate::error::{Error, Result};
use crate::util;

const MODEL_FORMAT: &str = "t2br-crf";
const MODEL_VERSION: u32 = 1;

/// Features of one sequence, resolved against a model's feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFeatures {
    /// Active feature rows per token.
    pub rows: Vec<Vec<usize>>,
    /// Optional external embedding per token.
    pub dense: Option<Vec<Vec<f64>>>,
}

impl SequenceFeatures {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Offsets of each parameter block in [`CrfModel::params`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    /// `feature_row * n_tags + tag`.
    pub emission: Range<usize>,
    /// `embedding_dim * n_tags + tag`.
    pub embedding: Range<usize>,
    /// `from * n_tags + to`.
    pub transition: Range<usize>,
    pub start: Range<usize>,
    pub end: Range<usize>,
}

/// Linear-chain CRF over hashed sparse features and optional dense embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub schema: Option<Schema>,
    pub tagset: TagSet,
    pub mask: TransitionMask,
    pub features: FeatureConfig,
    pub embedding_dim: usize,
    /// Parameters laid out as described by [`CrfModel::layout`]. Entries for
    /// masked transitions stay at zero and are never read.
    pub params: Vec<f64>,
    feature_keys: Vec<u64>,
    feature_index: HashMap<u64, usize>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    schema: Option<Schema>,
    tagset: TagSet,
    features: FeatureConfig,
    embedding_dim: usize,
    feature_keys: Vec<u64>,
    params: Vec<f64>,
}

impl CrfModel {
    /// Zero-initialized model with one emission row per feature key.
    pub fn new(
        schema: Option<Schema>,
        tagset: TagSet,
        features: FeatureConfig,
        mut feature_keys: Vec<u64>,
        embedding_dim: usize,
    ) -> Self {
        feature_keys.sort_unstable();
        feature_keys.dedup();
        let mask = TransitionMask::iobes(&tagset);
        let n = tagset.len();
        let n_params = (feature_keys.len() + embedding_dim) * n + n * n + 2 * n;
        let feature_index = feature_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        CrfModel {
            schema,
            tagset,
            mask,
            features,
            embedding_dim,
            params: vec![0.0; n_params],
            feature_keys,
            feature_index,
        }
    }

    pub fn for_schema(schema: Schema, features: FeatureConfig, feature_keys: Vec<u64>, embedding_dim: usize) -> Self {
        Self::new(Some(schema), schema.tagset(), features, feature_keys, embedding_dim)
    }

    pub fn n_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_keys.len()
    }

    pub fn layout(&self) -> ParamLayout {
        let n = self.n_tags();
        let e = self.feature_keys.len() * n;
        let d = e + self.embedding_dim * n;
        let t = d + n * n;
        ParamLayout {
            emission: 0..e,
            embedding: e..d,
            transition: d..t,
            start: t..t + n,
            end: t + n..t + 2 * n,
        }
    }

    /// Whether a parameter index is live (not a masked transition).
    pub fn is_free(&self, index: usize) -> bool {
        let l = self.layout();
        let n = self.n_tags();
        if l.transition.contains(&index) {
            let k = index - l.transition.start;
            self.mask.allowed[k / n][k % n]
        } else if l.start.contains(&index) {
            self.mask.allowed_start[index - l.start.start]
        } else if l.end.contains(&index) {
            self.mask.allowed_end[index - l.end.start]
        } else {
            index < self.params.len()
        }
    }

    pub fn potentials(&self) -> Potentials {
        let l = self.layout();
        let n = self.n_tags();
        let gate = |ok: bool, v: f64| if ok { v } else { f64::NEG_INFINITY };
        Potentials {
            start: (0..n).map(|t| gate(self.mask.allowed_start[t], self.params[l.start.start + t])).collect(),
            end: (0..n).map(|t| gate(self.mask.allowed_end[t], self.params[l.end.start + t])).collect(),
            trans: (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| gate(self.mask.allowed[a][b], self.params[l.transition.start + a * n + b]))
                        .collect()
                })
                .collect(),
        }
    }

    /// Resolves tokens to feature rows; unseen features are dropped.
    pub fn featurize(&self, tokens: &[String], embeddings: Option<&[Vec<f64>]>) -> Result<SequenceFeatures> {
        let dense = match (embeddings, self.embedding_dim) {
            (_, 0) => None,
            (None, d) => return Err(Error::InvalidInput(format!("model expects {d}-dimensional token embeddings"))),
            (Some(e), d) => {
                if e.len() != tokens.len() || e.iter().any(|v| v.len() != d) {
                    return Err(Error::Dimension(format!(
                        "expected {} embeddings of dimension {d}",
                        tokens.len()
                    )));
                }
                Some(e.to_vec())
            }
        };
        let rows = features::extract(tokens, &self.features)
            .into_iter()
            .map(|keys| keys.iter().filter_map(|k| self.feature_index.get(k).copied()).collect())
            .collect();
        Ok(SequenceFeatures { rows, dense })
    }

    pub fn emissions(&self, seq: &SequenceFeatures) -> Vec<Vec<f64>> {
        let n = self.n_tags();
        let l = self.layout();
        (0..seq.len())
            .map(|i| {
                let mut scores = vec![0.0; n];
                for &f in &seq.rows[i] {
                    let w = &self.params[f * n..(f + 1) * n];
                    scores.iter_mut().zip(w).for_each(|(s, w)| *s += w);
                }
                if let Some(dense) = &seq.dense {
                    for (j, &x) in dense[i].iter().enumerate() {
                        let base = l.embedding.start + j * n;
                        let w = &self.params[base..base + n];
                        scores.iter_mut().zip(w).for_each(|(s, w)| *s += x * w);
                    }
                }
                scores
            })
            .collect()
    }

    pub fn log_partition(&self, seq: &SequenceFeatures) -> f64 {
        crf::log_partition(&self.potentials(), &self.emissions(seq))
    }

    pub fn marginals(&self, seq: &SequenceFeatures) -> crf::Marginals {
        crf::marginals(&self.potentials(), &self.emissions(seq))
    }

    pub fn path_score(&self, seq: &SequenceFeatures, path: &[usize]) -> f64 {
        crf::path_score(&self.potentials(), &self.emissions(seq), path)
    }

    fn check_gold(&self, seq: &SequenceFeatures, gold: &[usize]) -> Result<()> {
        if gold.len() != seq.len() || gold.is_empty() {
            return Err(Error::Dimension(format!("{} tags for {} tokens", gold.len(), seq.len())));
        }
        if let Some(pos) = self.mask.first_violation(gold) {
            return Err(Error::InvalidInput(format!("gold tags violate IOBES constraints at position {pos}")));
        }
        Ok(())
    }

    /// Negative log-likelihood of the gold path.
    pub fn nll(&self, seq: &SequenceFeatures, gold: &[usize]) -> Result<f64> {
        self.check_gold(seq, gold)?;
        let pot = self.potentials();
        let em = self.emissions(seq);
        Ok(crf::log_partition(&pot, &em) - crf::path_score(&pot, &em, gold))
    }

    /// Adds `scale · ∇nll` into `grad` and returns the unscaled nll. The
    /// gradient is expected minus observed feature counts.
    pub fn accumulate_gradient(&self, seq: &SequenceFeatures, gold: &[usize], scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.check_gold(seq, gold)?;
        let n = self.n_tags();
        let l = self.layout();
        let pot = self.potentials();
        let em = self.emissions(seq);
        let m = crf::marginals(&pot, &em);
        let nll = m.log_z - crf::path_score(&pot, &em, gold);
        for i in 0..seq.len() {
            let mut delta = m.node[i].clone();
            delta[gold[i]] -= 1.0;
            for &f in &seq.rows[i] {
                let g = &mut grad[f * n..(f + 1) * n];
                g.iter_mut().zip(&delta).for_each(|(g, d)| *g += scale * d);
            }
            if let Some(dense) = &seq.dense {
                for (j, &x) in dense[i].iter().enumerate() {
                    let base = l.embedding.start + j * n;
                    let g = &mut grad[base..base + n];
                    g.iter_mut().zip(&delta).for_each(|(g, d)| *g += scale * x * d);
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if self.mask.allowed[a][b] {
                    grad[l.transition.start + a * n + b] += scale * m.pair[a][b];
                }
            }
        }
        for w in gold.windows(2) {
            grad[l.transition.start + w[0] * n + w[1]] -= scale;
        }
        let last = seq.len() - 1;
        for t in 0..n {
            if self.mask.allowed_start[t] {
                grad[l.start.start + t] += scale * m.node[0][t];
            }
            if self.mask.allowed_end[t] {
                grad[l.end.start + t] += scale * m.node[last][t];
            }
        }
        grad[l.start.start + gold[0]] -= scale;
        grad[l.end.start + gold[last]] -= scale;
        Ok(nll)
    }

    pub fn nll_grad(&self, seq: &SequenceFeatures, gold: &[usize]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let nll = self.accumulate_gradient(seq, gold, 1.0, &mut grad)?;
        Ok((nll, grad))
    }

    pub fn viterbi(&self, seq: &SequenceFeatures) -> Vec<usize> {
        crf::viterbi(&self.potentials(), &self.emissions(seq)).0
    }

    pub fn tag(&self, tokens: &[String], embeddings: Option<&[Vec<f64>]>) -> Result<Vec<usize>> {
        Ok(self.viterbi(&self.featurize(tokens, embeddings)?))
    }

    /// Decoded entity spans with their surface strings.
    pub fn extract(&self, tokens: &[String], embeddings: Option<&[Vec<f64>]>) -> Result<Vec<EntitySpan>> {
        let tags = self.tag(tokens, embeddings)?;
        let mut spans = decode_tags(&tags, &self.tagset, DecodeMode::Strict)?;
        for s in &mut spans {
            s.surface = tokens[s.start..s.end].join(" ");
        }
        Ok(spans)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(
            path,
            &ModelFile {
                format: MODEL_FORMAT.into(),
                version: MODEL_VERSION,
                schema: self.schema,
                tagset: self.tagset.clone(),
                features: self.features.clone(),
                embedding_dim: self.embedding_dim,
                feature_keys: self.feature_keys.clone(),
                params: self.params.clone(),
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = util::read_json(path)?;
        let invalid = |msg: String| Error::Validation(format!("{}: {msg}", path.display()));
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(invalid(format!("not a version {MODEL_VERSION} CRF model")));
        }
        if let Some(schema) = file.schema {
            if schema.tagset() != file.tagset {
                return Err(invalid(format!("tag set does not match the {schema} schema")));
            }
        }
        if file.feature_keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("feature keys are not sorted and unique".into()));
        }
        let mut model = CrfModel::new(file.schema, file.tagset, file.features, file.feature_keys, file.embedding_dim);
        if file.params.len() != model.params.len() {
            return Err(invalid(format!(
                "expected {} parameters, found {}",
                model.params.len(),
                file.params.len()
            )));
        }
        model.params = file.params;
        Ok(model)
    }

    /// Loads a model and checks that it was trained for `schema`.
    pub fn load_for_schema(path: &Path, schema: Schema) -> Result<Self> {
        let model = Self::load(path)?;
        if model.schema != Some(schema) {
            return Err(Error::Validation(format!(
                "{} was trained for {}, not {schema}",
                path.display(),
                model.schema.map_or("a custom tag set", |s| s.name())
            )));
        }
        Ok(model)
    }
}
