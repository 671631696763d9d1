use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tags::{encode_spans, validate_spans, EntitySpan, Schema};
use crate::error::{Error, Result};
use crate::util;

/// One annotated token sequence, as stored in annotation JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSequence {
    pub tokens: Vec<String>,
    pub spans: Vec<EntitySpan>,
    pub schema: Schema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_doi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
    /// Sentence index within the paragraph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<Vec<Vec<f64>>>,
}

impl AnnotatedSequence {
    pub fn new(schema: Schema, tokens: Vec<String>, spans: Vec<EntitySpan>) -> Self {
        AnnotatedSequence {
            tokens,
            spans,
            schema,
            paper_doi: None,
            ordinal: None,
            sentence: None,
            embeddings: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidInput("annotated sequence has no tokens".into()));
        }
        validate_spans(self.tokens.len(), &self.spans, &self.schema.tagset())?;
        if let Some(e) = &self.embeddings {
            let dim = e.first().map_or(0, Vec::len);
            if e.len() != self.tokens.len() || e.iter().any(|v| v.len() != dim) {
                return Err(Error::Dimension("embeddings must give one equal-length vector per token".into()));
            }
        }
        Ok(())
    }

    pub fn gold_tags(&self) -> Result<Vec<usize>> {
        encode_spans(self.tokens.len(), &self.spans, &self.schema.tagset())
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.spans.iter().map(|s| s.category.as_str()).collect()
    }

    /// Most frequent category, lexicographically first on ties.
    pub fn dominant_category(&self) -> Option<&str> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.spans {
            *counts.entry(s.category.as_str()).or_default() += 1;
        }
        counts
            .into_iter()
            .fold(None, |best: Option<(&str, usize)>, (c, n)| match best {
                Some((_, b)) if b >= n => best,
                _ => Some((c, n)),
            })
            .map(|(c, _)| c)
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.as_ref().and_then(|e| e.first()).map_or(0, Vec::len)
    }
}

pub fn load_annotations(path: &Path) -> Result<Vec<AnnotatedSequence>> {
    let rows: Vec<(usize, AnnotatedSequence)> = util::read_jsonl(path)?;
    rows.into_iter()
        .map(|(line, seq)| {
            seq.validate().map_err(|e| Error::parse(path, line, e.to_string()))?;
            Ok(seq)
        })
        .collect()
}

pub fn save_annotations(path: &Path, data: &[AnnotatedSequence]) -> Result<()> {
    util::write_jsonl(path, data)
}

/// Index sets of a train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    pub fn select<'a>(data: &'a [AnnotatedSequence], idx: &[usize]) -> Vec<&'a AnnotatedSequence> {
        idx.iter().map(|&i| &data[i]).collect()
    }
}

pub const MIN_SPLIT_SEQUENCES: usize = 10;
const MIN_STRATUM: usize = 3;

fn stratum_keys(data: &[AnnotatedSequence]) -> Vec<String> {
    let full: Vec<String> = data
        .iter()
        .map(|s| s.categories().into_iter().collect::<Vec<_>>().join("|"))
        .collect();
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for k in &full {
        *sizes.entry(k.as_str()).or_default() += 1;
    }
    data.iter()
        .zip(&full)
        .map(|(s, k)| {
            if sizes[k.as_str()] >= MIN_STRATUM {
                k.clone()
            } else {
                s.dominant_category().unwrap_or("").to_string()
            }
        })
        .collect()
}

/// Stratified partition by `ratios` (train : validation : test). Sequences
/// are grouped by the set of categories they contain, each group is
/// shuffled, and the groups are dealt out in proportion, so every split sees
/// each stratum at close to the global rate.
pub fn split_dataset(data: &[AnnotatedSequence], ratios: [usize; 3], seed: u64) -> Result<DatasetSplit> {
    let n = data.len();
    if n < MIN_SPLIT_SEQUENCES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SPLIT_SEQUENCES} sequences to split, got {n}"
        )));
    }
    let total: usize = ratios.iter().sum();
    if ratios[0] == 0 || total == 0 {
        return Err(Error::InvalidInput("split ratios need a positive training share".into()));
    }
    let share = |r: usize| if r == 0 { 0 } else { ((n * r + total / 2) / total).max(1) };
    let targets = [n - share(ratios[1]) - share(ratios[2]), share(ratios[1]), share(ratios[2])];

    let keys = stratum_keys(data);
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        strata.entry(k.as_str()).or_default().push(i);
    }
    let mut rng = util::rng(seed);
    let mut order = Vec::with_capacity(n);
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        order.extend_from_slice(members);
    }

    // Deal by largest cumulative deficit; counts end exactly on target.
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (j, &item) in order.iter().enumerate() {
        let deficit = |s: usize, parts: &[Vec<usize>; 3]| ((j + 1) * targets[s]) as f64 / n as f64 - parts[s].len() as f64;
        let mut best = 0;
        for s in 1..3 {
            if deficit(s, &parts) > deficit(best, &parts) + 1e-12 {
                best = s;
            }
        }
        parts[best].push(item);
    }
    let [mut train, mut validation, mut test] = parts;
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit { train, validation, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(cats: &[&str]) -> AnnotatedSequence {
        let tokens: Vec<String> = (0..cats.len().max(1)).map(|i| format!("t{i}")).collect();
        let spans = cats.iter().enumerate().map(|(i, c)| EntitySpan::new(*c, i, i + 1)).collect();
        AnnotatedSequence::new(Schema::Synthesis, tokens, spans)
    }

    #[test]
    fn twenty_splits_sixteen_two_two() {
        let data: Vec<_> = (0..20).map(|i| seq(if i % 2 == 0 { &["PREC"] } else { &["SOLV"] })).collect();
        let s = split_dataset(&data, [8, 1, 1], 5).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (16, 2, 2));
        let mut all = [s.train, s.validation, s.test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_is_error() {
        let data: Vec<_> = (0..9).map(|_| seq(&["PREC"])).collect();
        assert!(split_dataset(&data, [8, 1, 1], 0).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let data: Vec<_> = (0..30).map(|i| seq(if i % 3 == 0 { &["PREC", "TEMP"] } else { &["TIME"] })).collect();
        assert_eq!(split_dataset(&data, [8, 1, 1], 11).unwrap(), split_dataset(&data, [8, 1, 1], 11).unwrap());
    }

    #[test]
    fn small_strata_fall_back_to_dominant_category() {
        let mut data: Vec<_> = (0..10).map(|_| seq(&["PREC"])).collect();
        data.push(seq(&["PREC", "PREC", "TEMP"]));
        let keys = stratum_keys(&data);
        assert_eq!(keys[10], "PREC");
    }

    #[test]
    fn validation_catches_bad_spans() {
        let mut s = seq(&["PREC"]);
        s.spans.push(EntitySpan::new("AM", 0, 1));
        assert!(s.validate().is_err());
        let mut s = seq(&["PREC"]);
        s.embeddings = Some(vec![vec![1.0], vec![2.0]]);
        assert!(s.validate().is_err());
    }
}
