use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tags::EntitySpan;
use crate::textclass::f1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Category, start and end must all agree.
    Strict,
    /// Same category and at least one shared token; each gold span is matched once.
    Relaxed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryScores {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        CategoryScores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeScores {
    pub per_category: BTreeMap<String, CategoryScores>,
    /// Mean F1 over categories present in gold or predictions; 0 when there are none.
    pub macro_f1: f64,
    pub micro: CategoryScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strict: ModeScores,
    pub relaxed: ModeScores,
}

// True positives of one sequence per category.
fn matches(pred: &[EntitySpan], gold: &[EntitySpan], mode: MatchMode) -> BTreeMap<String, usize> {
    let mut tp = BTreeMap::new();
    let mut pred: Vec<&EntitySpan> = pred.iter().collect();
    let mut gold: Vec<&EntitySpan> = gold.iter().collect();
    pred.sort_by_key(|s| (s.start, s.end));
    gold.sort_by_key(|s| (s.start, s.end));
    let mut used = vec![false; gold.len()];
    for p in pred {
        let hit = gold.iter().enumerate().position(|(j, g)| {
            !used[j]
                && g.category == p.category
                && match mode {
                    MatchMode::Strict => g.start == p.start && g.end == p.end,
                    MatchMode::Relaxed => g.start < p.end && p.start < g.end,
                }
        });
        if let Some(j) = hit {
            used[j] = true;
            *tp.entry(p.category.clone()).or_insert(0) += 1;
        }
    }
    tp
}

/// Scores predicted against gold spans, sequence by sequence.
pub fn score(pred: &[Vec<EntitySpan>], gold: &[Vec<EntitySpan>], mode: MatchMode) -> ModeScores {
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (p, g) in pred.iter().zip(gold) {
        let tp = matches(p, g, mode);
        for s in p {
            counts.entry(s.category.clone()).or_default().1 += 1;
        }
        for s in g {
            counts.entry(s.category.clone()).or_default().2 += 1;
        }
        for (c, n) in tp {
            let e = counts.entry(c).or_default();
            e.0 += n;
        }
    }
    let mut per_category = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for (c, (tp, n_pred, n_gold)) in counts {
        let (fp, fn_) = (n_pred - tp, n_gold - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_category.insert(c, CategoryScores::from_counts(tp, fp, fn_));
    }
    let macro_f1 = if per_category.is_empty() {
        0.0
    } else {
        per_category.values().map(|s| s.f1).sum::<f64>() / per_category.len() as f64
    };
    ModeScores {
        per_category,
        macro_f1,
        micro: CategoryScores::from_counts(tp_all, fp_all, fn_all),
    }
}

pub fn evaluate(pred: &[Vec<EntitySpan>], gold: &[Vec<EntitySpan>]) -> EvalReport {
    EvalReport {
        strict: score(pred, gold, MatchMode::Strict),
        relaxed: score(pred, gold, MatchMode::Relaxed),
    }
}

impl EvalReport {
    pub fn mode(&self, mode: MatchMode) -> &ModeScores {
        match mode {
            MatchMode::Strict => &self.strict,
            MatchMode::Relaxed => &self.relaxed,
        }
    }

    /// Categories where relaxed F1 falls below strict F1; empty for a sound report.
    pub fn relaxation_violations(&self) -> BTreeSet<String> {
        self.strict
            .per_category
            .iter()
            .filter(|(c, s)| self.relaxed.per_category.get(*c).is_none_or(|r| r.f1 + 1e-12 < s.f1))
            .map(|(c, _)| c.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(c: &str, s: usize, e: usize) -> EntitySpan {
        EntitySpan::new(c, s, e)
    }

    #[test]
    fn identical_is_perfect() {
        let g = vec![vec![sp("PREC", 0, 2), sp("SOLV", 4, 5)]];
        let r = evaluate(&g, &g);
        assert_eq!(r.strict.macro_f1, 1.0);
        assert_eq!(r.relaxed.macro_f1, 1.0);
    }

    #[test]
    fn partial_overlap_counts_only_when_relaxed() {
        let g = vec![vec![sp("PREC", 0, 3)]];
        let p = vec![vec![sp("PREC", 1, 2)]];
        let r = evaluate(&p, &g);
        assert_eq!(r.strict.per_category["PREC"].tp, 0);
        assert_eq!(r.relaxed.per_category["PREC"].tp, 1);
        let wrong = vec![vec![sp("SOLV", 1, 2)]];
        let r = evaluate(&wrong, &g);
        assert_eq!(r.strict.micro.tp, 0);
        assert_eq!(r.relaxed.micro.tp, 0);
    }

    #[test]
    fn gold_matched_at_most_once() {
        let g = vec![vec![sp("PREC", 0, 4)]];
        let p = vec![vec![sp("PREC", 0, 1), sp("PREC", 2, 3)]];
        let s = score(&p, &g, MatchMode::Relaxed);
        assert_eq!((s.micro.tp, s.micro.fp, s.micro.fn_), (1, 1, 0));
    }

    #[test]
    fn empty_is_zero() {
        let s = score(&[vec![]], &[vec![]], MatchMode::Strict);
        assert_eq!(s.macro_f1, 0.0);
    }
}
