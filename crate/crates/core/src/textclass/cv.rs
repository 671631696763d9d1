use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tfidf::DesignMatrix;
use super::Trainer;
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl BinaryScores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        BinaryScores {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }

    pub fn evaluate(predicted: &[bool], gold: &[bool]) -> Self {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&p, &g) in predicted.iter().zip(gold) {
            match (p, g) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        Self::from_counts(tp, fp, fn_)
    }
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub validation_rows: Vec<usize>,
    pub scores: BinaryScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    pub mean_f1: f64,
    pub seed: u64,
}

/// Label-stratified fold assignment. Each class is shuffled and dealt
/// round-robin, continuing the fold counter across classes so fold sizes
/// differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidInput("cross-validation needs both classes".into()));
    }
    if labels.len() < k {
        return Err(Error::InvalidInput(format!("{} rows cannot fill {k} folds", labels.len())));
    }
    let mut rng = util::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, row) in neg.into_iter().chain(pos).enumerate() {
        folds[i % k].push(row);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn cross_validate<T: Trainer>(x: &DesignMatrix, y: &[bool], trainer: &T, k: usize, seed: u64) -> Result<CvReport> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    let folds = stratified_folds(y, k, seed)?;
    let mut scores = Vec::with_capacity(k);
    for (fold, validation) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..y.len()).filter(|i| validation.binary_search(i).is_err()).collect();
        let train_y: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let model = trainer.fit(&x.select(&train), &train_y)?;
        let predicted: Vec<bool> = validation.iter().map(|&i| model.predict(&x.rows[i])).collect();
        let gold: Vec<bool> = validation.iter().map(|&i| y[i]).collect();
        scores.push(FoldScore {
            fold,
            validation_rows: validation.clone(),
            scores: BinaryScores::evaluate(&predicted, &gold),
        });
    }
    let mean_f1 = scores.iter().map(|f| f.scores.f1).sum::<f64>() / k as f64;
    Ok(CvReport {
        folds: scores,
        mean_f1,
        seed,
    })
}

/// Cross-validates each candidate and returns the reports in input order.
pub fn grid_search<T: Trainer>(x: &DesignMatrix, y: &[bool], candidates: &[T], k: usize, seed: u64) -> Result<Vec<CvReport>> {
    candidates.iter().map(|c| cross_validate(x, y, c, k, seed)).collect()
}

/// Index of the candidate with the highest mean F1 (first on ties).
pub fn best_candidate(reports: &[CvReport]) -> Option<usize> {
    reports
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
            Some((_, f)) if f >= r.mean_f1 => best,
            _ => Some((i, r.mean_f1)),
        })
        .map(|(i, _)| i)
}
