use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{split_dataset, AnnotatedSequence, DatasetSplit};
use super::eval::{evaluate, EvalReport};
use super::features::{self, FeatureConfig};
use super::model::{CrfModel, SequenceFeatures};
use super::tags::{decode_tags, DecodeMode, EntitySpan, Schema};
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Bias-corrected first and second moment estimates.
    Adam,
    /// Step scaled by the root of accumulated squared gradients.
    AdaGrad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            patience: 10,
            learning_rate: 1e-3,
            batch_size: 5,
            seed: 0,
            optimizer: Optimizer::Adam,
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training nll measured after the epoch's updates.
    pub train_nll: f64,
    pub validation_relaxed_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_validation_f1: f64,
    pub stopped_early: bool,
}

struct Prepared {
    features: SequenceFeatures,
    gold: Vec<usize>,
}

struct Stepper {
    optimizer: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Stepper {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(optimizer: Optimizer, lr: f64, n: usize) -> Self {
        Stepper {
            optimizer,
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        match self.optimizer {
            Optimizer::Adam => {
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    if g == 0.0 && self.m[i] == 0.0 {
                        continue;
                    }
                    self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
                    self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
                    params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
                }
            }
            Optimizer::AdaGrad => {
                for i in 0..params.len() {
                    let g = grad[i];
                    if g == 0.0 {
                        continue;
                    }
                    self.v[i] += g * g;
                    params[i] -= self.lr * g / (self.v[i].sqrt() + Self::EPS);
                }
            }
        }
    }
}

fn check_schema(data: &[&AnnotatedSequence], schema: Schema) -> Result<()> {
    for s in data {
        if s.schema != schema {
            return Err(Error::InvalidInput(format!(
                "sequence annotated for {} in a {schema} training set",
                s.schema
            )));
        }
        s.validate()?;
    }
    Ok(())
}

fn prepare(model: &CrfModel, seq: &AnnotatedSequence) -> Result<Prepared> {
    Ok(Prepared {
        features: model.featurize(&seq.tokens, seq.embeddings.as_deref())?,
        gold: seq.gold_tags()?,
    })
}

fn predict(model: &CrfModel, prepared: &[Prepared]) -> Result<Vec<Vec<EntitySpan>>> {
    prepared
        .iter()
        .map(|p| decode_tags(&model.viterbi(&p.features), &model.tagset, DecodeMode::Strict))
        .collect()
}

/// Model predictions for a labeled set and their evaluation.
pub fn evaluate_model(model: &CrfModel, data: &[&AnnotatedSequence]) -> Result<EvalReport> {
    let prepared: Vec<Prepared> = data.iter().map(|s| prepare(model, s)).collect::<Result<_>>()?;
    let pred = predict(model, &prepared)?;
    let gold: Vec<Vec<EntitySpan>> = data.iter().map(|s| s.spans.clone()).collect();
    Ok(evaluate(&pred, &gold))
}

/// Mini-batch training on mean nll with early stopping on validation
/// relaxed macro-F1. Returns the best-validation checkpoint.
pub fn train_crf(
    schema: Schema,
    train: &[&AnnotatedSequence],
    validation: &[&AnnotatedSequence],
    config: &TrainConfig,
) -> Result<(CrfModel, TrainReport)> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidInput("training and validation sets must be non-empty".into()));
    }
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(Error::InvalidInput("batch size and epoch count must be positive".into()));
    }
    check_schema(train, schema)?;
    check_schema(validation, schema)?;
    let dim = train[0].embedding_dim();
    if train.iter().chain(validation).any(|s| s.embedding_dim() != dim) {
        return Err(Error::Dimension("all sequences must share one embedding dimension".into()));
    }

    let keys: Vec<u64> = train
        .iter()
        .flat_map(|s| features::extract(&s.tokens, &config.features).into_iter().flatten())
        .collect();
    let mut model = CrfModel::for_schema(schema, config.features.clone(), keys, dim);
    let train_p: Vec<Prepared> = train.iter().map(|s| prepare(&model, s)).collect::<Result<_>>()?;
    let val_p: Vec<Prepared> = validation.iter().map(|s| prepare(&model, s)).collect::<Result<_>>()?;
    let val_gold: Vec<Vec<EntitySpan>> = validation.iter().map(|s| s.spans.clone()).collect();

    let mut rng = util::rng(config.seed);
    let mut stepper = Stepper::new(config.optimizer, config.learning_rate, model.params.len());
    let mut grad = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..train_p.len()).collect();
    let mut best = (f64::NEG_INFINITY, 0, model.params.clone());
    let mut epochs = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                model.accumulate_gradient(&train_p[i].features, &train_p[i].gold, scale, &mut grad)?;
            }
            stepper.step(&mut model.params, &grad);
        }
        let mut nll = 0.0;
        for p in &train_p {
            nll += model.nll(&p.features, &p.gold)?;
        }
        let f1 = evaluate(&predict(&model, &val_p)?, &val_gold).relaxed.macro_f1;
        epochs.push(EpochLog {
            epoch,
            train_nll: nll / train_p.len() as f64,
            validation_relaxed_f1: f1,
        });
        if f1 > best.0 {
            best = (f1, epoch, model.params.clone());
        } else if epoch - best.1 >= config.patience {
            stopped_early = true;
            break;
        }
    }
    let (best_f1, best_epoch, params) = best;
    model.params = params;
    Ok((
        model,
        TrainReport {
            epochs,
            best_epoch,
            best_validation_f1: best_f1,
            stopped_early,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub fold: usize,
    pub seed: u64,
    pub split: DatasetSplit,
    pub best_epoch: usize,
    /// Scores on the fold's held-out test part.
    pub report: EvalReport,
}

/// Repeated random 8:1:1 resplits, each trained and scored on its test part.
pub fn shuffle_split_cv(
    schema: Schema,
    data: &[AnnotatedSequence],
    folds: usize,
    config: &TrainConfig,
) -> Result<Vec<CvFold>> {
    let mut seeds = util::rng(config.seed);
    (0..folds)
        .map(|fold| {
            let seed: u64 = seeds.random();
            let split = split_dataset(data, [8, 1, 1], seed)?;
            let train = DatasetSplit::select(data, &split.train);
            let val = DatasetSplit::select(data, &split.validation);
            let test = DatasetSplit::select(data, &split.test);
            let cfg = TrainConfig {
                seed,
                ..config.clone()
            };
            let (model, report) = train_crf(schema, &train, &val, &cfg)?;
            Ok(CvFold {
                fold,
                seed,
                best_epoch: report.best_epoch,
                report: evaluate_model(&model, &test)?,
                split,
            })
        })
        .collect()
}
