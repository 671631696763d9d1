//! Paper-level relevance classification from abstracts.

mod cv;
mod gbt;
mod logreg;
mod tfidf;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cv::{best_candidate, cross_validate, f1, grid_search, stratified_folds, BinaryScores, CvReport, FoldScore};
pub use gbt::{log_loss, train_gbt, weighted_log_loss, GbtHyper, GbtModel, RegressionTree, TreeNode};
pub use logreg::{logistic_gradient, logistic_loss, train_logreg, LogRegHyper, LogisticModel};
pub use tfidf::{fit_tfidf, DesignMatrix, SparseVector, TfidfModel};

use crate::corpus::{self, PaperRecord, Stoplist};
use crate::error::{Error, Result};
use crate::util;

/// Probability at or above which a paper is labeled relevant.
pub const DECISION_THRESHOLD: f64 = 0.5;

pub trait BinaryClassifier {
    fn predict_proba(&self, x: &SparseVector) -> f64;

    fn predict(&self, x: &SparseVector) -> bool {
        self.predict_proba(x) >= DECISION_THRESHOLD
    }
}

pub trait Trainer {
    fn fit(&self, x: &DesignMatrix, y: &[bool]) -> Result<Box<dyn BinaryClassifier>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Logreg(LogRegHyper),
    Gbt(GbtHyper),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Logreg(LogisticModel),
    Gbt(GbtModel),
}

impl ModelSpec {
    pub fn train(&self, x: &DesignMatrix, y: &[bool]) -> Result<TrainedModel> {
        match self {
            ModelSpec::Logreg(h) => Ok(TrainedModel::Logreg(train_logreg(x, y, h)?)),
            ModelSpec::Gbt(h) => Ok(TrainedModel::Gbt(train_gbt(x, y, h)?)),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "logreg" => Ok(ModelSpec::Logreg(LogRegHyper::default())),
            "gbt" => Ok(ModelSpec::Gbt(GbtHyper::default())),
            other => Err(Error::InvalidInput(format!("unknown model `{other}` (expected logreg or gbt)"))),
        }
    }
}

impl Trainer for ModelSpec {
    fn fit(&self, x: &DesignMatrix, y: &[bool]) -> Result<Box<dyn BinaryClassifier>> {
        Ok(Box::new(self.train(x, y)?))
    }
}

impl BinaryClassifier for TrainedModel {
    fn predict_proba(&self, x: &SparseVector) -> f64 {
        match self {
            TrainedModel::Logreg(m) => m.predict_proba(x),
            TrainedModel::Gbt(m) => m.predict_proba(x),
        }
    }
}

const MODEL_FORMAT: &str = "t2br-paper-classifier";
const MODEL_VERSION: u32 = 1;

/// TF-IDF vocabulary plus a trained model; the unit persisted as `model.bin`
/// (JSON despite the extension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperClassifier {
    pub format: String,
    pub version: u32,
    pub stopwords: Vec<String>,
    pub tfidf: TfidfModel,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPaper {
    #[serde(flatten)]
    pub paper: PaperRecord,
    pub probability: f64,
}

fn abstract_tokens(paper: &PaperRecord, stoplist: &Stoplist) -> Vec<String> {
    let mut text = paper.title.clone();
    text.push_str(". ");
    text.push_str(&paper.abstract_text);
    corpus::bag_of_words(&text, stoplist)
}

impl PaperClassifier {
    /// Fits TF-IDF on the labeled papers' titles and abstracts, then trains `spec`.
    pub fn train(papers: &[PaperRecord], labels: &[bool], spec: &ModelSpec, stopwords: &[String]) -> Result<Self> {
        if papers.len() != labels.len() {
            return Err(Error::Dimension(format!("{} papers but {} labels", papers.len(), labels.len())));
        }
        let stoplist = Stoplist::parse(&stopwords.join("\n"));
        let docs: Vec<Vec<String>> = papers.iter().map(|p| abstract_tokens(p, &stoplist)).collect();
        let tfidf = fit_tfidf(&docs)?;
        let x = tfidf.transform_all(&docs);
        let model = spec.train(&x, labels)?;
        let mut stopwords = stopwords.to_vec();
        stopwords.sort();
        stopwords.dedup();
        Ok(PaperClassifier {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            stopwords,
            tfidf,
            model,
        })
    }

    pub fn probability(&self, paper: &PaperRecord) -> f64 {
        let stoplist = Stoplist::parse(&self.stopwords.join("\n"));
        self.model
            .predict_proba(&self.tfidf.transform(&abstract_tokens(paper, &stoplist)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: PaperClassifier = util::read_json(path)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::Validation(format!(
                "{} is not a version {MODEL_VERSION} paper classifier",
                path.display()
            )));
        }
        Ok(model)
    }
}

/// Labels every paper with the classifier's decision and probability.
pub fn classify_corpus(classifier: &PaperClassifier, papers: &[PaperRecord]) -> Vec<LabeledPaper> {
    papers
        .iter()
        .map(|p| {
            let probability = classifier.probability(p);
            let mut paper = p.clone();
            paper.label = Some(probability >= DECISION_THRESHOLD);
            LabeledPaper { paper, probability }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper(doi: &str, text: &str) -> PaperRecord {
        PaperRecord {
            doi: doi.into(),
            title: String::new(),
            abstract_text: text.into(),
            label: None,
            source_query: None,
        }
    }

    fn fixture() -> (Vec<PaperRecord>, Vec<bool>) {
        let pos = [
            "LiFePO4 cathode synthesized by solid state reaction and assembled in coin cells",
            "carbon coated LiFePO4 prepared from sucrose, electrochemical performance of cells",
            "hydrothermal synthesis of olivine cathode with PVDF binder electrodes",
            "sol-gel LiFePO4 cathode calcined under argon, coin cell cycling",
        ];
        let neg = [
            "economic analysis of grid storage deployment policy",
            "review of recycling regulations for spent batteries",
            "market forecast for electric vehicle adoption",
            "survey of thermal runaway incidents in warehouses",
        ];
        let papers: Vec<PaperRecord> = pos
            .iter()
            .chain(neg.iter())
            .enumerate()
            .map(|(i, t)| paper(&format!("10.1/{i}"), t))
            .collect();
        let labels = (0..8).map(|i| i < 4).collect();
        (papers, labels)
    }

    #[test]
    fn classify_positive_and_empty_abstracts() {
        let (papers, labels) = fixture();
        let stop: Vec<String> = ["of", "and", "in", "by", "for", "the", "with", "from", "under"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let clf = PaperClassifier::train(&papers, &labels, &ModelSpec::by_name("logreg").unwrap(), &stop).unwrap();
        let probe = paper("10.9/new", "solid state synthesis of LiFePO4 cathode for coin cells");
        let out = classify_corpus(&clf, &[probe, paper("10.9/empty", "")]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].paper.label, Some(true));
        let TrainedModel::Logreg(m) = &clf.model else { unreachable!() };
        let bias_only = 1.0 / (1.0 + (-m.bias).exp());
        assert!((out[1].probability - bias_only).abs() < 1e-15);
    }

    #[test]
    fn unknown_model_name() {
        assert!(ModelSpec::by_name("forest").is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let (papers, labels) = fixture();
        let clf = PaperClassifier::train(&papers, &labels, &ModelSpec::by_name("gbt").unwrap(), &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        clf.save(&path).unwrap();
        assert_eq!(PaperClassifier::load(&path).unwrap(), clf);
    }
}
