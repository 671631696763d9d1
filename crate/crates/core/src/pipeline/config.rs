use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nerlab::{FeatureConfig, Optimizer, TrainConfig};
use crate::normalizer::TimeBinning;
use crate::topicmodel::RoutingAnchors;

/// Pipeline settings, read from TOML. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub lexicons: LexiconPaths,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    pub topics: TopicSettings,
    pub ner: NerSettings,
    #[serde(default)]
    pub normalize: NormalizeSettings,
    #[serde(default)]
    pub service: ServiceSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    /// Papers to screen.
    pub papers: PathBuf,
    /// Labeled papers the relevance classifier is trained on.
    pub training_papers: PathBuf,
    pub paragraphs: PathBuf,
}

/// Optional replacements for the shipped lexicons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    pub actions: Option<PathBuf>,
    pub normalization: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSettings {
    /// `logreg` or `gbt`.
    pub model: String,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings { model: "logreg".into() }
    }
}

fn default_alpha() -> f64 {
    5.0
}

fn default_beta() -> f64 {
    0.01
}

fn default_min_chars() -> usize {
    crate::corpus::MIN_PARAGRAPH_CHARS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSettings {
    /// Fixed topic count. When absent, K is chosen over `k_min..=k_max`.
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub sweeps: usize,
    #[serde(default = "default_min_chars")]
    pub min_chars: usize,
    #[serde(default)]
    pub anchors: Option<RoutingAnchors>,
    /// Manual routing; both lists replace anchor routing when given.
    pub synthesis_topics: Option<Vec<usize>>,
    pub assembly_topics: Option<Vec<usize>>,
}

impl TopicSettings {
    pub fn k_values(&self) -> Result<Vec<usize>> {
        match (self.k, self.k_min, self.k_max) {
            (Some(k), None, None) if k > 0 => Ok(vec![k]),
            (None, Some(lo), Some(hi)) if 0 < lo && lo <= hi => Ok((lo..=hi).collect()),
            _ => Err(Error::Validation(
                "topics: set either `k` or both `k_min` and `k_max` (1 <= k_min <= k_max)".into(),
            )),
        }
    }
}

fn default_epochs() -> usize {
    50
}

fn default_patience() -> usize {
    10
}

fn default_lr() -> f64 {
    1e-3
}

fn default_batch() -> usize {
    5
}

fn default_optimizer() -> Optimizer {
    Optimizer::Adam
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerSettings {
    pub synthesis_annotations: PathBuf,
    pub assembly_annotations: PathBuf,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
}

impl NerSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.epochs,
            patience: self.patience,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
            optimizer: self.optimizer,
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizeSettings {
    #[serde(default)]
    pub time_binning: TimeBinning,
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_port() -> u16 {
    8080
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSettings {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    /// Bearer token required on every request when set.
    #[serde(default)]
    pub token: Option<String>,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings { bind: default_bind(), port: default_port(), token: None }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("invalid pipeline config: {e}")))?;
        for p in [
            &mut cfg.out_dir,
            &mut cfg.corpus.papers,
            &mut cfg.corpus.training_papers,
            &mut cfg.corpus.paragraphs,
            &mut cfg.ner.synthesis_annotations,
            &mut cfg.ner.assembly_annotations,
        ] {
            resolve(base_dir, p);
        }
        for p in [&mut cfg.lexicons.actions, &mut cfg.lexicons.normalization, &mut cfg.lexicons.stopwords]
            .into_iter()
            .flatten()
        {
            resolve(base_dir, p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; every input path must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let inputs = [
            ("corpus.papers", Some(&self.corpus.papers)),
            ("corpus.training_papers", Some(&self.corpus.training_papers)),
            ("corpus.paragraphs", Some(&self.corpus.paragraphs)),
            ("ner.synthesis_annotations", Some(&self.ner.synthesis_annotations)),
            ("ner.assembly_annotations", Some(&self.ner.assembly_annotations)),
            ("lexicons.actions", self.lexicons.actions.as_ref()),
            ("lexicons.normalization", self.lexicons.normalization.as_ref()),
            ("lexicons.stopwords", self.lexicons.stopwords.as_ref()),
        ];
        for (key, path) in inputs {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Validation(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        self.topics.k_values()?;
        if self.topics.sweeps == 0 {
            return Err(Error::Validation("topics.sweeps must be positive".into()));
        }
        if self.topics.synthesis_topics.is_some() != self.topics.assembly_topics.is_some() {
            return Err(Error::Validation(
                "topics: give both synthesis_topics and assembly_topics, or neither".into(),
            ));
        }
        if self.ner.epochs == 0 || self.ner.batch_size == 0 {
            return Err(Error::Validation("ner.epochs and ner.batch_size must be positive".into()));
        }
        crate::textclass::ModelSpec::by_name(&self.classifier.model)?;
        Ok(())
    }
}
