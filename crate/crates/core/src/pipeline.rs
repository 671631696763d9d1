//! Stage orchestration over on-disk artifacts.
//!
//! Stages run in a fixed order and talk only through files in `out_dir`,
//! so each can be rerun on its own. Every artifact gets a provenance
//! sidecar with input hashes, the seed and the stage settings.

mod config;
mod provenance;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{
    ClassifierSettings, CorpusPaths, LexiconPaths, NerSettings, NormalizeSettings, PipelineConfig, ServiceSettings,
    TopicSettings,
};
pub use provenance::{file_sha256, read_sidecar, sidecar_path, Provenance};
pub use stages::{time_bin_label, TopicsReport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Select,
    Topics,
    Ner,
    Actions,
    Normalize,
    Sequences,
    Link,
    Index,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Select,
        Stage::Topics,
        Stage::Ner,
        Stage::Actions,
        Stage::Normalize,
        Stage::Sequences,
        Stage::Link,
        Stage::Index,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Select => "select",
            Stage::Topics => "topics",
            Stage::Ner => "ner",
            Stage::Actions => "actions",
            Stage::Normalize => "normalize",
            Stage::Sequences => "sequences",
            Stage::Link => "link",
            Stage::Index => "index",
        }
    }

    /// The CLI verb that runs this stage.
    pub fn command(self) -> &'static str {
        match self {
            Stage::Select => "classify",
            other => other.as_str(),
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = if s == "classify" { "select" } else { s };
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage `{s}`")))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Artifact file names inside `out_dir`, with the stage producing each.
pub mod artifacts {
    use super::Stage;

    pub const CLASSIFIER: &str = "model.bin";
    pub const LABELED: &str = "labeled.jsonl";
    pub const LDA: &str = "lda.bin";
    pub const TOPICS: &str = "topics.json";
    pub const TOPIC_MAP: &str = "topics_2d.csv";
    pub const KEYWORDS: &str = "keywords.csv";
    pub const ROUTED: &str = "paragraphs_routed.jsonl";
    pub const CRF_SYNTHESIS: &str = "crf_synthesis.bin";
    pub const CRF_ASSEMBLY: &str = "crf_assembly.bin";
    pub const TAGGED: &str = "tagged.jsonl";
    pub const ACTIONS: &str = "actions.jsonl";
    pub const NORMALIZED: &str = "normalized.jsonl";
    pub const SEQUENCES: &str = "sequences.jsonl";
    pub const RECIPES: &str = "recipes.jsonl";
    pub const INDEX: &str = "index.json";

    pub fn produced_by(stage: Stage) -> &'static [&'static str] {
        match stage {
            Stage::Select => &[CLASSIFIER, LABELED],
            Stage::Topics => &[LDA, TOPICS, TOPIC_MAP, KEYWORDS, ROUTED],
            Stage::Ner => &[CRF_SYNTHESIS, CRF_ASSEMBLY, TAGGED],
            Stage::Actions => &[ACTIONS],
            Stage::Normalize => &[NORMALIZED],
            Stage::Sequences => &[SEQUENCES],
            Stage::Link => &[RECIPES],
            Stage::Index => &[INDEX],
        }
    }

    pub fn producer(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| produced_by(*s).contains(&name))
    }
}

/// Machine-readable counts printed by each stage as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    #[serde(flatten)]
    pub counts: BTreeMap<String, serde_json::Value>,
}

impl StageSummary {
    fn new(stage: Stage) -> Self {
        StageSummary { stage, counts: BTreeMap::new() }
    }

    fn set(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.counts.insert(key.into(), value.into());
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Resolved artifact locations of one pipeline configuration.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub out_dir: PathBuf,
}

impl Workspace {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Workspace { out_dir: out_dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Path of an upstream artifact, or an error naming the stage to run first.
    pub fn require(&self, stage: Stage, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            return Ok(p);
        }
        let producer = artifacts::producer(name).map_or("an earlier stage", Stage::command);
        Err(Error::MissingArtifact {
            stage: stage.to_string(),
            artifact: p.display().to_string(),
            run_first: producer.to_string(),
        })
    }
}

pub fn run_stage(config: &PipelineConfig, stage: Stage) -> Result<StageSummary> {
    let ws = Workspace::new(&config.out_dir);
    std::fs::create_dir_all(&ws.out_dir).map_err(|e| Error::io(&ws.out_dir, e))?;
    match stage {
        Stage::Select => stages::select(config, &ws),
        Stage::Topics => stages::topics(config, &ws),
        Stage::Ner => stages::ner(config, &ws),
        Stage::Actions => stages::actions(config, &ws),
        Stage::Normalize => stages::normalize(config, &ws),
        Stage::Sequences => stages::sequences(config, &ws),
        Stage::Link => stages::link(config, &ws),
        Stage::Index => stages::index(config, &ws),
    }
}

/// Runs every stage in order, stopping at the first failure.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Vec<StageSummary>> {
    run_pipeline_with(config, |_| {})
}

/// Like [`run_pipeline`], calling `on_stage` after each stage finishes.
pub fn run_pipeline_with(config: &PipelineConfig, mut on_stage: impl FnMut(&StageSummary)) -> Result<Vec<StageSummary>> {
    let mut out = Vec::new();
    for stage in Stage::ALL {
        let summary = run_stage(config, stage)?;
        on_stage(&summary);
        out.push(summary);
    }
    Ok(out)
}

/// All non-provenance artifacts in `out_dir`, sorted by name.
pub fn artifact_files(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))? {
        let p = entry.map_err(|e| Error::io(out_dir, e))?.path();
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        if p.is_file() && !name.ends_with(".prov.json") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}
