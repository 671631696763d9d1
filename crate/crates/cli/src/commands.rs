//! Command-line verbs. Each verb run without a subcommand executes its
//! pipeline stage from the config; the subcommands work on explicit files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use t2br_core::corpus::{self, ParagraphRecord, Stoplist};
use t2br_core::nerlab::{
    evaluate_model, load_annotations, split_dataset, tag_paragraph, train_crf, AnnotatedSequence, CrfModel,
    DatasetSplit, FeatureConfig, GoldIndex, MatchMode, Optimizer, Schema, TrainConfig,
};
use t2br_core::pipeline::{artifacts, run_pipeline_with, run_stage, PipelineConfig, Stage};
use t2br_core::recipegen::{fit_markov_smoothed, load_sequences, trend_matrix, RecipeKind, RecipeSequence, TrendAxis};
use t2br_core::textclass::{classify_corpus, ModelSpec, PaperClassifier};
use t2br_core::topicmodel::{
    fit_lda, paragraph_tokens, pca_topic_map, select_k, topic_map_csv, LdaConfig, LdaModel, SelectKConfig,
};

use crate::api::{self, Snapshot};

#[derive(Debug, Parser)]
#[command(name = "t2br", version, about = "Text mining of battery recipes from paper text")]
pub struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true, env = "T2BR_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Artifact directory for stage runs; output file for file-level subcommands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage in order.
    Pipeline,
    /// Relevance classifier over paper abstracts.
    Classify {
        #[command(subcommand)]
        action: Option<ClassifyCmd>,
    },
    /// Topic model over paragraphs and routing of recipe topics.
    Topics {
        #[command(subcommand)]
        action: Option<TopicsCmd>,
    },
    /// Entity tagging of routed paragraphs.
    Ner {
        #[command(subcommand)]
        action: Option<NerCmd>,
    },
    /// Action extraction from routed paragraphs.
    Actions,
    /// Canonical values and bins for tagged entities.
    Normalize,
    /// Per-paragraph action sequences and the Markov action model.
    Sequences {
        #[command(subcommand)]
        action: Option<SequencesCmd>,
    },
    /// Pair synthesis and assembly sequences into end-to-end recipes.
    Link,
    /// Co-occurrence matrix of two entity categories, counted by paper.
    Trends {
        #[arg(long)]
        row: String,
        #[arg(long)]
        col: String,
        /// Defaults to sequences.jsonl in the artifact directory.
        #[arg(long)]
        sequences: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build the field query index.
    Index,
    /// Serve the JSON API over the artifact directory.
    Serve {
        /// Artifact directory; defaults to --out, then the config's out_dir.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        /// Require `Authorization: Bearer <token>` on every request.
        #[arg(long, env = "T2BR_TOKEN")]
        token: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum ClassifyCmd {
    /// Train on labeled papers and write model.bin to --out.
    Train {
        #[arg(long)]
        papers: PathBuf,
        /// JSON lines of `{doi, label}`; otherwise labels come from the papers file.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "logreg")]
        model: String,
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Label papers with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        papers: PathBuf,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct ParagraphArgs {
    #[arg(long)]
    paragraphs: PathBuf,
    #[arg(long, default_value_t = corpus::MIN_PARAGRAPH_CHARS)]
    min_chars: usize,
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long)]
    sweeps: usize,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TopicsCmd {
    /// Fit LDA with a fixed K and write lda.bin to --out.
    Fit {
        #[command(flatten)]
        input: ParagraphArgs,
        #[arg(long)]
        k: usize,
    },
    /// Score every K in a range by perplexity and coherence.
    Select {
        #[command(flatten)]
        input: ParagraphArgs,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
    },
    /// 2D PCA map of a fitted model's topics, as CSV.
    Map {
        /// Defaults to lda.bin in the artifact directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum NerCmd {
    /// Train a CRF on an 8:1:1 split and write crf.bin to --out.
    Train {
        #[arg(long)]
        schema: Schema,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        patience: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 5)]
        batch_size: usize,
    },
    /// Tag paragraphs; annotated sentences in --gold keep their gold spans.
    Tag {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        paragraphs: PathBuf,
        #[arg(long)]
        gold: Vec<PathBuf>,
    },
    /// Score a model on annotated sentences.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Relaxed)]
        mode: ModeArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => MatchMode::Strict,
            ModeArg::Relaxed => MatchMode::Relaxed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SequencesCmd {
    /// Run the sequences stage.
    Build,
    /// Fit the action transition model and list the most probable chains.
    Markov {
        #[arg(long, default_value_t = 4)]
        length: usize,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, default_value_t = 0.0)]
        smoothing: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Synthesis)]
        kind: KindArg,
        /// Defaults to sequences.jsonl in the artifact directory.
        #[arg(long)]
        sequences: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Synthesis,
    Assembly,
}

/// Resolved global flags.
struct Ctx {
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let path = self.config.as_ref().ok_or_else(|| anyhow!("no config: pass --config or set T2BR_CONFIG"))?;
        let mut cfg = PipelineConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn out_file(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("this command needs --out <file>"))
    }

    /// An explicit input, else the named artifact in the configured directory.
    fn artifact(&self, explicit: Option<PathBuf>, name: &str) -> Result<PathBuf> {
        if let Some(p) = explicit {
            return Ok(p);
        }
        let dir = match (&self.out, &self.config) {
            (Some(o), _) => o.clone(),
            (None, Some(_)) => self.pipeline_config()?.out_dir,
            (None, None) => bail!("pass the input file explicitly, or --config / --out to locate {name}"),
        };
        Ok(dir.join(name))
    }
}

/// Writes to `out` when it names a file, else to stdout. A directory means
/// `--out` located the artifacts rather than naming an output.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out.filter(|p| !p.is_dir()) {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn jsonl<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn stage(ctx: &Ctx, stage: Stage) -> Result<()> {
    let cfg = ctx.pipeline_config()?;
    let summary = run_stage(&cfg, stage)?;
    println!("{}", summary.json_line());
    Ok(())
}

fn stoplist(path: Option<&Path>) -> Result<Stoplist> {
    Ok(match path {
        Some(p) => Stoplist::load(p)?,
        None => Stoplist::english(),
    })
}

fn topic_docs(input: &ParagraphArgs) -> Result<(Vec<ParagraphRecord>, Vec<Vec<String>>)> {
    let all = corpus::load_paragraphs(&input.paragraphs)?;
    let kept = corpus::filter_paragraphs(&all, input.min_chars);
    if kept.is_empty() {
        bail!("no paragraphs with at least {} characters", input.min_chars);
    }
    let stop = stoplist(input.stopwords.as_deref())?;
    let docs = kept.iter().map(|p| paragraph_tokens(p, &stop)).collect();
    Ok((kept, docs))
}

fn classify(ctx: &Ctx, cmd: ClassifyCmd) -> Result<()> {
    match cmd {
        ClassifyCmd::Train { papers, labels, model, stopwords } => {
            let papers = corpus::load_papers(&papers)?;
            let by_doi: Option<BTreeMap<String, bool>> = match labels {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let mut m = BTreeMap::new();
                    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                        let row: serde_json::Value =
                            serde_json::from_str(line).with_context(|| format!("{}:{}", p.display(), i + 1))?;
                        let (Some(doi), Some(label)) = (row["doi"].as_str(), row["label"].as_bool()) else {
                            bail!("{}:{}: expected {{\"doi\": string, \"label\": bool}}", p.display(), i + 1);
                        };
                        m.insert(doi.to_string(), label);
                    }
                    Some(m)
                }
                None => None,
            };
            let y: Vec<bool> = papers
                .iter()
                .map(|p| {
                    by_doi
                        .as_ref()
                        .map_or(p.label, |m| m.get(&p.doi).copied())
                        .ok_or_else(|| anyhow!("paper {} has no label", p.doi))
                })
                .collect::<Result<_>>()?;
            let spec = ModelSpec::by_name(&model)?;
            let clf = PaperClassifier::train(&papers, &y, &spec, &stoplist(stopwords.as_deref())?.words())?;
            clf.save(ctx.out_file()?)?;
            print_json(&json!({ "command": "classify train", "papers": papers.len(), "positive": y.iter().filter(|&&b| b).count() }))
        }
        ClassifyCmd::Predict { model, papers } => {
            let clf = PaperClassifier::load(&model)?;
            let papers = corpus::load_papers(&papers)?;
            let labeled = classify_corpus(&clf, &papers);
            emit(ctx.out.as_deref(), &jsonl(&labeled)?)
        }
    }
}

fn topics(ctx: &Ctx, cmd: TopicsCmd) -> Result<()> {
    match cmd {
        TopicsCmd::Fit { input, k } => {
            let (kept, docs) = topic_docs(&input)?;
            let lda = fit_lda(&docs, &LdaConfig { k, alpha: input.alpha, beta: input.beta, sweeps: input.sweeps, seed: ctx.seed() })?;
            lda.save(ctx.out_file()?)?;
            print_json(&json!({ "command": "topics fit", "paragraphs_kept": kept.len(), "k": k }))
        }
        TopicsCmd::Select { input, k_min, k_max } => {
            if k_min == 0 || k_min > k_max {
                bail!("need 1 <= k-min <= k-max");
            }
            let (_, docs) = topic_docs(&input)?;
            let cfg = SelectKConfig {
                k_values: (k_min..=k_max).collect(),
                alpha: input.alpha,
                beta: input.beta,
                sweeps: input.sweeps,
                seed: ctx.seed(),
                top_n: 10,
            };
            let report = select_k(&docs, None, &cfg)?;
            emit(ctx.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
        }
        TopicsCmd::Map { model } => {
            let lda = LdaModel::load(&ctx.artifact(model, artifacts::LDA)?)?;
            emit(ctx.out.as_deref(), &topic_map_csv(&pca_topic_map(&lda)?))
        }
    }
}

fn ner(ctx: &Ctx, cmd: NerCmd) -> Result<()> {
    match cmd {
        NerCmd::Train { schema, data, epochs, patience, learning_rate, batch_size } => {
            let data: Vec<AnnotatedSequence> =
                load_annotations(&data)?.into_iter().filter(|s| s.schema == schema).collect();
            let split = split_dataset(&data, [8, 1, 1], ctx.seed())?;
            let (train, val, test) = (
                DatasetSplit::select(&data, &split.train),
                DatasetSplit::select(&data, &split.validation),
                DatasetSplit::select(&data, &split.test),
            );
            let cfg = TrainConfig {
                max_epochs: epochs,
                patience,
                learning_rate,
                batch_size,
                seed: ctx.seed(),
                optimizer: Optimizer::Adam,
                features: FeatureConfig::default(),
            };
            let (model, report) = train_crf(schema, &train, &val, &cfg)?;
            model.save(ctx.out_file()?)?;
            let eval = evaluate_model(&model, &test)?;
            print_json(&json!({
                "command": "ner train",
                "schema": schema,
                "train": train.len(),
                "validation": val.len(),
                "test": test.len(),
                "best_epoch": report.best_epoch,
                "test_relaxed_macro_f1": eval.mode(MatchMode::Relaxed).macro_f1,
                "test_strict_macro_f1": eval.mode(MatchMode::Strict).macro_f1,
            }))
        }
        NerCmd::Tag { model, paragraphs, gold } => {
            let model = CrfModel::load(&model)?;
            let mut ann = Vec::new();
            for g in &gold {
                ann.extend(load_annotations(g)?);
            }
            let gold = GoldIndex::new(&ann)?;
            let tagged = corpus::load_paragraphs(&paragraphs)?
                .iter()
                .map(|p| tag_paragraph(&model, p, &gold))
                .collect::<t2br_core::error::Result<Vec<_>>>()?;
            emit(ctx.out.as_deref(), &jsonl(&tagged)?)
        }
        NerCmd::Eval { model, data, mode } => {
            let model = CrfModel::load(&model)?;
            let data = load_annotations(&data)?;
            let refs: Vec<&AnnotatedSequence> = data.iter().filter(|s| Some(s.schema) == model.schema).collect();
            let report = evaluate_model(&model, &refs)?;
            let scores = report.mode(mode.into());
            emit(ctx.out.as_deref(), &(serde_json::to_string(&json!({ "mode": MatchMode::from(mode), "sequences": refs.len(), "scores": scores }))? + "\n"))
        }
    }
}

fn sequences_for(ctx: &Ctx, explicit: Option<PathBuf>) -> Result<Vec<RecipeSequence>> {
    let path = ctx.artifact(explicit, artifacts::SEQUENCES)?;
    load_sequences(&path).with_context(|| format!("loading {}; run `t2br sequences` first", path.display()))
}

fn markov(ctx: &Ctx, length: usize, top: usize, smoothing: f64, kind: KindArg, seqs: Option<PathBuf>) -> Result<()> {
    let kind = match kind {
        KindArg::Synthesis => RecipeKind::Synthesis,
        KindArg::Assembly => RecipeKind::Assembly,
    };
    let chains: Vec<_> = sequences_for(ctx, seqs)?.iter().filter(|s| s.kind == kind).map(|s| s.actions()).collect();
    let model = fit_markov_smoothed(&chains, smoothing)?;
    let paths = model.top_paths(length, top);
    print_json(&json!({ "kind": kind, "chains": chains.len(), "smoothing": smoothing, "paths": paths }))
}

fn trends(ctx: &Ctx, row: &str, col: &str, seqs: Option<PathBuf>, format: Format) -> Result<()> {
    let seqs = sequences_for(ctx, seqs)?;
    let m = trend_matrix(&seqs, TrendAxis::for_category(row)?, TrendAxis::for_category(col)?)?;
    let out = match format {
        Format::Csv => m.to_csv(),
        Format::Json => serde_json::to_string(&m)? + "\n",
    };
    emit(None, &out)
}

fn serve(ctx: &Ctx, dir: Option<PathBuf>, bind: Option<String>, port: Option<u16>, token: Option<String>) -> Result<()> {
    let cfg = ctx.config.as_ref().map(|_| ctx.pipeline_config()).transpose()?;
    let dir = dir
        .or_else(|| ctx.out.clone())
        .or_else(|| cfg.as_ref().map(|c| c.out_dir.clone()))
        .ok_or_else(|| anyhow!("pass --dir, --out or --config to locate index.json"))?;
    let service = cfg.map(|c| c.service).unwrap_or_default();
    let addr = format!("{}:{}", bind.unwrap_or(service.bind), port.unwrap_or(service.port));
    let snapshot = Snapshot::load(&dir).with_context(|| format!("loading artifacts from {}", dir.display()))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(api::serve(snapshot, &addr, token.or(service.token)))
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { config: cli.config, seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Pipeline => {
            let cfg = ctx.pipeline_config()?;
            run_pipeline_with(&cfg, |s| println!("{}", s.json_line()))?;
            Ok(())
        }
        Command::Classify { action: None } => stage(&ctx, Stage::Select),
        Command::Classify { action: Some(c) } => classify(&ctx, c),
        Command::Topics { action: None } => stage(&ctx, Stage::Topics),
        Command::Topics { action: Some(c) } => topics(&ctx, c),
        Command::Ner { action: None } => stage(&ctx, Stage::Ner),
        Command::Ner { action: Some(c) } => ner(&ctx, c),
        Command::Actions => stage(&ctx, Stage::Actions),
        Command::Normalize => stage(&ctx, Stage::Normalize),
        Command::Sequences { action: None | Some(SequencesCmd::Build) } => stage(&ctx, Stage::Sequences),
        Command::Sequences { action: Some(SequencesCmd::Markov { length, top, smoothing, kind, sequences }) } => {
            markov(&ctx, length, top, smoothing, kind, sequences)
        }
        Command::Link => stage(&ctx, Stage::Link),
        Command::Trends { row, col, sequences, format } => trends(&ctx, &row, &col, sequences, format),
        Command::Index => stage(&ctx, Stage::Index),
        Command::Serve { dir, bind, port, token } => serve(&ctx, dir, bind, port, token),
    }
}
