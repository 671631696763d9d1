use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::provenance::write_sidecar;
use super::{artifacts as a, PipelineConfig, Stage, StageSummary, Workspace};
use crate::actionclass::{classify_paragraph, ActionLexicon, ActionMention};
use crate::corpus::{self, ParagraphRecord, SectionKind, Stoplist};
use crate::error::{Error, Result};
use crate::nerlab::{
    evaluate_model, load_annotations, split_dataset, tag_paragraph, train_crf, AnnotatedSequence, CrfModel,
    DatasetSplit, GoldIndex, MatchMode, Schema, TaggedParagraph,
};
use crate::normalizer::{bin_times, normalize_entity, normalize_temperature, normalize_time, NormalizationLexicon};
use crate::queryengine::build_index;
use crate::recipegen::{audit_recipe, build_sequence, link_recipes, load_sequences, save_recipes, RecipeSequence};
use crate::textclass::{classify_corpus, LabeledPaper, ModelSpec, PaperClassifier};
use crate::topicmodel::{
    assign_topics, fit_lda, paragraph_tokens, pca_topic_map, select_k, topic_keywords, LdaConfig,
    ModelSelectionReport, SelectKConfig, TopicPoint, TopicRouting, TopicSummary,
};
use crate::util;

/// Keywords kept per topic in reports.
const REPORT_KEYWORDS: usize = 10;

/// `topics.json`: the fitted topics, their 2D map and the routing decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsReport {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<ModelSelectionReport>,
    pub summaries: Vec<TopicSummary>,
    pub map: Vec<TopicPoint>,
    pub routing: TopicRouting,
}

impl TopicsReport {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        util::read_json(path)
    }
}

fn stoplist(cfg: &PipelineConfig) -> Result<Stoplist> {
    match &cfg.lexicons.stopwords {
        Some(p) => Stoplist::load(p),
        None => Ok(Stoplist::english()),
    }
}

pub(crate) fn action_lexicon(cfg: &PipelineConfig) -> Result<ActionLexicon> {
    match &cfg.lexicons.actions {
        Some(p) => ActionLexicon::load(p),
        None => Ok(ActionLexicon::shipped()),
    }
}

pub(crate) fn normalization_lexicon(cfg: &PipelineConfig) -> Result<NormalizationLexicon> {
    match &cfg.lexicons.normalization {
        Some(p) => NormalizationLexicon::load(p),
        None => Ok(NormalizationLexicon::shipped()),
    }
}

fn optional_inputs(paths: &[&Option<PathBuf>]) -> Vec<PathBuf> {
    paths.iter().filter_map(|p| (*p).clone()).collect()
}

fn settings_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

pub(super) fn select(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let training = corpus::load_papers(&cfg.corpus.training_papers)?;
    let labels: Vec<bool> = training
        .iter()
        .map(|p| {
            p.label.ok_or_else(|| {
                Error::Validation(format!("training paper {} has no label", p.doi))
            })
        })
        .collect::<Result<_>>()?;
    let spec = ModelSpec::by_name(&cfg.classifier.model)?;
    let stop = stoplist(cfg)?;
    let classifier = PaperClassifier::train(&training, &labels, &spec, &stop.words())?;
    let papers = corpus::load_papers(&cfg.corpus.papers)?;
    let labeled = classify_corpus(&classifier, &papers);

    let model_path = ws.path(a::CLASSIFIER);
    classifier.save(&model_path)?;
    let labeled_path = ws.path(a::LABELED);
    util::write_jsonl(&labeled_path, &labeled)?;

    let mut inputs = vec![cfg.corpus.training_papers.clone(), cfg.corpus.papers.clone()];
    inputs.extend(optional_inputs(&[&cfg.lexicons.stopwords]));
    let settings = json!({ "classifier": cfg.classifier });
    write_sidecar(&model_path, Stage::Select.as_str(), &inputs, cfg.seed, settings.clone())?;
    write_sidecar(&labeled_path, Stage::Select.as_str(), &inputs, cfg.seed, settings)?;

    let mut s = StageSummary::new(Stage::Select);
    s.set("training_papers", training.len());
    s.set("papers_in", papers.len());
    s.set("papers_out", labeled.iter().filter(|p| p.paper.label == Some(true)).count());
    Ok(s)
}

pub(super) fn topics(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let labeled_path = ws.require(Stage::Topics, a::LABELED)?;
    let labeled: Vec<LabeledPaper> = util::read_jsonl(&labeled_path)?.into_iter().map(|(_, p)| p).collect();
    let selected: BTreeSet<&str> =
        labeled.iter().filter(|p| p.paper.label == Some(true)).map(|p| p.paper.doi.as_str()).collect();
    let all = corpus::load_paragraphs(&cfg.corpus.paragraphs)?;
    let of_selected: Vec<ParagraphRecord> =
        all.iter().filter(|p| selected.contains(p.paper_doi.as_str())).cloned().collect();
    let kept = corpus::filter_paragraphs(&of_selected, cfg.topics.min_chars);
    if kept.is_empty() {
        return Err(Error::Validation("no paragraphs left for topic modeling".into()));
    }
    let stop = stoplist(cfg)?;
    let docs: Vec<Vec<String>> = kept.iter().map(|p| paragraph_tokens(p, &stop)).collect();

    let t = &cfg.topics;
    let k_values = t.k_values()?;
    let selection = if k_values.len() > 1 {
        let sk = SelectKConfig {
            k_values: k_values.clone(),
            alpha: t.alpha,
            beta: t.beta,
            sweeps: t.sweeps,
            seed: cfg.seed,
            top_n: REPORT_KEYWORDS,
        };
        Some(select_k(&docs, None, &sk)?)
    } else {
        None
    };
    let k = selection.as_ref().map_or(k_values[0], |r| r.chosen_k);
    let lda = fit_lda(&docs, &LdaConfig { k, alpha: t.alpha, beta: t.beta, sweeps: t.sweeps, seed: cfg.seed })?;

    let routing = match (&t.synthesis_topics, &t.assembly_topics) {
        (Some(syn), Some(asm)) => TopicRouting { synthesis: syn.clone(), assembly: asm.clone() },
        _ => TopicRouting::from_anchors(&lda, &t.anchors.clone().unwrap_or_default()),
    };
    let mut routed = assign_topics(&lda, &kept, &stop);
    routing.apply(&mut routed);

    let summaries = (0..k).map(|topic| topic_keywords(&lda, topic, REPORT_KEYWORDS)).collect::<Result<Vec<_>>>()?;
    let map = if k >= 2 { pca_topic_map(&lda)? } else { Vec::new() };
    let report = TopicsReport { k, selection, summaries, map, routing };

    let lda_path = ws.path(a::LDA);
    lda.save(&lda_path)?;
    let report_path = ws.path(a::TOPICS);
    util::write_json(&report_path, &report)?;
    let map_path = ws.path(a::TOPIC_MAP);
    std::fs::write(&map_path, crate::topicmodel::topic_map_csv(&report.map)).map_err(|e| Error::io(&map_path, e))?;
    let kw_path = ws.path(a::KEYWORDS);
    std::fs::write(&kw_path, crate::topicmodel::keywords_csv(&report.summaries)).map_err(|e| Error::io(&kw_path, e))?;
    let routed_path = ws.path(a::ROUTED);
    crate::corpus::save_paragraphs(&routed_path, &routed)?;

    let mut inputs = vec![labeled_path, cfg.corpus.paragraphs.clone()];
    inputs.extend(optional_inputs(&[&cfg.lexicons.stopwords]));
    let settings = settings_json(&cfg.topics);
    for p in [&lda_path, &report_path, &map_path, &kw_path, &routed_path] {
        write_sidecar(p, Stage::Topics.as_str(), &inputs, cfg.seed, settings.clone())?;
    }

    let count = |kind: SectionKind| routed.iter().filter(|p| p.section_kind == Some(kind)).count();
    let mut s = StageSummary::new(Stage::Topics);
    s.set("paragraphs_in", of_selected.len());
    s.set("paragraphs_kept", kept.len());
    s.set("k", k);
    s.set("synthesis_paragraphs", count(SectionKind::Synthesis));
    s.set("assembly_paragraphs", count(SectionKind::Assembly));
    Ok(s)
}

fn load_routed(ws: &Workspace, stage: Stage) -> Result<(PathBuf, Vec<ParagraphRecord>)> {
    let path = ws.require(stage, a::ROUTED)?;
    let paragraphs = corpus::load_paragraphs(&path)?;
    Ok((path, paragraphs))
}

fn schema_of(kind: Option<SectionKind>) -> Option<Schema> {
    match kind {
        Some(SectionKind::Synthesis) => Some(Schema::Synthesis),
        Some(SectionKind::Assembly) => Some(Schema::Assembly),
        _ => None,
    }
}

fn train_schema(
    cfg: &PipelineConfig,
    schema: Schema,
    data: &[AnnotatedSequence],
) -> Result<(CrfModel, serde_json::Value)> {
    let data: Vec<AnnotatedSequence> = data.iter().filter(|d| d.schema == schema).cloned().collect();
    let split = split_dataset(&data, [8, 1, 1], cfg.seed)?;
    let train = DatasetSplit::select(&data, &split.train);
    let val = DatasetSplit::select(&data, &split.validation);
    let test = DatasetSplit::select(&data, &split.test);
    let (model, report) = train_crf(schema, &train, &val, &cfg.ner.train_config(cfg.seed))?;
    let eval = evaluate_model(&model, &test)?;
    let stats = json!({
        "sequences": data.len(),
        "train": train.len(),
        "validation": val.len(),
        "test": test.len(),
        "best_epoch": report.best_epoch,
        "epochs_run": report.epochs.len(),
        "test_relaxed_macro_f1": eval.mode(MatchMode::Relaxed).macro_f1,
        "test_strict_macro_f1": eval.mode(MatchMode::Strict).macro_f1,
    });
    Ok((model, stats))
}

pub(super) fn ner(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let (routed_path, routed) = load_routed(ws, Stage::Ner)?;
    let mut annotations = load_annotations(&cfg.ner.synthesis_annotations)?;
    annotations.extend(load_annotations(&cfg.ner.assembly_annotations)?);
    let gold = GoldIndex::new(&annotations)?;

    let (syn_model, syn_stats) = train_schema(cfg, Schema::Synthesis, &annotations)?;
    let (asm_model, asm_stats) = train_schema(cfg, Schema::Assembly, &annotations)?;

    let mut tagged: Vec<TaggedParagraph> = Vec::new();
    for p in &routed {
        let model = match schema_of(p.section_kind) {
            Some(Schema::Synthesis) => &syn_model,
            Some(Schema::Assembly) => &asm_model,
            None => continue,
        };
        tagged.push(tag_paragraph(model, p, &gold)?);
    }

    let syn_path = ws.path(a::CRF_SYNTHESIS);
    syn_model.save(&syn_path)?;
    let asm_path = ws.path(a::CRF_ASSEMBLY);
    asm_model.save(&asm_path)?;
    let tagged_path = ws.path(a::TAGGED);
    util::write_jsonl(&tagged_path, &tagged)?;

    let inputs = vec![routed_path, cfg.ner.synthesis_annotations.clone(), cfg.ner.assembly_annotations.clone()];
    let settings = json!({ "ner": cfg.ner, "synthesis": syn_stats, "assembly": asm_stats });
    for p in [&syn_path, &asm_path, &tagged_path] {
        write_sidecar(p, Stage::Ner.as_str(), &inputs, cfg.seed, settings.clone())?;
    }

    let gold_sentences: usize = tagged.iter().map(|t| t.gold_sentences.len()).sum();
    let sentences: usize = tagged.iter().map(|t| t.sentences.len()).sum();
    let mut s = StageSummary::new(Stage::Ner);
    s.set("paragraphs_tagged", tagged.len());
    s.set("sentences", sentences);
    s.set("gold_sentences", gold_sentences);
    s.set("model_sentences", sentences - gold_sentences);
    s.set("entities", tagged.iter().map(|t| t.entities.len()).sum::<usize>());
    s.set("synthesis_test_relaxed_f1", syn_stats["test_relaxed_macro_f1"].clone());
    s.set("assembly_test_relaxed_f1", asm_stats["test_relaxed_macro_f1"].clone());
    Ok(s)
}

pub(super) fn actions(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let (routed_path, routed) = load_routed(ws, Stage::Actions)?;
    let lex = action_lexicon(cfg)?;
    let mut mentions: Vec<ActionMention> = Vec::new();
    let mut paragraphs = 0;
    for p in routed.iter().filter(|p| schema_of(p.section_kind).is_some()) {
        paragraphs += 1;
        mentions.extend(classify_paragraph(p, &lex));
    }
    let path = ws.path(a::ACTIONS);
    util::write_jsonl(&path, &mentions)?;
    let mut inputs = vec![routed_path];
    inputs.extend(optional_inputs(&[&cfg.lexicons.actions]));
    write_sidecar(&path, Stage::Actions.as_str(), &inputs, cfg.seed, json!({ "lexicon_entries": lex.len() }))?;

    let mut by_cat: BTreeMap<String, usize> = BTreeMap::new();
    for m in &mentions {
        *by_cat.entry(m.category.to_string()).or_default() += 1;
    }
    let mut s = StageSummary::new(Stage::Actions);
    s.set("paragraphs", paragraphs);
    s.set("actions", mentions.len());
    s.set("by_category", settings_json(&by_cat));
    Ok(s)
}

/// Trend label of a log-time bin.
pub fn time_bin_label(bin: usize) -> String {
    format!("log-bin {bin}")
}

pub(super) fn normalize(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let tagged_path = ws.require(Stage::Normalize, a::TAGGED)?;
    let mut tagged: Vec<TaggedParagraph> = util::read_jsonl(&tagged_path)?.into_iter().map(|(_, t)| t).collect();
    let lex = normalization_lexicon(cfg)?;

    let (mut canonical, mut temps, mut unparsed) = (0, 0, 0);
    let mut times: Vec<(usize, usize, f64)> = Vec::new();
    for (pi, para) in tagged.iter_mut().enumerate() {
        for (ei, e) in para.entities.iter_mut().enumerate() {
            let c = normalize_entity(&e.category, &e.surface, &lex);
            canonical += usize::from(c.canonical);
            e.value = Some(c.value);
            e.canonical = c.canonical;
            e.bins.clear();
            match e.category.as_str() {
                "TEMP" => match normalize_temperature(&e.surface) {
                    Ok(t) => {
                        temps += 1;
                        e.bins = t.labels();
                    }
                    Err(_) => unparsed += 1,
                },
                "TIME" => match normalize_time(&e.surface) {
                    Ok(t) => times.push((pi, ei, t.seconds)),
                    Err(_) => unparsed += 1,
                },
                _ => {}
            }
        }
    }
    if !times.is_empty() {
        let seconds: Vec<f64> = times.iter().map(|t| t.2).collect();
        let bins = bin_times(&seconds, cfg.normalize.time_binning)?;
        for (&(pi, ei, _), b) in times.iter().zip(bins) {
            tagged[pi].entities[ei].bins = vec![time_bin_label(b)];
        }
    }

    let path = ws.path(a::NORMALIZED);
    util::write_jsonl(&path, &tagged)?;
    let mut inputs = vec![tagged_path];
    inputs.extend(optional_inputs(&[&cfg.lexicons.normalization]));
    write_sidecar(&path, Stage::Normalize.as_str(), &inputs, cfg.seed, settings_json(&cfg.normalize))?;

    let mut s = StageSummary::new(Stage::Normalize);
    s.set("entities", tagged.iter().map(|t| t.entities.len()).sum::<usize>());
    s.set("lexicon_matches", canonical);
    s.set("temperatures", temps);
    s.set("times", times.len());
    s.set("unparsed_quantities", unparsed);
    Ok(s)
}

pub(super) fn sequences(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let norm_path = ws.require(Stage::Sequences, a::NORMALIZED)?;
    let actions_path = ws.require(Stage::Sequences, a::ACTIONS)?;
    let tagged: Vec<TaggedParagraph> = util::read_jsonl(&norm_path)?.into_iter().map(|(_, t)| t).collect();
    let mentions: Vec<ActionMention> = util::read_jsonl(&actions_path)?.into_iter().map(|(_, m)| m).collect();
    let mut by_para: BTreeMap<(String, usize), Vec<ActionMention>> = BTreeMap::new();
    for m in mentions {
        if let (Some(doi), Some(ord)) = (m.paper_doi.clone(), m.ordinal) {
            by_para.entry((doi, ord)).or_default().push(m);
        }
    }
    let mut seqs: Vec<RecipeSequence> = tagged
        .iter()
        .map(|t| {
            let acts = by_para.get(&(t.paper_doi.clone(), t.ordinal)).map_or(&[][..], Vec::as_slice);
            build_sequence(&t.paper_doi, t.ordinal, t.schema, &t.entities, acts)
        })
        .collect();
    seqs.sort_by(|x, y| (&x.paper_doi, x.ordinal).cmp(&(&y.paper_doi, y.ordinal)));

    let path = ws.path(a::SEQUENCES);
    crate::recipegen::save_sequences(&path, &seqs)?;
    write_sidecar(&path, Stage::Sequences.as_str(), &[norm_path, actions_path], cfg.seed, json!({}))?;

    let mut s = StageSummary::new(Stage::Sequences);
    s.set("synthesis_sequences", seqs.iter().filter(|q| q.kind == Schema::Synthesis).count());
    s.set("assembly_sequences", seqs.iter().filter(|q| q.kind == Schema::Assembly).count());
    s.set("steps", seqs.iter().map(|q| q.steps.len()).sum::<usize>());
    s.set("unattached_entities", seqs.iter().map(|q| q.unattached.len()).sum::<usize>());
    Ok(s)
}

fn split_kinds(seqs: Vec<RecipeSequence>) -> (Vec<RecipeSequence>, Vec<RecipeSequence>) {
    seqs.into_iter().partition(|s| s.kind == Schema::Synthesis)
}

pub(super) fn link(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let seq_path = ws.require(Stage::Link, a::SEQUENCES)?;
    let (syn, asm) = split_kinds(load_sequences(&seq_path)?);
    let recipes = link_recipes(&syn, &asm);
    if let Some((r, problems)) = recipes.iter().map(|r| (r, audit_recipe(r))).find(|(_, p)| !p.is_empty()) {
        return Err(Error::Validation(format!("recipe {} fails audit: {}", r.id, problems.join("; "))));
    }
    let path = ws.path(a::RECIPES);
    save_recipes(&path, &recipes)?;
    write_sidecar(&path, Stage::Link.as_str(), &[seq_path], cfg.seed, json!({}))?;

    let mut s = StageSummary::new(Stage::Link);
    s.set("synthesis_sequences", syn.len());
    s.set("assembly_sequences", asm.len());
    s.set("recipes", recipes.len());
    s.set("papers_with_recipes", recipes.iter().map(|r| r.paper_doi.as_str()).collect::<BTreeSet<_>>().len());
    Ok(s)
}

pub(super) fn index(cfg: &PipelineConfig, ws: &Workspace) -> Result<StageSummary> {
    let recipes_path = ws.require(Stage::Index, a::RECIPES)?;
    let seq_path = ws.require(Stage::Index, a::SEQUENCES)?;
    let recipes = crate::recipegen::load_recipes(&recipes_path)?;
    let (syn, asm) = split_kinds(load_sequences(&seq_path)?);
    let lex = normalization_lexicon(cfg)?;
    let index = build_index(&recipes, &syn, &asm, &lex);
    index.validate()?;
    let path = ws.path(a::INDEX);
    index.save(&path)?;
    let mut inputs = vec![recipes_path, seq_path];
    inputs.extend(optional_inputs(&[&cfg.lexicons.normalization]));
    write_sidecar(&path, Stage::Index.as_str(), &inputs, cfg.seed, json!({}))?;

    let mut s = StageSummary::new(Stage::Index);
    s.set("records", index.len());
    s.set("postings", index.postings.values().map(BTreeMap::len).sum::<usize>());
    Ok(s)
}
