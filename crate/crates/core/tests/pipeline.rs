mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use t2br_core::corpus::{load_paragraphs, sentence_words};
use t2br_core::error::Error;
use t2br_core::nerlab::load_annotations;
use t2br_core::pipeline::{
    artifact_files, file_sha256, read_sidecar, run_pipeline, run_stage, Stage, StageSummary,
};
use t2br_core::queryengine::{search, RecipeIndex, RecordBody};
use t2br_core::recipegen::{audit_recipe, load_recipes, load_sequences, RecipeKind};
use tempfile::TempDir;

use common::golden::*;

struct GoldenRun {
    dir: TempDir,
    summaries: Vec<StageSummary>,
}

fn golden_run() -> &'static GoldenRun {
    static RUN: OnceLock<GoldenRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let summaries = run_pipeline(&golden_config(dir.path())).unwrap();
        GoldenRun { dir, summaries }
    })
}

#[test]
fn golden_run_links_the_intended_papers() {
    let run = golden_run();
    let recipes = load_recipes(&run.dir.path().join("recipes.jsonl")).unwrap();
    let dois: BTreeSet<String> = recipes.iter().map(|r| r.paper_doi.clone()).collect();
    // 04/05 split across papers, 06 has mismatched materials, 07 names no method.
    let want: BTreeSet<String> = [1, 2, 3, 8, 9].into_iter().map(gold_doi).collect();
    assert_eq!(dois, want);
    assert_eq!(recipes.len(), 5, "paper 02's two assembly paragraphs must collapse to one recipe");
    for r in &recipes {
        assert!(audit_recipe(r).is_empty(), "{}: {:?}", r.id, audit_recipe(r));
    }
    let p08 = recipes.iter().find(|r| r.paper_doi == gold_doi(8)).unwrap();
    assert_eq!((p08.target_material.as_str(), p08.method.as_str()), ("LiFePO4/C", "solid state"));
    let p09 = recipes.iter().find(|r| r.paper_doi == gold_doi(9)).unwrap();
    assert_eq!(p09.method, "carbothermal reduction");
}

#[test]
fn golden_linking_matches_brute_force() {
    let run = golden_run();
    let seqs = load_sequences(&run.dir.path().join("sequences.jsonl")).unwrap();
    let (syn, asm): (Vec<_>, Vec<_>) = seqs.into_iter().partition(|s| s.kind == RecipeKind::Synthesis);
    let recipes = load_recipes(&run.dir.path().join("recipes.jsonl")).unwrap();
    let got: BTreeSet<_> =
        recipes.iter().map(|r| (r.paper_doi.clone(), r.target_material.clone(), r.method.clone())).collect();
    assert_eq!(got, common::brute_force_keys(&syn, &asm));
}

#[test]
fn stage_summaries_are_json_lines() {
    let run = golden_run();
    let stages: Vec<Stage> = run.summaries.iter().map(|s| s.stage).collect();
    assert_eq!(stages, Stage::ALL.to_vec());
    for s in &run.summaries {
        let v: serde_json::Value = serde_json::from_str(&s.json_line()).unwrap();
        assert_eq!(v["stage"], s.stage.as_str());
    }
    let select = &run.summaries[0].counts;
    assert_eq!(select["papers_in"], 12);
    assert_eq!(select["papers_out"], 10);
    let ner = &run.summaries[2].counts;
    assert!(ner["model_sentences"].as_u64().unwrap() > 0, "the unannotated paragraph must go through the CRF");
}

#[test]
fn worked_query_returns_the_reference_recipe() {
    let run = golden_run();
    let index = RecipeIndex::load(&run.dir.path().join("index.json")).unwrap();
    let q = "(( \u{2018}sucrose\u{2019} ). PREC ) AND (( \u{2018}solid state\u{2019} ). METHOD ) AND (( \u{2018}end-to-end\u{2019} ). TYPE )";
    let res = search(&index, q).unwrap();
    assert_eq!(res.total, 1);
    let hit = &res.results[0];
    let recipe = load_recipes(&run.dir.path().join("recipes.jsonl"))
        .unwrap()
        .into_iter()
        .find(|r| r.paper_doi == gold_doi(1))
        .unwrap();
    assert_eq!(hit.id, recipe.id);
    match &hit.recipe {
        RecordBody::EndToEnd(r) => assert_eq!(**r, recipe),
        other => panic!("expected an end-to-end record, got {other:?}"),
    }
}

#[test]
fn sidecars_hash_their_artifacts() {
    let run = golden_run();
    let files = artifact_files(run.dir.path()).unwrap();
    assert!(files.len() >= 15);
    for f in files {
        let prov = read_sidecar(&f).unwrap();
        assert_eq!(prov.sha256, file_sha256(&f).unwrap(), "{}", f.display());
        assert_eq!(prov.seed, 7);
        for (input, sha) in &prov.inputs {
            assert_eq!(sha, &file_sha256(Path::new(input)).unwrap());
        }
    }
}

#[test]
fn two_runs_are_byte_identical() {
    let first = golden_run();
    let dir = TempDir::new().unwrap();
    run_pipeline(&golden_config(dir.path())).unwrap();
    let a = artifact_files(first.dir.path()).unwrap();
    let b = artifact_files(dir.path()).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(std::fs::read(x).unwrap() == std::fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn stage_out_of_order_names_the_missing_step() {
    let dir = TempDir::new().unwrap();
    let cfg = golden_config(dir.path());
    match run_stage(&cfg, Stage::Link) {
        Err(Error::MissingArtifact { stage, artifact, run_first }) => {
            assert_eq!(stage, "link");
            assert!(artifact.ends_with("sequences.jsonl"));
            assert_eq!(run_first, "sequences");
        }
        other => panic!("expected a missing-artifact error, got {other:?}"),
    }
    let err = run_stage(&cfg, Stage::Topics).unwrap_err();
    assert!(err.to_string().contains("run `classify` first"), "{err}");
}

#[test]
fn annotation_tokens_match_the_tokenizer() {
    let paras = load_paragraphs(&golden_dir().join("paragraphs.jsonl")).unwrap();
    for file in ["annotations_synthesis.jsonl", "annotations_assembly.jsonl"] {
        let ann = load_annotations(&golden_dir().join(file)).unwrap();
        assert!(ann.len() >= 20);
        for a in ann {
            let doi = a.paper_doi.as_deref().unwrap();
            let p = paras.iter().find(|p| p.paper_doi == doi && Some(p.ordinal) == a.ordinal).unwrap();
            let words = sentence_words(&p.text);
            assert_eq!(words[a.sentence.unwrap()], a.tokens, "{doi} paragraph {:?}", a.ordinal);
        }
    }
}
