mod common;

use std::time::Instant;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use t2br_core::nerlab::*;

#[test]
fn forward_and_viterbi_match_enumeration() {
    let mut r = rng(17);
    let tagset = two_category_tagset();
    let mask = TransitionMask::iobes(&tagset);
    for trial in 0..60 {
        let len = 1 + trial % 4;
        let (model, seq) = random_model(&mut r, len, if trial % 2 == 0 { 0 } else { 2 });
        let paths = valid_paths(&mask, len);
        let scores: Vec<f64> = paths.iter().map(|p| model.path_score(&seq, p)).collect();
        let log_z = naive_logsumexp(&scores);
        assert!((model.log_partition(&seq) - log_z).abs() < 1e-9);

        let best = (0..paths.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        assert_eq!(model.viterbi(&seq), paths[best]);

        let m = model.marginals(&seq);
        for i in 0..len {
            for t in 0..tagset.len() {
                let oracle: f64 = paths
                    .iter()
                    .zip(&scores)
                    .filter(|(p, _)| p[i] == t)
                    .map(|(_, s)| (s - log_z).exp())
                    .sum();
                assert!((m.node[i][t] - oracle).abs() < 1e-10);
            }
            assert!((m.node[i].iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn log_partition_bounds_every_path() {
    let mut r = rng(3);
    let mask = TransitionMask::iobes(&two_category_tagset());
    for _ in 0..20 {
        let (model, seq) = random_model(&mut r, 3, 0);
        let z = model.log_partition(&seq);
        let best = model.path_score(&seq, &model.viterbi(&seq));
        assert!(z >= best);
        for p in valid_paths(&mask, 3) {
            assert!(model.path_score(&seq, &p) <= z);
        }
    }
}

#[test]
fn start_mask_overrides_emissions() {
    let mut r = rng(8);
    let (mut model, seq) = random_model(&mut r, 3, 0);
    let i_am = model.tagset.parse("I-AM").unwrap();
    let n = model.n_tags();
    for &f in &seq.rows[0] {
        model.params[f * n + i_am] = 1e4;
    }
    let path = model.viterbi(&seq);
    assert_ne!(path[0], i_am);
    assert!(model.mask.is_valid(&path));
}

#[test]
fn single_token_decodes_to_o_or_single() {
    let mut r = rng(21);
    for _ in 0..50 {
        let (model, seq) = random_model(&mut r, 1, 0);
        let t = model.viterbi(&seq)[0];
        assert!(matches!(model.tagset.tag(t), Tag::O | Tag::S(_)));
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(99);
    let tagset = two_category_tagset();
    for _ in 0..5 {
        let len = r.random_range(2..6);
        let (mut model, seq) = random_model(&mut r, len, 2);
        let (gold, _) = random_valid_tags(&mut r, &tagset, len);
        let (nll, grad) = model.nll_grad(&seq, &gold).unwrap();
        assert!(nll >= 0.0);
        let free: Vec<usize> = (0..model.params.len()).filter(|&i| model.is_free(i)).collect();
        for _ in 0..10 {
            let i = free[r.random_range(0..free.len())];
            let h = 1e-5;
            let orig = model.params[i];
            model.params[i] = orig + h;
            let up = model.nll(&seq, &gold).unwrap();
            model.params[i] = orig - h;
            let down = model.nll(&seq, &gold).unwrap();
            model.params[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = grad[i].abs().max(numeric.abs()).max(1e-6);
            assert!((grad[i] - numeric).abs() / denom < 1e-4, "param {i}: {} vs {numeric}", grad[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_decode_round_trip(seed: u64, len in 1usize..20) {
        let tagset = Schema::Assembly.tagset();
        let (tags, spans) = random_valid_tags(&mut rng(seed), &tagset, len);
        prop_assert!(TransitionMask::iobes(&tagset).is_valid(&tags));
        let decoded = decode_tags(&tags, &tagset, DecodeMode::Strict).unwrap();
        prop_assert_eq!(&decoded, &spans);
        prop_assert_eq!(encode_spans(len, &decoded, &tagset).unwrap(), tags);
    }

    #[test]
    fn tolerant_decode_is_always_encodable(tags in proptest::collection::vec(0usize..9, 1..15)) {
        let tagset = two_category_tagset();
        let spans = decode_tags(&tags, &tagset, DecodeMode::Tolerant).unwrap();
        let reencoded = encode_spans(tags.len(), &spans, &tagset).unwrap();
        prop_assert!(TransitionMask::iobes(&tagset).is_valid(&reencoded));
        if TransitionMask::iobes(&tagset).is_valid(&tags) {
            prop_assert_eq!(reencoded, tags);
        }
    }

    #[test]
    fn relaxed_never_below_strict(seed: u64) {
        let tagset = two_category_tagset();
        let mut r = rng(seed);
        let gold: Vec<Vec<EntitySpan>> = (0..4).map(|_| random_valid_tags(&mut r, &tagset, 12).1).collect();
        let pred: Vec<Vec<EntitySpan>> = (0..4).map(|_| random_valid_tags(&mut r, &tagset, 12).1).collect();
        let report = evaluate(&pred, &gold);
        prop_assert!(report.relaxation_violations().is_empty());
        prop_assert!(report.relaxed.micro.f1 >= report.strict.micro.f1);
    }
}

#[test]
fn template_corpus_is_recovered() {
    let data = template_corpus(40, 5);
    let train: Vec<&AnnotatedSequence> = data[..30].iter().collect();
    let val: Vec<&AnnotatedSequence> = data[30..35].iter().collect();
    let test: Vec<&AnnotatedSequence> = data[35..].iter().collect();
    let started = Instant::now();
    let (model, report) = train_crf(Schema::Synthesis, &train, &val, &TrainConfig::default()).unwrap();
    assert!(started.elapsed().as_secs() < 60);
    assert!(report.epochs.len() <= 50);

    let on_train = evaluate_model(&model, &train).unwrap();
    assert_eq!(on_train.relaxed.macro_f1, 1.0);
    let on_test = evaluate_model(&model, &test).unwrap();
    assert!(on_test.relaxed.macro_f1 >= 0.95, "{:?}", on_test.relaxed);

    let first = report.epochs[0].train_nll;
    let at_best = report.epochs[report.best_epoch - 1].train_nll;
    assert!(at_best <= first);
    let upto_best: Vec<f64> = report.epochs[..report.best_epoch].iter().map(|e| e.train_nll).collect();
    assert!(upto_best.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{upto_best:?}");
}

#[test]
fn training_is_deterministic() {
    let data = template_corpus(12, 2);
    let train: Vec<&AnnotatedSequence> = data[..10].iter().collect();
    let val: Vec<&AnnotatedSequence> = data[10..].iter().collect();
    let cfg = TrainConfig {
        max_epochs: 3,
        seed: 4,
        ..TrainConfig::default()
    };
    let a = train_crf(Schema::Synthesis, &train, &val, &cfg).unwrap();
    let b = train_crf(Schema::Synthesis, &train, &val, &cfg).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn shuffle_split_cv_recovers_templates() {
    let data = template_corpus(40, 9);
    let cfg = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let folds = shuffle_split_cv(Schema::Synthesis, &data, 10, &cfg).unwrap();
    assert_eq!(folds.len(), 10);
    let mean: f64 = folds.iter().map(|f| f.report.relaxed.macro_f1).sum::<f64>() / 10.0;
    assert!(mean >= 0.95, "mean relaxed F1 {mean}");
    for f in &folds {
        assert_eq!(f.split.train.len() + f.split.validation.len() + f.split.test.len(), 40);
        assert!(f.report.relaxation_violations().is_empty());
    }
    let again = shuffle_split_cv(Schema::Synthesis, &data, 10, &cfg).unwrap();
    let splits: Vec<_> = folds.iter().map(|f| &f.split).collect();
    let splits_again: Vec<_> = again.iter().map(|f| &f.split).collect();
    assert_eq!(splits, splits_again);
}

#[test]
fn split_preserves_category_rates() {
    // a mixed corpus: template sentences plus sentences with no SOLV span
    let mut data = template_corpus(40, 12);
    for s in data.iter_mut().step_by(4) {
        s.spans.retain(|sp| sp.category == "PREC");
    }
    let split = split_dataset(&data, [8, 1, 1], 3).unwrap();
    for cat in ["PREC", "SOLV"] {
        let rate = |idx: &[usize]| idx.iter().filter(|&&i| data[i].categories().contains(cat)).count() as f64 / idx.len() as f64;
        let global = rate(&(0..data.len()).collect::<Vec<_>>());
        let train = rate(&split.train);
        assert!((train - global).abs() <= 0.2 * global, "{cat}: {train} vs {global}");
    }
}

#[test]
fn annotation_file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ann.jsonl");
    let data = template_corpus(3, 1);
    save_annotations(&path, &data).unwrap();
    assert_eq!(load_annotations(&path).unwrap(), data);

    std::fs::write(
        &path,
        "{\"tokens\":[\"a\"],\"spans\":[],\"schema\":\"synthesis\"}\n{\"tokens\":[\"a\"],\"spans\":[{\"category\":\"AM\",\"start\":0,\"end\":1}],\"schema\":\"synthesis\"}\n",
    )
    .unwrap();
    let err = load_annotations(&path).unwrap_err().to_string();
    assert!(err.contains(":2"), "{err}");
}
