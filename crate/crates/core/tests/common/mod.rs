//! Oracles and fixture generators shared by the integration suites.
#![allow(dead_code)]

pub mod chains;
pub mod golden;
pub mod queries;

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use t2br_core::nerlab::{
    AnnotatedSequence, CrfModel, EntitySpan, FeatureConfig, Schema, SequenceFeatures, TagSet, TransitionMask,
};
use t2br_core::recipegen::RecipeSequence;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn two_category_tagset() -> TagSet {
    TagSet::new(vec!["AM".into(), "PREC".into()])
}

/// Every tag path of length `len` allowed by `mask`, by exhaustive enumeration.
pub fn valid_paths(mask: &TransitionMask, len: usize) -> Vec<Vec<usize>> {
    let n = mask.n_tags();
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let t = code % n;
                    code /= n;
                    t
                })
                .collect::<Vec<usize>>()
        })
        .filter(|p| mask.is_valid(p))
        .collect()
}

pub fn naive_logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A CRF over the 9-tag set with random weights, plus a random feature
/// sequence of length `len`.
pub fn random_model(rng: &mut ChaCha8Rng, len: usize, embedding_dim: usize) -> (CrfModel, SequenceFeatures) {
    let n_features = 6;
    let mut model = CrfModel::new(
        None,
        two_category_tagset(),
        FeatureConfig::default(),
        (0..n_features as u64).collect(),
        embedding_dim,
    );
    for p in model.params.iter_mut() {
        *p = rng.random_range(-2.0..2.0);
    }
    let rows = (0..len)
        .map(|_| (0..n_features).filter(|_| rng.random_bool(0.5)).collect())
        .collect();
    let dense = (embedding_dim > 0).then(|| {
        (0..len)
            .map(|_| (0..embedding_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    });
    (model, SequenceFeatures { rows, dense })
}

/// A random IOBES-valid tag sequence built from random non-overlapping spans.
pub fn random_valid_tags(rng: &mut ChaCha8Rng, tagset: &TagSet, len: usize) -> (Vec<usize>, Vec<EntitySpan>) {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < len {
        if rng.random_bool(0.4) {
            let width = rng.random_range(1..=(len - i).min(4));
            let c = rng.random_range(0..tagset.categories().len());
            spans.push(EntitySpan::new(tagset.categories()[c].clone(), i, i + width));
            i += width;
        } else {
            i += 1;
        }
    }
    let tags = t2br_core::nerlab::encode_spans(len, &spans, tagset).expect("generated spans are valid");
    (tags, spans)
}

const PRECURSORS: &[&str] = &[
    "LiOH", "Li2CO3", "FeSO4", "NH4H2PO4", "FeC2O4", "LiNO3", "Fe(NO3)3", "CH3COOLi", "H3PO4", "LiH2PO4", "MnSO4",
    "CoCO3", "NiSO4", "Fe2O3", "FePO4", "Li3PO4", "LiCl", "FeCl2", "Mn(CH3COO)2", "Co(NO3)2",
];

const SOLVENTS: &[&[&str]] = &[
    &["water"],
    &["ethanol"],
    &["deionized", "water"],
    &["absolute", "ethanol"],
    &["distilled", "water"],
    &["methanol"],
    &["ethylene", "glycol"],
];

/// Template sentences "X was dissolved in Y" with X a precursor (PREC) and
/// Y a solvent (SOLV), with a few surface variations.
pub fn template_corpus(n: usize, seed: u64) -> Vec<AnnotatedSequence> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let x = *PRECURSORS.choose(&mut rng).unwrap();
            let y = *SOLVENTS.choose(&mut rng).unwrap();
            let mut tokens: Vec<String> = Vec::new();
            let lead = rng.random_range(0..3);
            if lead == 1 {
                tokens.push("Stoichiometric".into());
            } else if lead == 2 {
                tokens.push("First".into());
                tokens.push(",".into());
            }
            let px = tokens.len();
            tokens.push(x.into());
            tokens.extend(["was", "dissolved", "in"].map(String::from));
            let py = tokens.len();
            tokens.extend(y.iter().map(|s| s.to_string()));
            let end_y = tokens.len();
            if rng.random_bool(0.5) {
                tokens.extend(["under", "stirring"].map(String::from));
            }
            AnnotatedSequence::new(
                Schema::Synthesis,
                tokens,
                vec![EntitySpan::new("PREC", px, px + 1), EntitySpan::new("SOLV", py, end_y)],
            )
        })
        .collect()
}

/// Scans every pair directly and returns the (doi, TM, method) keys that pass all rules.
pub fn brute_force_keys(syn: &[RecipeSequence], asm: &[RecipeSequence]) -> BTreeSet<(String, String, String)> {
    let collect = |s: &RecipeSequence, cat: &str| -> Vec<String> {
        let mut v = Vec::new();
        for st in &s.steps {
            for e in &st.entities {
                if e.category == cat {
                    v.push(e.value.clone());
                }
            }
        }
        for e in &s.unattached {
            if e.category == cat {
                v.push(e.value.clone());
            }
        }
        v.sort();
        v.dedup();
        v
    };
    let mut keys = BTreeSet::new();
    for s in syn {
        for a in asm {
            if s.paper_doi != a.paper_doi {
                continue;
            }
            let meth = collect(s, "METH");
            if collect(s, "PREC").is_empty() || meth.is_empty() {
                continue;
            }
            for tm in collect(s, "TM") {
                if collect(a, "AM").contains(&tm) {
                    keys.insert((s.paper_doi.clone(), tm, meth.join(", ")));
                }
            }
        }
    }
    keys
}
