//! Recipe-sequence fixtures, a linear-scan query oracle and a query suite.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use t2br_core::actionclass::ActionCategory;
use t2br_core::normalizer::{fold, normalize_entity, NormalizationLexicon};
use t2br_core::queryengine::{build_index, unparse, FieldClause, QueryAst, RecipeIndex, RecordBody};
use t2br_core::recipegen::{link_recipes, RecipeKind, RecipeSequence, RecipeStep, StepEntity};

pub fn entity(category: &str, value: &str) -> StepEntity {
    StepEntity { category: category.into(), value: value.into(), bins: Vec::new() }
}

pub fn seq(doi: &str, ordinal: usize, kind: RecipeKind, entities: Vec<StepEntity>) -> RecipeSequence {
    RecipeSequence {
        paper_doi: doi.into(),
        ordinal,
        kind,
        steps: vec![RecipeStep { action: ActionCategory::Mixing, lemma: "mix".into(), sentence: 0, token: 0, entities }],
        unattached: Vec::new(),
    }
}

pub const PRECS: [&str; 5] = ["sucrose", "LiOH", "Li2CO3", "FePO4", "citric acid"];
pub const METHS: [&str; 3] = ["solid state", "sol-gel", "hydrothermal"];
pub const TMS: [&str; 2] = ["LiFePO4", "LiFePO4/C"];
pub const BINDS: [&str; 2] = ["PVDF", "CMC"];

pub fn corpus(seed: u64) -> (Vec<RecipeSequence>, Vec<RecipeSequence>) {
    let mut rng = super::rng(seed);
    let pick = |rng: &mut ChaCha8Rng, xs: &[&str]| -> Vec<String> {
        xs.iter().filter(|_| rng.random_bool(0.4)).map(|s| s.to_string()).collect()
    };
    let mut syn = Vec::new();
    let mut asm = Vec::new();
    for p in 0..10 {
        let doi = format!("10.9/p{p}");
        let mut e = Vec::new();
        e.extend(pick(&mut rng, &PRECS).iter().map(|v| entity("PREC", v)));
        e.extend(pick(&mut rng, &METHS).iter().map(|v| entity("METH", v)));
        e.extend(pick(&mut rng, &TMS).iter().map(|v| entity("TM", v)));
        syn.push(seq(&doi, 0, RecipeKind::Synthesis, e));
        let mut a: Vec<StepEntity> = pick(&mut rng, &TMS).iter().map(|v| entity("AM", v)).collect();
        a.extend(pick(&mut rng, &BINDS).iter().map(|v| entity("BIND", v)));
        asm.push(seq(&doi, 1, RecipeKind::Assembly, a));
    }
    (syn, asm)
}

pub fn fixture_index(seed: u64) -> RecipeIndex {
    let (syn, asm) = corpus(seed);
    let recipes = link_recipes(&syn, &asm);
    build_index(&recipes, &syn, &asm, &NormalizationLexicon::shipped())
}

/// Every (category, value) a record exposes: entity values plus their bin labels.
pub fn body_values(body: &RecordBody) -> Vec<(String, String)> {
    let seqs: Vec<&RecipeSequence> = match body {
        RecordBody::EndToEnd(r) => vec![&r.synthesis, &r.assembly],
        RecordBody::Sequence(s) => vec![s],
    };
    let mut out = Vec::new();
    for s in seqs {
        let entities = s.steps.iter().flat_map(|st| &st.entities).chain(&s.unattached);
        for e in entities {
            out.push((e.category.clone(), e.value.clone()));
            out.extend(e.bins.iter().map(|b| (e.category.clone(), b.clone())));
        }
    }
    out
}

/// Evaluates a query by scanning every record body.
pub fn linear_scan(index: &RecipeIndex, ast: &QueryAst, lex: &NormalizationLexicon) -> Vec<String> {
    let mut hits = Vec::new();
    for rec in &index.records {
        let values = body_values(&rec.body);
        let ok = ast.clauses.iter().all(|c| {
            c.values.iter().any(|q| {
                if c.field == "TYPE" {
                    return fold(q) == rec.record_type.as_str();
                }
                let cat = if c.field == "METHOD" { "METH" } else { c.field.as_str() };
                let want = fold(&normalize_entity(cat, q, lex).value);
                values.iter().any(|(vc, vv)| vc == cat && fold(vv) == want)
            })
        });
        if ok {
            hits.push(rec.id.clone());
        }
    }
    hits.sort();
    hits
}

pub fn random_ast(rng: &mut ChaCha8Rng) -> QueryAst {
    let pools: [(&str, &[&str]); 6] = [
        ("PREC", &PRECS),
        ("METHOD", &["solid state", "solid-state", "sol gel", "hydrothermal", "microwave"]),
        ("TM", &TMS),
        ("AM", &["LiFePO4/C", "LFP", "carbon-coated LiFePO4"]),
        ("BIND", &["PVDF", "polyvinylidene fluoride", "CMC"]),
        ("TYPE", &["end-to-end", "cathode-synthesis", "cell-assembly"]),
    ];
    let n = rng.random_range(1..4);
    let clauses = (0..n)
        .map(|_| {
            let (field, pool) = pools[rng.random_range(0..pools.len())];
            let k = rng.random_range(1..3);
            let values = (0..k).map(|_| pool[rng.random_range(0..pool.len())].to_string()).collect();
            FieldClause { field: field.into(), values }
        })
        .collect();
    QueryAst { clauses }
}

pub fn query_suite() -> Vec<String> {
    let mut out = vec![
        "((‘sucrose’). PREC.) AND ((‘solid state’). METHOD) AND ((‘end-to-end’). TYPE)".to_string(),
        "((“LiOH” OR “Li2CO3”). prec)".to_string(),
        "  (( 'a b'   OR \"c'd\" ) . TEMP . )and(('x').atm)".to_string(),
        "((\"it’s\"). SOLV)".to_string(),
        "(('600–700'). TEMP)".to_string(),
    ];
    let mut rng = super::rng(50);
    while out.len() < 50 {
        out.push(unparse(&random_ast(&mut rng)).replace('\'', if out.len() % 2 == 0 { "'" } else { "\"" }));
    }
    out
}
