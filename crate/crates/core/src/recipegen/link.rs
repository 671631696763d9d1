use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::sequence::{RecipeKind, RecipeSequence};

/// A synthesis recipe joined to the assembly recipe that used its product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndToEndRecipe {
    pub id: String,
    pub paper_doi: String,
    pub target_material: String,
    pub method: String,
    pub precursors: Vec<String>,
    pub synthesis: RecipeSequence,
    pub assembly: RecipeSequence,
}

fn sequence_key(s: &RecipeSequence) -> (String, usize, String) {
    // The serialized form breaks ties between records sharing doi and ordinal.
    let repr = serde_json::to_string(s).unwrap_or_default();
    (s.paper_doi.clone(), s.ordinal, repr)
}

fn sorted_of_kind(seqs: &[RecipeSequence], kind: RecipeKind) -> Vec<&RecipeSequence> {
    let mut v: Vec<(_, &RecipeSequence)> = seqs.iter().filter(|s| s.kind == kind).map(|s| (sequence_key(s), s)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v.into_iter().map(|(_, s)| s).collect()
}

/// Joins synthesis and assembly sequences of the same paper whose target
/// and active materials share a canonical value, keeping only synthesis
/// sequences that name at least one precursor and one method. A pair
/// sharing several materials yields one candidate per material; candidates
/// are deduplicated by `(doi, target, method)` and numbered `e2e-0001`...
/// in sorted order, so the output does not depend on input order.
pub fn link_recipes(synthesis: &[RecipeSequence], assembly: &[RecipeSequence]) -> Vec<EndToEndRecipe> {
    let syn = sorted_of_kind(synthesis, RecipeKind::Synthesis);
    let asm = sorted_of_kind(assembly, RecipeKind::Assembly);
    let mut asm_by_doi: BTreeMap<&str, Vec<&RecipeSequence>> = BTreeMap::new();
    for a in asm {
        asm_by_doi.entry(a.paper_doi.as_str()).or_default().push(a);
    }

    let mut seen: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut candidates: Vec<EndToEndRecipe> = Vec::new();
    for s in syn {
        let precursors = s.values("PREC");
        let methods = s.values("METH");
        if precursors.is_empty() || methods.is_empty() {
            continue;
        }
        let targets = s.values("TM");
        let method = methods.into_iter().collect::<Vec<_>>().join(", ");
        for a in asm_by_doi.get(s.paper_doi.as_str()).into_iter().flatten() {
            for tm in targets.intersection(&a.values("AM")) {
                candidates.push(EndToEndRecipe {
                    id: String::new(),
                    paper_doi: s.paper_doi.clone(),
                    target_material: tm.clone(),
                    method: method.clone(),
                    precursors: precursors.iter().cloned().collect(),
                    synthesis: s.clone(),
                    assembly: (*a).clone(),
                });
            }
        }
    }
    // Candidates already come out in (doi, synthesis, assembly) order; a
    // stable sort by the dedupe key keeps the first pair of each group.
    candidates.sort_by(|x, y| {
        (&x.paper_doi, &x.target_material, &x.method).cmp(&(&y.paper_doi, &y.target_material, &y.method))
    });
    let mut out = Vec::new();
    for mut r in candidates {
        if seen.insert((r.paper_doi.clone(), r.target_material.clone(), r.method.clone())) {
            r.id = format!("e2e-{:04}", out.len() + 1);
            out.push(r);
        }
    }
    out
}

/// Re-checks the linking rules on a finished recipe, without reusing the
/// linker's helpers. Returns one message per violated rule.
pub fn audit_recipe(r: &EndToEndRecipe) -> Vec<String> {
    let mut problems = Vec::new();
    let doi = r.paper_doi.as_str();
    if r.synthesis.paper_doi != doi || r.assembly.paper_doi != doi {
        problems.push(format!("rule 1: sequences come from different papers ({} vs {})", r.synthesis.paper_doi, r.assembly.paper_doi));
    }
    if r.synthesis.kind != RecipeKind::Synthesis || r.assembly.kind != RecipeKind::Assembly {
        problems.push("sequence kinds are not synthesis then assembly".to_string());
    }
    let mut in_tm = false;
    let mut in_am = false;
    let mut prec = 0;
    let mut meth = 0;
    for seq in [&r.synthesis, &r.assembly] {
        let mut all = Vec::new();
        for step in &seq.steps {
            all.extend(step.entities.iter());
        }
        all.extend(seq.unattached.iter());
        for e in all {
            match (seq.kind, e.category.as_str()) {
                (RecipeKind::Synthesis, "TM") if e.value == r.target_material => in_tm = true,
                (RecipeKind::Assembly, "AM") if e.value == r.target_material => in_am = true,
                (RecipeKind::Synthesis, "PREC") => prec += 1,
                (RecipeKind::Synthesis, "METH") => meth += 1,
                _ => {}
            }
        }
    }
    if !in_tm || !in_am {
        problems.push(format!("rule 2: `{}` is not both a target and an active material", r.target_material));
    }
    if prec == 0 || meth == 0 || r.precursors.is_empty() || r.method.is_empty() {
        problems.push("rule 3: precursor or method missing".to_string());
    }
    problems
}
