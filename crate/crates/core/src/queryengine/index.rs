use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::parse::{unparse, QueryAst};
use crate::error::{Error, Result};
use crate::normalizer::{fold, normalize_entity, NormalizationLexicon};
use crate::recipegen::{EndToEndRecipe, RecipeKind, RecipeSequence};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordType {
    CathodeSynthesis,
    CellAssembly,
    EndToEnd,
}

impl RecordType {
    pub const ALL: [RecordType; 3] = [RecordType::CathodeSynthesis, RecordType::CellAssembly, RecordType::EndToEnd];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordType::CathodeSynthesis => "cathode-synthesis",
            RecordType::CellAssembly => "cell-assembly",
            RecordType::EndToEnd => "end-to-end",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            RecordType::CathodeSynthesis => "syn",
            RecordType::CellAssembly => "asm",
            RecordType::EndToEnd => "e2e",
        }
    }
}

impl FromStr for RecordType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = fold(s);
        RecordType::ALL
            .into_iter()
            .find(|t| t.as_str() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown record type `{s}`")))
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordBody {
    EndToEnd(Box<EndToEndRecipe>),
    Sequence(RecipeSequence),
}

/// A searchable record and the entity values it exposes, by category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub record_type: RecordType,
    pub paper_doi: String,
    pub fields: BTreeMap<String, BTreeSet<String>>,
    pub body: RecordBody,
}

fn sequence_fields(seq: &RecipeSequence, fields: &mut BTreeMap<String, BTreeSet<String>>) {
    for e in seq.entities() {
        let set = fields.entry(e.category.clone()).or_default();
        set.insert(e.value.clone());
        set.extend(e.bins.iter().cloned());
    }
}

/// Posting key for a query field. METHOD is the long name of METH.
pub fn field_key(field: &str) -> &str {
    if field == "METHOD" {
        "METH"
    } else {
        field
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeIndex {
    pub records: Vec<IndexedRecord>,
    /// field key → folded value → sorted record ids.
    pub postings: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub types: BTreeMap<RecordType, Vec<String>>,
    pub lexicon: NormalizationLexicon,
}

/// One matching record with the values that satisfied each clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryHit {
    pub id: String,
    #[serde(rename = "type")]
    pub record_type: RecordType,
    pub matched: BTreeMap<String, Vec<String>>,
    pub recipe: RecordBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResults {
    pub query: String,
    pub total: usize,
    pub results: Vec<QueryHit>,
}

fn sorted_sequences(seqs: &[RecipeSequence], kind: RecipeKind) -> Vec<&RecipeSequence> {
    let mut v: Vec<&RecipeSequence> = seqs.iter().filter(|s| s.kind == kind).collect();
    v.sort_by(|a, b| (&a.paper_doi, a.ordinal).cmp(&(&b.paper_doi, b.ordinal)));
    v
}

/// Posts every entity value (and trend bin) of every record under its
/// category, plus the record type. Sequences get `syn-`/`asm-` ids in
/// (doi, ordinal) order; end-to-end recipes keep their ids.
pub fn build_index(
    recipes: &[EndToEndRecipe],
    synthesis: &[RecipeSequence],
    assembly: &[RecipeSequence],
    lexicon: &NormalizationLexicon,
) -> RecipeIndex {
    let mut records = Vec::new();
    for (kind, rtype, seqs) in [
        (RecipeKind::Synthesis, RecordType::CathodeSynthesis, synthesis),
        (RecipeKind::Assembly, RecordType::CellAssembly, assembly),
    ] {
        for (i, s) in sorted_sequences(seqs, kind).into_iter().enumerate() {
            let mut fields = BTreeMap::new();
            sequence_fields(s, &mut fields);
            records.push(IndexedRecord {
                id: format!("{}-{:04}", rtype.id_prefix(), i + 1),
                record_type: rtype,
                paper_doi: s.paper_doi.clone(),
                fields,
                body: RecordBody::Sequence(s.clone()),
            });
        }
    }
    for r in recipes {
        let mut fields = BTreeMap::new();
        sequence_fields(&r.synthesis, &mut fields);
        sequence_fields(&r.assembly, &mut fields);
        records.push(IndexedRecord {
            id: r.id.clone(),
            record_type: RecordType::EndToEnd,
            paper_doi: r.paper_doi.clone(),
            fields,
            body: RecordBody::EndToEnd(Box::new(r.clone())),
        });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));

    let mut postings: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    let mut types: BTreeMap<RecordType, Vec<String>> = BTreeMap::new();
    for rec in &records {
        types.entry(rec.record_type).or_default().push(rec.id.clone());
        for (field, values) in &rec.fields {
            let folded: BTreeSet<String> = values.iter().map(|v| fold(v)).collect();
            for v in folded {
                postings.entry(field.clone()).or_default().entry(v).or_default().push(rec.id.clone());
            }
        }
    }
    // Records are visited in id order, so every list is already sorted.
    RecipeIndex { records, postings, types, lexicon: lexicon.clone() }
}

impl RecipeIndex {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexedRecord> {
        self.records.binary_search_by(|r| r.id.as_str().cmp(id)).ok().map(|i| &self.records[i])
    }

    /// Folded canonical form of a query value for `field`.
    pub fn canonical_query_value(&self, field: &str, value: &str) -> String {
        let key = field_key(field);
        fold(&normalize_entity(key, value, &self.lexicon).value)
    }

    pub fn postings_for(&self, field: &str, value: &str) -> &[String] {
        if field == "TYPE" {
            return value
                .parse::<RecordType>()
                .ok()
                .and_then(|t| self.types.get(&t))
                .map_or(&[], Vec::as_slice);
        }
        let v = self.canonical_query_value(field, value);
        self.postings
            .get(field_key(field))
            .and_then(|m| m.get(&v))
            .map_or(&[], Vec::as_slice)
    }

    /// Intersection over clauses of the union over each clause's values,
    /// in ascending id order.
    pub fn execute(&self, ast: &QueryAst) -> QueryResults {
        let mut result: Option<BTreeSet<&str>> = None;
        for clause in &ast.clauses {
            let union: BTreeSet<&str> = clause
                .values
                .iter()
                .flat_map(|v| self.postings_for(&clause.field, v))
                .map(String::as_str)
                .collect();
            result = Some(match result {
                None => union,
                Some(r) => r.intersection(&union).copied().collect(),
            });
        }
        let results: Vec<QueryHit> = result
            .unwrap_or_default()
            .into_iter()
            .filter_map(|id| self.get(id))
            .map(|rec| QueryHit {
                id: rec.id.clone(),
                record_type: rec.record_type,
                matched: self.highlights(ast, rec),
                recipe: rec.body.clone(),
            })
            .collect();
        QueryResults { query: unparse(ast), total: results.len(), results }
    }

    fn highlights(&self, ast: &QueryAst, rec: &IndexedRecord) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for clause in &ast.clauses {
            let entry = out.entry(clause.field.clone()).or_default();
            if clause.field == "TYPE" {
                entry.insert(rec.record_type.as_str().to_string());
                continue;
            }
            let wanted: BTreeSet<String> =
                clause.values.iter().map(|v| self.canonical_query_value(&clause.field, v)).collect();
            if let Some(values) = rec.fields.get(field_key(&clause.field)) {
                entry.extend(values.iter().filter(|v| wanted.contains(&fold(v))).cloned());
            }
        }
        out.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
    }

    /// Queryable fields and their display values, for autocompletion.
    pub fn vocabulary(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for rec in &self.records {
            for (field, values) in &rec.fields {
                out.entry(field.clone()).or_default().extend(values.iter().cloned());
            }
        }
        out.insert("TYPE".into(), RecordType::ALL.iter().map(|t| t.as_str().to_string()).collect());
        out.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
    }

    /// Checks that posted ids exist and posting lists are strictly ascending.
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        if ids.len() != self.records.len() {
            return Err(Error::Validation("duplicate record ids in index".into()));
        }
        let lists = self.postings.values().flat_map(|m| m.values()).chain(self.types.values());
        for list in lists {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation("posting list is not strictly ascending".into()));
            }
            if let Some(missing) = list.iter().find(|id| !ids.contains(id.as_str())) {
                return Err(Error::Validation(format!("posting refers to unknown record `{missing}`")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let index: RecipeIndex = util::read_json(path)?;
        index.validate()?;
        Ok(index)
    }
}
