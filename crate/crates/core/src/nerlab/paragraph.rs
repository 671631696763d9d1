use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::dataset::AnnotatedSequence;
use super::model::CrfModel;
use super::tags::{EntitySpan, Schema};
use crate::corpus::{self, ParagraphRecord};
use crate::error::{Error, Result};

/// An entity located in a paragraph's `(sentence, token)` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub category: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// Canonical value, filled in by normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Whether `value` came from the lexicon rather than plain cleaning.
    #[serde(default)]
    pub canonical: bool,
    /// Coarse labels for trend analysis (temperature marks, time bins).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<String>,
}

impl EntityMention {
    pub fn from_span(sentence: usize, span: &EntitySpan, tokens: &[String]) -> Self {
        EntityMention {
            category: span.category.clone(),
            sentence,
            start: span.start,
            end: span.end,
            surface: tokens[span.start..span.end].join(" "),
            value: None,
            canonical: false,
            bins: Vec::new(),
        }
    }

    /// Canonical value when known, otherwise the surface.
    pub fn text(&self) -> &str {
        self.value.as_deref().unwrap_or(&self.surface)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedParagraph {
    pub paper_doi: String,
    pub ordinal: usize,
    pub schema: Schema,
    pub sentences: Vec<Vec<String>>,
    pub entities: Vec<EntityMention>,
    /// Sentences whose spans came from gold annotations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_sentences: Vec<usize>,
}

/// Gold annotations keyed by `(paper_doi, ordinal, sentence)`.
#[derive(Debug, Clone, Default)]
pub struct GoldIndex {
    by_key: HashMap<(String, usize, usize), AnnotatedSequence>,
}

impl GoldIndex {
    pub fn new(annotations: &[AnnotatedSequence]) -> Result<Self> {
        let mut by_key = HashMap::new();
        for a in annotations {
            if let (Some(doi), Some(ord), Some(sent)) = (&a.paper_doi, a.ordinal, a.sentence) {
                if by_key.insert((doi.clone(), ord, sent), a.clone()).is_some() {
                    return Err(Error::Validation(format!(
                        "duplicate gold annotation for {doi} paragraph {ord} sentence {sent}"
                    )));
                }
            }
        }
        Ok(GoldIndex { by_key })
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    /// Gold spans for a sentence, if annotated for `schema` with identical tokens.
    pub fn spans(&self, doi: &str, ordinal: usize, sentence: usize, schema: Schema, tokens: &[String]) -> Option<&[EntitySpan]> {
        let a = self.by_key.get(&(doi.to_string(), ordinal, sentence))?;
        (a.schema == schema && a.tokens == tokens).then_some(a.spans.as_slice())
    }
}

/// Tags every sentence of a paragraph. Sentences with a matching gold
/// annotation use the gold spans instead of model output.
pub fn tag_paragraph(model: &CrfModel, paragraph: &ParagraphRecord, gold: &GoldIndex) -> Result<TaggedParagraph> {
    let schema = model
        .schema
        .ok_or_else(|| Error::Validation("paragraph tagging needs a schema-bound model".into()))?;
    let sentences = corpus::sentence_words(&paragraph.text);
    let mut entities = Vec::new();
    let mut gold_sentences = Vec::new();
    for (s, tokens) in sentences.iter().enumerate() {
        let spans = match gold.spans(&paragraph.paper_doi, paragraph.ordinal, s, schema, tokens) {
            Some(spans) => {
                gold_sentences.push(s);
                let mut v = spans.to_vec();
                v.sort_by_key(|sp| sp.start);
                v
            }
            None => model.extract(tokens, None)?,
        };
        entities.extend(spans.iter().map(|sp| EntityMention::from_span(s, sp, tokens)));
    }
    Ok(TaggedParagraph {
        paper_doi: paragraph.paper_doi.clone(),
        ordinal: paragraph.ordinal,
        schema,
        sentences,
        entities,
        gold_sentences,
    })
}
