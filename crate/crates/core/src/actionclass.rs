//! Synthesis action classification.
//!
//! A verb lexicon maps lemmas to one of eight action categories, with
//! sentence-level keyword rules that override the default (coating a slurry
//! onto foil is not a shaping step, for instance). Only verbal uses count:
//! participles and gerunds directly after a determiner are read as
//! adjectives or nouns, and base forms only count after `to`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, ParagraphRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Starting,
    Mixing,
    Purification,
    Heating,
    Cooling,
    Shaping,
    Reaction,
    NonAltering,
}

impl ActionCategory {
    pub const ALL: [ActionCategory; 8] = [
        ActionCategory::Starting,
        ActionCategory::Mixing,
        ActionCategory::Purification,
        ActionCategory::Heating,
        ActionCategory::Cooling,
        ActionCategory::Shaping,
        ActionCategory::Reaction,
        ActionCategory::NonAltering,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionCategory::Starting => "starting",
            ActionCategory::Mixing => "mixing",
            ActionCategory::Purification => "purification",
            ActionCategory::Heating => "heating",
            ActionCategory::Cooling => "cooling",
            ActionCategory::Shaping => "shaping",
            ActionCategory::Reaction => "reaction",
            ActionCategory::NonAltering => "non_altering",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for ActionCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let key = if key == "nonaltering" { "non_altering".to_string() } else { key };
        ActionCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown action category `{s}`")))
    }
}

impl fmt::Display for ActionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRule {
    pub triggers: BTreeSet<String>,
    pub category: ActionCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub default: ActionCategory,
    /// Checked in file order; the first rule with a trigger in the sentence wins.
    pub rules: Vec<ContextRule>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLexicon {
    pub entries: BTreeMap<String, LexiconEntry>,
}

const SHIPPED_LEXICON: &str = include_str!("../data/lexicon.tsv");

impl ActionLexicon {
    /// Parses tab-separated `lemma, default_category[, triggers, override]`
    /// rows. Blank lines and `#` comments are skipped. A lemma may appear on
    /// several rows to add rules, provided the defaults agree.
    pub fn parse(contents: &str, source: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, LexiconEntry> = BTreeMap::new();
        for (i, line) in contents.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::parse(source, line_no, msg);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 2 || cols.len() > 4 {
                return Err(err(format!("expected 2 to 4 tab-separated columns, found {}", cols.len())));
            }
            let lemma = cols[0];
            if lemma.is_empty() || lemma != lemma.to_lowercase() {
                return Err(err(format!("lemma `{lemma}` must be non-empty and lowercase")));
            }
            let default: ActionCategory = cols[1].parse().map_err(|e: Error| err(e.to_string()))?;
            let triggers: BTreeSet<String> = cols
                .get(2)
                .map(|t| t.split(',').map(|k| k.trim().to_lowercase()).filter(|k| !k.is_empty()).collect())
                .unwrap_or_default();
            let rule = match (triggers.is_empty(), cols.get(3).filter(|c| !c.is_empty())) {
                (true, None) => None,
                (false, Some(c)) => Some(ContextRule {
                    triggers,
                    category: c.parse().map_err(|e: Error| err(e.to_string()))?,
                }),
                _ => return Err(err("trigger keywords and override category must be given together".into())),
            };
            let entry = entries.entry(lemma.to_string()).or_insert(LexiconEntry {
                default,
                rules: Vec::new(),
            });
            if entry.default != default {
                return Err(err(format!("conflicting default category for `{lemma}`")));
            }
            entry.rules.extend(rule);
        }
        Ok(ActionLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&contents, path)
    }

    /// The lexicon bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_LEXICON, Path::new("lexicon.tsv")).expect("shipped lexicon is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(lemma)
    }

    /// Category of `lemma` given the lowercased tokens of its sentence.
    pub fn categorize(&self, lemma: &str, sentence: &[String]) -> Option<ActionCategory> {
        let entry = self.entries.get(lemma)?;
        let present = |k: &String| sentence.iter().any(|t| t == k || t.strip_suffix('s') == Some(k.as_str()));
        Some(
            entry
                .rules
                .iter()
                .find(|r| r.triggers.iter().any(present))
                .map_or(entry.default, |r| r.category),
        )
    }
}

/// Surface inflection of a verb token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbForm {
    Base,
    ThirdPerson,
    Past,
    Gerund,
}

const IRREGULAR: &[(&str, &str)] = &[
    ("ground", "grind"),
    ("spun", "spin"),
    ("kept", "keep"),
    ("held", "hold"),
    ("left", "leave"),
    ("put", "put"),
    ("cut", "cut"),
    ("cast", "cast"),
    ("spread", "spread"),
    ("froze", "freeze"),
    ("frozen", "freeze"),
    ("shook", "shake"),
    ("shaken", "shake"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("bought", "buy"),
    ("stood", "stand"),
    ("freeze-dried", "freeze-dry"),
];

fn undouble(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    (n >= 3 && b[n - 1] == b[n - 2] && !b"aeiousl".contains(&b[n - 1])).then(|| stem[..n - 1].to_string())
}

fn candidates(word: &str) -> Vec<(String, VerbForm)> {
    let mut out = Vec::new();
    if let Some(&(_, lemma)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        out.push((lemma.to_string(), VerbForm::Past));
    }
    if let Some(stem) = word.strip_suffix("ing") {
        out.push((stem.to_string(), VerbForm::Gerund));
        out.push((format!("{stem}e"), VerbForm::Gerund));
        out.extend(undouble(stem).map(|s| (s, VerbForm::Gerund)));
    }
    if let Some(stem) = word.strip_suffix("ied") {
        out.push((format!("{stem}y"), VerbForm::Past));
    }
    if let Some(stem) = word.strip_suffix("ed") {
        out.push((stem.to_string(), VerbForm::Past));
        out.push((format!("{stem}e"), VerbForm::Past));
        out.extend(undouble(stem).map(|s| (s, VerbForm::Past)));
    }
    if let Some(stem) = word.strip_suffix("ies") {
        out.push((format!("{stem}y"), VerbForm::ThirdPerson));
    }
    if let Some(stem) = word.strip_suffix("es") {
        out.push((stem.to_string(), VerbForm::ThirdPerson));
    }
    if let Some(stem) = word.strip_suffix('s') {
        out.push((stem.to_string(), VerbForm::ThirdPerson));
    }
    out.push((word.to_string(), VerbForm::Base));
    out
}

/// Lexicon-guided lemmatization of a lowercased token: the first inflection
/// candidate found in the lexicon. Hyphenated tokens fall back to their last
/// component (`ball-milled` → `mill`).
pub fn lemmatize(word: &str, lexicon: &ActionLexicon) -> Option<(String, VerbForm)> {
    let found = candidates(word).into_iter().find(|(l, _)| lexicon.contains(l));
    found.or_else(|| {
        let (_, last) = word.rsplit_once('-')?;
        candidates(last).into_iter().find(|(l, _)| lexicon.contains(l))
    })
}

const DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "these", "those", "its", "their", "each"];

fn is_verbal(form: VerbForm, previous: Option<&str>) -> bool {
    match form {
        VerbForm::Past | VerbForm::Gerund => !previous.is_some_and(|p| DETERMINERS.contains(&p)),
        VerbForm::Base | VerbForm::ThirdPerson => previous == Some("to"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMention {
    pub lemma: String,
    pub surface: String,
    pub sentence: usize,
    pub token: usize,
    pub category: ActionCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_doi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
}

/// Action mentions of tokenized sentences, in textual order. Every verbal
/// occurrence of a lexicon lemma yields a mention.
pub fn classify_actions(sentences: &[Vec<String>], lexicon: &ActionLexicon) -> Vec<ActionMention> {
    let mut out = Vec::new();
    for (s, tokens) in sentences.iter().enumerate() {
        let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        for (i, word) in lower.iter().enumerate() {
            let Some((lemma, form)) = lemmatize(word, lexicon) else {
                continue;
            };
            let previous = i.checked_sub(1).map(|j| lower[j].as_str());
            if !is_verbal(form, previous) {
                continue;
            }
            if let Some(category) = lexicon.categorize(&lemma, &lower) {
                out.push(ActionMention {
                    lemma,
                    surface: tokens[i].clone(),
                    sentence: s,
                    token: i,
                    category,
                    paper_doi: None,
                    ordinal: None,
                });
            }
        }
    }
    out
}

pub fn classify_paragraph(paragraph: &ParagraphRecord, lexicon: &ActionLexicon) -> Vec<ActionMention> {
    let mut mentions = classify_actions(&corpus::sentence_words(&paragraph.text), lexicon);
    for m in &mut mentions {
        m.paper_doi = Some(paragraph.paper_doi.clone());
        m.ordinal = Some(paragraph.ordinal);
    }
    mentions
}
