//! Document model and text preprocessing.
//!
//! Papers and paragraphs are read from line-delimited JSON. Tokens carry
//! character offsets (not byte offsets) into the text they came from.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Minimum paragraph length, in characters, kept for topic modeling.
pub const MIN_PARAGRAPH_CHARS: usize = 200;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub doi: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    /// Search query the paper was retrieved with. Informational only.
    #[serde(default, alias = "metadata", skip_serializing_if = "Option::is_none")]
    pub source_query: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Synthesis,
    Assembly,
    Other,
}

impl SectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Synthesis => "synthesis",
            SectionKind::Assembly => "assembly",
            SectionKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphRecord {
    pub paper_doi: String,
    pub ordinal: usize,
    pub text: String,
    /// Always `text.chars().count()`; recomputed on load.
    #[serde(skip)]
    pub char_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_kind: Option<SectionKind>,
}

impl ParagraphRecord {
    pub fn new(paper_doi: impl Into<String>, ordinal: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        ParagraphRecord {
            paper_doi: paper_doi.into(),
            ordinal,
            char_count: text.chars().count(),
            text,
            topic_id: None,
            section_kind: None,
        }
    }
}

/// Reads `papers.jsonl`. Records are returned in file order.
pub fn load_papers(path: &Path) -> Result<Vec<PaperRecord>> {
    let rows: Vec<(usize, PaperRecord)> = util::read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, paper) in rows {
        if paper.doi.trim().is_empty() {
            return Err(Error::parse(path, line, "empty doi"));
        }
        if !seen.insert(paper.doi.clone()) {
            return Err(Error::parse(path, line, format!("duplicate doi {}", paper.doi)));
        }
        out.push(paper);
    }
    Ok(out)
}

pub fn save_papers(path: &Path, papers: &[PaperRecord]) -> Result<()> {
    util::write_jsonl(path, papers)
}

/// Reads `paragraphs.jsonl`; `(paper_doi, ordinal)` must be unique.
pub fn load_paragraphs(path: &Path) -> Result<Vec<ParagraphRecord>> {
    let rows: Vec<(usize, ParagraphRecord)> = util::read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, mut para) in rows {
        if !seen.insert((para.paper_doi.clone(), para.ordinal)) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate ordinal {} for {}", para.ordinal, para.paper_doi),
            ));
        }
        para.char_count = para.text.chars().count();
        out.push(para);
    }
    Ok(out)
}

pub fn save_paragraphs(path: &Path, paragraphs: &[ParagraphRecord]) -> Result<()> {
    util::write_jsonl(path, paragraphs)
}

/// Keeps paragraphs with at least `min_chars` characters, in order.
pub fn filter_paragraphs(paragraphs: &[ParagraphRecord], min_chars: usize) -> Vec<ParagraphRecord> {
    paragraphs
        .iter()
        .filter(|p| p.char_count >= min_chars)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizationPolicy {
    pub lowercase: bool,
    /// With `lowercase`, leave chemical formulas such as `LiFePO4` untouched.
    pub preserve_formula_case: bool,
}

impl TokenizationPolicy {
    /// Original casing; used for sequence labeling.
    pub const VERBATIM: TokenizationPolicy = TokenizationPolicy {
        lowercase: false,
        preserve_formula_case: true,
    };
    /// Lowercased bag-of-words view; used for TF-IDF and LDA.
    pub const BAG_OF_WORDS: TokenizationPolicy = TokenizationPolicy {
        lowercase: true,
        preserve_formula_case: true,
    };
}

impl Default for TokenizationPolicy {
    fn default() -> Self {
        Self::BAG_OF_WORDS
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Character offset of the first char.
    pub start: usize,
    /// Character offset one past the last char.
    pub end: usize,
}

// Characters that may join two alphanumeric runs into one token:
// "273.15", "LiFePO4/C", "FeC2O4·2H2O", "solid-state", "150–220".
fn is_joiner(c: char) -> bool {
    matches!(c, '.' | '·' | '⋅' | '•' | '/' | '-' | '–' | '—')
}

/// Splits text into runs of letters and digits. Chemical formulas and
/// numbers with inner joiners stay whole; `°C` and `5%` are single tokens.
pub fn tokenize(text: &str, policy: TokenizationPolicy) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        let starts_degree = c == '°' && i + 1 < n && chars[i + 1].is_alphabetic();
        if !c.is_alphanumeric() && !starts_degree {
            i += 1;
            continue;
        }
        let start = i;
        let mut j = i + 1;
        while j < n {
            let cj = chars[j];
            if cj.is_alphanumeric() {
                j += 1;
            } else if is_joiner(cj) && j + 1 < n && chars[j + 1].is_alphanumeric() {
                j += 2;
            } else if cj == '%' && chars[j - 1].is_ascii_digit() {
                j += 1;
                break;
            } else {
                break;
            }
        }
        let raw: String = chars[start..j].iter().collect();
        let text = if policy.lowercase && !(policy.preserve_formula_case && is_chemical_formula(&raw)) {
            raw.to_lowercase()
        } else {
            raw
        };
        tokens.push(Token { text, start, end: j });
        i = j;
    }
    tokens
}

/// Character spans `[start, end)` of sentences. A sentence ends at `.`, `!`
/// or `?` followed by whitespace and then an uppercase letter (or the end).
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < n && chars[j].is_whitespace() {
                j += 1;
            }
            let boundary = j == n || (j > i + 1 && chars[j].is_uppercase());
            if boundary {
                spans.push((start, i + 1));
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < n && chars[start..].iter().any(|c| !c.is_whitespace()) {
        spans.push((start, n));
    }
    spans
}

/// Tokens grouped by sentence. Offsets stay relative to the whole text;
/// sentences without tokens are dropped.
pub fn tokenize_sentences(text: &str, policy: TokenizationPolicy) -> Vec<Vec<Token>> {
    let tokens = tokenize(text, policy);
    let spans = split_sentences(text);
    let mut out: Vec<Vec<Token>> = spans.iter().map(|_| Vec::new()).collect();
    let mut s = 0;
    for tok in tokens {
        while s + 1 < spans.len() && tok.start >= spans[s].1 {
            s += 1;
        }
        if let Some(bucket) = out.get_mut(s) {
            bucket.push(tok);
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Verbatim token strings per sentence: the shared `(sentence, token)`
/// coordinates of entity and action mentions.
pub fn sentence_words(text: &str) -> Vec<Vec<String>> {
    tokenize_sentences(text, TokenizationPolicy::VERBATIM)
        .into_iter()
        .map(|s| s.into_iter().map(|t| t.text).collect())
        .collect()
}

/// Slice of `text` between character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu",
];

fn is_element(sym: &str) -> bool {
    ELEMENTS.contains(&sym)
}

/// Counts element symbols in one joiner-free formula part, or `None` if the
/// part is not a formula. Leading digits (hydrate coefficients) are allowed.
fn formula_part(part: &str) -> Option<(usize, bool)> {
    let chars: Vec<char> = part.chars().collect();
    let mut i = 0;
    let mut has_digit = false;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
        has_digit = true;
    }
    let mut elements = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_uppercase() {
            return None;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        if two.chars().count() == 2 && chars[i + 1].is_ascii_lowercase() && is_element(&two) {
            i += 2;
        } else if is_element(&chars[i].to_string()) {
            i += 1;
        } else {
            return None;
        }
        elements += 1;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            has_digit |= chars[i].is_ascii_digit();
            i += 1;
        }
    }
    (elements > 0).then_some((elements, has_digit))
}

/// Element-symbol/digit runs such as `LiFePO4`, `FeC2O4·2H2O`, `LiFePO4/C`.
/// A lone element without digits (`Ar`, `In`) is not treated as a formula.
pub fn is_chemical_formula(token: &str) -> bool {
    let mut elements = 0;
    let mut has_digit = false;
    for part in token.split(|c: char| is_joiner(c) && c != '.') {
        match formula_part(part) {
            Some((e, d)) => {
                elements += e;
                has_digit |= d;
            }
            None => return false,
        }
    }
    elements >= 2 || (elements == 1 && has_digit)
}

/// Lowercase stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    /// Parses one token per line; `#` starts a comment.
    pub fn parse(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Stoplist { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&s))
    }

    /// The shipped English list (articles, pronouns, prepositions, auxiliaries).
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// The words, sorted.
    pub fn words(&self) -> Vec<String> {
        let mut v: Vec<String> = self.words.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn remove_stopwords(tokens: &[Token], stoplist: &Stoplist) -> Vec<Token> {
    tokens.iter().filter(|t| !stoplist.contains(&t.text)).cloned().collect()
}

/// Token strings for bag-of-words models: bag-of-words tokenization, then
/// stopword removal.
pub fn bag_of_words(text: &str, stoplist: &Stoplist) -> Vec<String> {
    tokenize(text, TokenizationPolicy::BAG_OF_WORDS)
        .into_iter()
        .filter(|t| !stoplist.contains(&t.text))
        .map(|t| t.text)
        .collect()
}

/// Groups paragraphs by paper, ordered by ordinal within each paper.
pub fn paragraphs_by_paper(paragraphs: &[ParagraphRecord]) -> HashMap<&str, Vec<&ParagraphRecord>> {
    let mut map: HashMap<&str, Vec<&ParagraphRecord>> = HashMap::new();
    for p in paragraphs {
        map.entry(p.paper_doi.as_str()).or_default().push(p);
    }
    for list in map.values_mut() {
        list.sort_by_key(|p| p.ordinal);
    }
    map
}
