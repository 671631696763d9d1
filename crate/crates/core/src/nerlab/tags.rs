//! Entity schemas, IOBES tags and the transition mask.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SYNTHESIS_CATEGORIES: [&str; 15] = [
    "PREC", "TEMP", "TM", "TIME", "AMO", "RAT", "ATM", "COMP", "METH", "SOLV", "WS", "SPE", "SOL", "COAT", "PH",
];

pub const ASSEMBLY_CATEGORIES: [&str; 15] = [
    "AMO", "CS", "AM", "BIND", "CA", "ANO", "SOLV", "SALT", "CC", "TEMP", "TIME", "COMP", "SIZE", "SEPA", "PRES",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Synthesis,
    Assembly,
}

impl Schema {
    pub fn categories(self) -> &'static [&'static str] {
        match self {
            Schema::Synthesis => &SYNTHESIS_CATEGORIES,
            Schema::Assembly => &ASSEMBLY_CATEGORIES,
        }
    }

    pub fn tagset(self) -> TagSet {
        TagSet::new(self.categories().iter().map(|c| c.to_string()).collect())
    }

    pub fn name(self) -> &'static str {
        match self {
            Schema::Synthesis => "synthesis",
            Schema::Assembly => "assembly",
        }
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "synthesis" => Ok(Schema::Synthesis),
            "assembly" => Ok(Schema::Assembly),
            other => Err(Error::InvalidInput(format!("unknown schema `{other}`"))),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One IOBES tag; the payload is a category index into the owning [`TagSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(usize),
    I(usize),
    E(usize),
    S(usize),
}

/// `O` followed by `B, I, E, S` for each category in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    categories: Vec<String>,
}

impl TagSet {
    pub fn new(categories: Vec<String>) -> Self {
        TagSet { categories }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        4 * self.categories.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn category_index(&self, code: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == code)
    }

    pub fn index(&self, tag: Tag) -> usize {
        match tag {
            Tag::O => 0,
            Tag::B(c) => 1 + 4 * c,
            Tag::I(c) => 2 + 4 * c,
            Tag::E(c) => 3 + 4 * c,
            Tag::S(c) => 4 + 4 * c,
        }
    }

    pub fn tag(&self, index: usize) -> Tag {
        if index == 0 {
            return Tag::O;
        }
        let c = (index - 1) / 4;
        match (index - 1) % 4 {
            0 => Tag::B(c),
            1 => Tag::I(c),
            2 => Tag::E(c),
            _ => Tag::S(c),
        }
    }

    pub fn name(&self, index: usize) -> String {
        match self.tag(index) {
            Tag::O => "O".to_string(),
            Tag::B(c) => format!("B-{}", self.categories[c]),
            Tag::I(c) => format!("I-{}", self.categories[c]),
            Tag::E(c) => format!("E-{}", self.categories[c]),
            Tag::S(c) => format!("S-{}", self.categories[c]),
        }
    }

    pub fn parse(&self, name: &str) -> Result<usize> {
        if name == "O" {
            return Ok(0);
        }
        let unknown = || Error::InvalidInput(format!("unknown tag `{name}`"));
        let (prefix, code) = name.split_once('-').ok_or_else(unknown)?;
        let c = self.category_index(code).ok_or_else(unknown)?;
        let tag = match prefix {
            "B" => Tag::B(c),
            "I" => Tag::I(c),
            "E" => Tag::E(c),
            "S" => Tag::S(c),
            _ => return Err(unknown()),
        };
        Ok(self.index(tag))
    }
}

/// Allowed IOBES transitions, start tags and end tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMask {
    pub allowed: Vec<Vec<bool>>,
    pub allowed_start: Vec<bool>,
    pub allowed_end: Vec<bool>,
}

impl TransitionMask {
    pub fn iobes(tagset: &TagSet) -> Self {
        let n = tagset.len();
        let mut allowed = vec![vec![false; n]; n];
        for (from, row) in allowed.iter_mut().enumerate() {
            for (to, cell) in row.iter_mut().enumerate() {
                *cell = match (tagset.tag(from), tagset.tag(to)) {
                    (Tag::B(a) | Tag::I(a), Tag::I(b) | Tag::E(b)) => a == b,
                    (Tag::B(_) | Tag::I(_), _) => false,
                    (_, Tag::O | Tag::B(_) | Tag::S(_)) => true,
                    _ => false,
                };
            }
        }
        let allowed_start = (0..n)
            .map(|t| matches!(tagset.tag(t), Tag::O | Tag::B(_) | Tag::S(_)))
            .collect();
        let allowed_end = (0..n)
            .map(|t| matches!(tagset.tag(t), Tag::O | Tag::E(_) | Tag::S(_)))
            .collect();
        TransitionMask {
            allowed,
            allowed_start,
            allowed_end,
        }
    }

    pub fn n_tags(&self) -> usize {
        self.allowed_start.len()
    }

    /// Position of the first violation, if any (`len` for a bad final tag).
    pub fn first_violation(&self, tags: &[usize]) -> Option<usize> {
        let first = *tags.first()?;
        if !self.allowed_start[first] {
            return Some(0);
        }
        for i in 1..tags.len() {
            if !self.allowed[tags[i - 1]][tags[i]] {
                return Some(i);
            }
        }
        if !self.allowed_end[tags[tags.len() - 1]] {
            return Some(tags.len());
        }
        None
    }

    pub fn is_valid(&self, tags: &[usize]) -> bool {
        self.first_violation(tags).is_none()
    }
}

/// Entity span over token positions `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub category: String,
    #[serde(alias = "token_start")]
    pub start: usize,
    #[serde(alias = "token_end")]
    pub end: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub surface: String,
}

impl EntitySpan {
    pub fn new(category: impl Into<String>, start: usize, end: usize) -> Self {
        EntitySpan {
            category: category.into(),
            start,
            end,
            surface: String::new(),
        }
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Checks bounds, categories and non-overlap; returns the spans sorted by start.
pub fn validate_spans(n_tokens: usize, spans: &[EntitySpan], tagset: &TagSet) -> Result<Vec<EntitySpan>> {
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| (s.start, s.end));
    for s in &sorted {
        if tagset.category_index(&s.category).is_none() {
            return Err(Error::InvalidInput(format!("unknown category `{}`", s.category)));
        }
        if s.start >= s.end || s.end > n_tokens {
            return Err(Error::InvalidInput(format!(
                "span {}..{} out of bounds for {n_tokens} tokens",
                s.start, s.end
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[0].overlaps(&w[1]) {
            return Err(Error::InvalidInput(format!(
                "overlapping spans {}..{} and {}..{}",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    Ok(sorted)
}

pub fn encode_spans(n_tokens: usize, spans: &[EntitySpan], tagset: &TagSet) -> Result<Vec<usize>> {
    let spans = validate_spans(n_tokens, spans, tagset)?;
    let mut tags = vec![0; n_tokens];
    for s in spans {
        let c = tagset.category_index(&s.category).expect("validated");
        if s.end - s.start == 1 {
            tags[s.start] = tagset.index(Tag::S(c));
        } else {
            tags[s.start] = tagset.index(Tag::B(c));
            for t in &mut tags[s.start + 1..s.end - 1] {
                *t = tagset.index(Tag::I(c));
            }
            tags[s.end - 1] = tagset.index(Tag::E(c));
        }
    }
    Ok(tags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Invalid transitions are an error.
    Strict,
    /// Invalid sequences are repaired: a stray `I` opens an entity like `B`,
    /// a stray `E` is read as `S`, and an unterminated entity is closed
    /// where the next one starts.
    Tolerant,
}

pub fn decode_tags(tags: &[usize], tagset: &TagSet, mode: DecodeMode) -> Result<Vec<EntitySpan>> {
    if let Some(&bad) = tags.iter().find(|&&t| t >= tagset.len()) {
        return Err(Error::InvalidInput(format!("tag index {bad} out of range")));
    }
    let mut spans = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    let mut repaired: Option<usize> = None;
    let close = |open: &mut Option<(usize, usize)>, end: usize, spans: &mut Vec<EntitySpan>| {
        if let Some((c, start)) = open.take() {
            spans.push(EntitySpan::new(tagset.categories()[c].clone(), start, end));
        }
    };
    for (i, &t) in tags.iter().enumerate() {
        match tagset.tag(t) {
            Tag::O => {
                if open.is_some() {
                    repaired.get_or_insert(i);
                    close(&mut open, i, &mut spans);
                }
            }
            Tag::B(c) => {
                if open.is_some() {
                    repaired.get_or_insert(i);
                    close(&mut open, i, &mut spans);
                }
                open = Some((c, i));
            }
            Tag::I(c) => match open {
                Some((oc, _)) if oc == c => {}
                _ => {
                    repaired.get_or_insert(i);
                    close(&mut open, i, &mut spans);
                    open = Some((c, i));
                }
            },
            Tag::E(c) => match open {
                Some((oc, _)) if oc == c => close(&mut open, i + 1, &mut spans),
                _ => {
                    repaired.get_or_insert(i);
                    close(&mut open, i, &mut spans);
                    open = Some((c, i));
                    close(&mut open, i + 1, &mut spans);
                }
            },
            Tag::S(c) => {
                if open.is_some() {
                    repaired.get_or_insert(i);
                    close(&mut open, i, &mut spans);
                }
                open = Some((c, i));
                close(&mut open, i + 1, &mut spans);
            }
        }
    }
    if open.is_some() {
        repaired.get_or_insert(tags.len());
        close(&mut open, tags.len(), &mut spans);
    }
    match (mode, repaired) {
        (DecodeMode::Strict, Some(pos)) => Err(Error::InvalidInput(format!("invalid IOBES transition at position {pos}"))),
        _ => Ok(spans),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cat() -> TagSet {
        TagSet::new(vec!["AM".into(), "PREC".into()])
    }

    fn names(ts: &TagSet, tags: &[usize]) -> Vec<String> {
        tags.iter().map(|&t| ts.name(t)).collect()
    }

    #[test]
    fn schemas_have_fifteen_categories() {
        for schema in [Schema::Synthesis, Schema::Assembly] {
            assert_eq!(schema.categories().len(), 15);
            assert_eq!(schema.tagset().len(), 61);
        }
        assert!("bogus".parse::<Schema>().is_err());
    }

    #[test]
    fn tag_index_round_trip() {
        let ts = two_cat();
        assert_eq!(ts.len(), 9);
        for i in 0..ts.len() {
            assert_eq!(ts.index(ts.tag(i)), i);
            assert_eq!(ts.parse(&ts.name(i)).unwrap(), i);
        }
        assert!(ts.parse("B-XX").is_err());
    }

    #[test]
    fn mask_rules() {
        let ts = two_cat();
        let m = TransitionMask::iobes(&ts);
        let ix = |n: &str| ts.parse(n).unwrap();
        assert!(!m.allowed_start[ix("I-AM")]);
        assert!(!m.allowed_start[ix("E-AM")]);
        assert!(!m.allowed[ix("O")][ix("I-AM")]);
        assert!(m.allowed[ix("B-AM")][ix("I-AM")]);
        assert!(m.allowed[ix("B-AM")][ix("E-AM")]);
        assert!(!m.allowed[ix("B-AM")][ix("I-PREC")]);
        assert!(!m.allowed[ix("I-AM")][ix("O")]);
        assert!(m.allowed[ix("E-AM")][ix("B-PREC")]);
        assert!(m.allowed[ix("S-AM")][ix("S-PREC")]);
        assert!(!m.allowed_end[ix("B-AM")]);
        assert!(m.allowed_end[ix("S-PREC")]);
    }

    #[test]
    fn encode_examples() {
        let ts = Schema::Synthesis.tagset();
        let ts_a = Schema::Assembly.tagset();
        let tags = encode_spans(3, &[EntitySpan::new("AM", 0, 1)], &ts_a).unwrap();
        assert_eq!(names(&ts_a, &tags), ["S-AM", "O", "O"]);
        let tags = encode_spans(5, &[EntitySpan::new("PREC", 1, 4)], &ts).unwrap();
        assert_eq!(names(&ts, &tags), ["O", "B-PREC", "I-PREC", "E-PREC", "O"]);
        assert!(encode_spans(4, &[], &ts).unwrap().iter().all(|&t| t == 0));
    }

    #[test]
    fn encode_rejects_bad_spans() {
        let ts = two_cat();
        let overlapping = [EntitySpan::new("AM", 0, 2), EntitySpan::new("PREC", 1, 3)];
        assert!(encode_spans(4, &overlapping, &ts).is_err());
        assert!(encode_spans(2, &[EntitySpan::new("AM", 1, 3)], &ts).is_err());
        assert!(encode_spans(2, &[EntitySpan::new("ZZ", 0, 1)], &ts).is_err());
    }

    #[test]
    fn decode_examples() {
        let ts = Schema::Assembly.tagset();
        let t = |n: &str| ts.parse(n).unwrap();
        assert_eq!(
            decode_tags(&[t("S-AM"), 0, 0], &ts, DecodeMode::Strict).unwrap(),
            vec![EntitySpan::new("AM", 0, 1)]
        );
        let ts = Schema::Synthesis.tagset();
        let t = |n: &str| ts.parse(n).unwrap();
        assert_eq!(
            decode_tags(&[t("B-PREC"), t("E-PREC")], &ts, DecodeMode::Strict).unwrap(),
            vec![EntitySpan::new("PREC", 0, 2)]
        );
    }

    #[test]
    fn tolerant_repairs_and_strict_errors() {
        let ts = two_cat();
        let t = |n: &str| ts.parse(n).unwrap();
        let bad = [t("I-AM"), t("E-AM"), 0, t("E-PREC"), t("B-AM")];
        assert!(decode_tags(&bad, &ts, DecodeMode::Strict).is_err());
        let spans = decode_tags(&bad, &ts, DecodeMode::Tolerant).unwrap();
        assert_eq!(
            spans,
            vec![
                EntitySpan::new("AM", 0, 2),
                EntitySpan::new("PREC", 3, 4),
                EntitySpan::new("AM", 4, 5)
            ]
        );
    }
}
