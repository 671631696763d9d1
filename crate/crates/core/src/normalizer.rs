//! Entity canonicalization and time/temperature normalization.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lexicon category that applies to every entity category.
pub const ANY_CATEGORY: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconTarget {
    pub canonical: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Per-category map from folded surface to canonical form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationLexicon {
    pub entries: BTreeMap<String, BTreeMap<String, LexiconTarget>>,
}

/// Lowercased, whitespace-collapsed lookup key.
pub fn fold(surface: &str) -> String {
    clean(surface).to_lowercase()
}

/// Trims and collapses internal whitespace.
pub fn clean(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ")
}

const SHIPPED_LEXICON: &str = include_str!("../data/normalization_lexicon.tsv");

impl NormalizationLexicon {
    /// Parses `category, surface, canonical[, note]` rows (tab-separated,
    /// `#` comments allowed). Canonical forms must be fixed points.
    pub fn parse(contents: &str, source: &Path) -> Result<Self> {
        let mut lex = NormalizationLexicon::default();
        let mut lines: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (i, line) in contents.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::parse(source, line_no, msg);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(err(format!("expected 3 or 4 tab-separated columns, found {}", cols.len())));
            }
            let category = cols[0].trim();
            let key = fold(cols[1]);
            let canonical = cols[2].trim();
            if category.is_empty() || key.is_empty() || canonical.is_empty() {
                return Err(err("category, surface and canonical must be non-empty".into()));
            }
            if canonical != clean(canonical) {
                return Err(err(format!("canonical form `{canonical}` has irregular whitespace")));
            }
            let target = LexiconTarget {
                canonical: canonical.to_string(),
                note: cols.get(3).map_or(String::new(), |n| n.trim().to_string()),
            };
            let bucket = lex.entries.entry(category.to_string()).or_default();
            if let Some(prev) = bucket.get(&key) {
                if prev.canonical != target.canonical {
                    return Err(err(format!(
                        "`{}` maps to both `{}` and `{}`",
                        cols[1].trim(),
                        prev.canonical,
                        target.canonical
                    )));
                }
                continue;
            }
            bucket.insert(key.clone(), target);
            lines.insert((category.to_string(), key), line_no);
        }
        for ((category, key), line_no) in &lines {
            let canonical = &lex.entries[category][key].canonical;
            let (again, _) = lex.lookup(category, canonical);
            if &again != canonical {
                return Err(Error::parse(
                    source,
                    *line_no,
                    format!("canonical `{canonical}` is not a fixed point (normalizes to `{again}`)"),
                ));
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&contents, path)
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_LEXICON, Path::new("normalization_lexicon.tsv")).expect("shipped lexicon is valid")
    }

    fn lookup(&self, category: &str, surface: &str) -> (String, bool) {
        let key = fold(surface);
        let hit = self
            .entries
            .get(category)
            .and_then(|m| m.get(&key))
            .or_else(|| self.entries.get(ANY_CATEGORY).and_then(|m| m.get(&key)));
        match hit {
            Some(t) => (t.canonical.clone(), true),
            None => (clean(surface), false),
        }
    }

    /// Every `(category, surface key)` pair in the lexicon.
    pub fn surfaces(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .flat_map(|(c, m)| m.keys().map(move |k| (c.as_str(), k.as_str())))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalEntity {
    pub value: String,
    /// False when the surface was not in the lexicon and is only cleaned.
    pub canonical: bool,
}

pub fn normalize_entity(category: &str, surface: &str, lexicon: &NormalizationLexicon) -> CanonicalEntity {
    let (value, canonical) = lexicon.lookup(category, surface);
    CanonicalEntity { value, canonical }
}

/// Picks a canonical form among observed variants: the most frequent, then
/// the lexicographically smallest.
pub fn most_frequent_variant<'a>(variants: &[(&'a str, usize)]) -> Option<&'a str> {
    variants
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(v, _)| *v)
}

pub const OVERNIGHT_SECONDS: f64 = 8.0 * 3600.0;
pub const VAGUE_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeNorm {
    /// Point value, or the midpoint of a range.
    pub seconds: f64,
    pub low_seconds: f64,
    pub high_seconds: f64,
    /// Set by [`bin_times`] over a batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_bin: Option<usize>,
}

const NUMBER: &str = r"\d+(?:\.\d+)?";
const RANGE_SEP: &str = r"\s*(?:-|–|—|~|to)\s*";
const APPROX: &str = r"(?:(?:about|approximately|approx\.?|around|ca\.?|~|for|at|over|up to|nearly)\s*)*";

static TIME_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^{APPROX}(?P<a>{NUMBER}|few|several|a few|an?|one)(?:{RANGE_SEP}(?P<b>{NUMBER}))?\s*(?P<unit>hours?|hrs?|h|minutes?|mins?|min|seconds?|secs?|s|days?|d|weeks?)\.?$"
    ))
    .expect("valid regex")
});

fn time_unit(unit: &str) -> f64 {
    match unit {
        u if u.starts_with('h') => 3600.0,
        u if u.starts_with("min") => 60.0,
        u if u.starts_with('s') => 1.0,
        u if u.starts_with('d') => 86_400.0,
        _ => 604_800.0,
    }
}

fn count_word(word: &str) -> f64 {
    match word {
        "few" | "several" | "a few" => VAGUE_COUNT,
        "a" | "an" | "one" => 1.0,
        n => n.parse().expect("regex guarantees a number"),
    }
}

pub fn normalize_time(surface: &str) -> Result<TimeNorm> {
    let text = fold(surface);
    let unparseable = || Error::InvalidInput(format!("unrecognized duration `{}`", clean(surface)));
    if matches!(text.as_str(), "overnight" | "over night") {
        return Ok(TimeNorm {
            seconds: OVERNIGHT_SECONDS,
            low_seconds: OVERNIGHT_SECONDS,
            high_seconds: OVERNIGHT_SECONDS,
            log_bin: None,
        });
    }
    let caps = TIME_RE.captures(&text).ok_or_else(unparseable)?;
    let scale = time_unit(&caps["unit"]);
    let low = count_word(&caps["a"]) * scale;
    let high = caps.name("b").map_or(low, |b| b.as_str().parse::<f64>().expect("number") * scale);
    if low <= 0.0 || high < low {
        return Err(unparseable());
    }
    Ok(TimeNorm {
        seconds: (low + high) / 2.0,
        low_seconds: low,
        high_seconds: high,
        log_bin: None,
    })
}

pub const TIME_BINS: usize = 10;
/// Decade range of the fixed binning mode: 10^0 s to 10^7 s.
pub const FIXED_LOG_RANGE: (f64, f64) = (0.0, 7.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBinning {
    /// Edges span the batch's own log10 range.
    #[default]
    Batch,
    /// Edges span [`FIXED_LOG_RANGE`]; values outside are clamped.
    Fixed,
}

fn bin_of(x: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        return 0;
    }
    let b = (TIME_BINS as f64 * (x - lo) / (hi - lo) + 1e-9).floor();
    (b.max(0.0) as usize).min(TIME_BINS - 1)
}

/// Ten equal-width log10 bins; the largest value lands in bin 9.
pub fn bin_times(times: &[f64], mode: TimeBinning) -> Result<Vec<usize>> {
    if times.is_empty() {
        return Err(Error::InvalidInput("cannot bin an empty batch of times".into()));
    }
    if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidInput(format!("time {bad} is not a positive number of seconds")));
    }
    let logs: Vec<f64> = times.iter().map(|t| t.log10()).collect();
    let (lo, hi) = match mode {
        TimeBinning::Batch => (
            logs.iter().copied().fold(f64::INFINITY, f64::min),
            logs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        TimeBinning::Fixed => FIXED_LOG_RANGE,
    };
    Ok(logs.iter().map(|&x| bin_of(x, lo, hi)).collect())
}

pub const KELVIN_OFFSET: f64 = 273.15;
pub const ROOM_TEMPERATURE: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TempNorm {
    pub celsius_low: f64,
    pub celsius_high: f64,
    /// Lower edges of the 100-degree bins `[100k, 100(k+1))` touching the range.
    pub interval_marks: Vec<i64>,
}

impl TempNorm {
    pub fn labels(&self) -> Vec<String> {
        self.interval_marks.iter().map(|&m| mark_label(m)).collect()
    }
}

/// `600–700` for the bin starting at 600.
pub fn mark_label(lower: i64) -> String {
    format!("{lower}–{}", lower + 100)
}

pub fn interval_marks(low: f64, high: f64) -> Vec<i64> {
    let first = (low / 100.0).floor() as i64;
    let last = (high / 100.0).floor() as i64;
    (first..=last).map(|k| k * 100).collect()
}

static TEMP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"^{APPROX}(?P<a>-?{NUMBER})(?:\s*(?P<u1>°\s*c|℃|oc|c|k|degrees?\s*c(?:elsius)?|celsius))?(?:{RANGE_SEP}(?P<b>-?{NUMBER}))?\s*(?P<unit>°\s*c|℃|oc|c|k|degrees?\s*c(?:elsius)?|celsius|°)?\.?$"
    ))
    .expect("valid regex")
});

pub fn normalize_temperature(surface: &str) -> Result<TempNorm> {
    let text = fold(surface);
    let unparseable = || Error::InvalidInput(format!("unrecognized temperature `{}`", clean(surface)));
    let (low, high) = if matches!(text.as_str(), "room temperature" | "rt" | "ambient temperature") {
        (ROOM_TEMPERATURE, ROOM_TEMPERATURE)
    } else {
        let caps = TEMP_RE.captures(&text).ok_or_else(unparseable)?;
        let a: f64 = caps["a"].parse().map_err(|_| unparseable())?;
        let b: f64 = caps.name("b").map_or(Ok(a), |b| b.as_str().parse()).map_err(|_| unparseable())?;
        let unit = caps.name("unit").or_else(|| caps.name("u1"));
        let kelvin = unit.is_some_and(|u| u.as_str() == "k");
        let shift = if kelvin { -KELVIN_OFFSET } else { 0.0 };
        (a + shift, b + shift)
    };
    if high < low {
        return Err(unparseable());
    }
    Ok(TempNorm {
        celsius_low: low,
        celsius_high: high,
        interval_marks: interval_marks(low, high),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_examples() {
        let lex = NormalizationLexicon::shipped();
        assert_eq!(normalize_entity("BIND", "polyvinylidene fluoride", &lex).value, "PVDF");
        assert_eq!(normalize_entity("AM", "LiFePO4/Carbon", &lex).value, "LiFePO4/C");
        assert_eq!(normalize_entity("AM", "LiFePO4/C", &lex).value, "LiFePO4/C");
        assert_eq!(normalize_entity("METH", "solid-state", &lex).value, "solid state");
        let unknown = normalize_entity("PREC", "  Mn3O4   nanorods ", &lex);
        assert_eq!(unknown.value, "Mn3O4 nanorods");
        assert!(!unknown.canonical);
    }

    #[test]
    fn lexicon_rejects_conflicts_and_chains() {
        let p = Path::new("n.tsv");
        assert!(NormalizationLexicon::parse("AM\tfoo\tbar\nAM\tFOO\tbaz\n", p).is_err());
        let chain = NormalizationLexicon::parse("AM\ta\tb\nAM\tb\tc\n", p).unwrap_err();
        assert!(chain.to_string().contains("n.tsv:1"), "{chain}");
        assert!(NormalizationLexicon::parse("AM\tonly two\n", p).is_err());
    }

    #[test]
    fn time_examples() {
        assert_eq!(normalize_time("overnight").unwrap().seconds, 28_800.0);
        assert_eq!(normalize_time("10 min").unwrap().seconds, 600.0);
        assert_eq!(normalize_time("several hours").unwrap().seconds, 18_000.0);
        assert_eq!(normalize_time("a few minutes").unwrap().seconds, 300.0);
        let r = normalize_time("2–4 h").unwrap();
        assert_eq!((r.low_seconds, r.seconds, r.high_seconds), (7200.0, 10_800.0, 14_400.0));
        assert_eq!(normalize_time("12h").unwrap().seconds, 43_200.0);
        assert!(normalize_time("until dry").is_err());
    }

    #[test]
    fn temperature_examples() {
        let t = normalize_temperature("273.15 K").unwrap();
        assert_eq!((t.celsius_low, t.interval_marks.clone()), (0.0, vec![0]));
        assert_eq!(normalize_temperature("700 °C").unwrap().interval_marks, vec![700]);
        let r = normalize_temperature("150–220").unwrap();
        assert_eq!((r.celsius_low, r.celsius_high), (150.0, 220.0));
        assert_eq!(r.labels(), ["100–200", "200–300"]);
        assert_eq!(normalize_temperature("600-700 K").unwrap().celsius_low, 600.0 - 273.15);
        assert_eq!(normalize_temperature("80 ℃").unwrap().celsius_high, 80.0);
        assert!(normalize_temperature("hot").is_err());
    }

    #[test]
    fn bin_examples() {
        assert_eq!(bin_times(&[5.0, 5.0, 5.0], TimeBinning::Batch).unwrap(), vec![0, 0, 0]);
        let b = bin_times(&[1.0, 1e9, 10f64.powf(4.5)], TimeBinning::Batch).unwrap();
        assert_eq!(b, vec![0, 9, 5]);
        assert!(bin_times(&[], TimeBinning::Batch).is_err());
        assert!(bin_times(&[0.0], TimeBinning::Batch).is_err());
        assert_eq!(bin_times(&[1e9, 0.5], TimeBinning::Fixed).unwrap(), vec![9, 0]);
    }

    #[test]
    fn most_frequent_variant_breaks_ties_lexicographically() {
        assert_eq!(most_frequent_variant(&[("b", 2), ("a", 2), ("c", 1)]), Some("a"));
        assert_eq!(most_frequent_variant(&[]), None);
    }
}
