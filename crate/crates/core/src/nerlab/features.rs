//! Hashed sparse token features for the emission model.

use serde::{Deserialize, Serialize};

use crate::corpus::is_chemical_formula;
use crate::util::fnv1a;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Salt mixed into every feature hash.
    pub salt: u64,
    /// Neighbor window on each side.
    pub window: usize,
    /// Longest prefix/suffix length.
    pub affix_len: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            salt: 0x7462_725f_6372_6621,
            window: 2,
            affix_len: 3,
        }
    }
}

const TEMP_UNITS: &[&str] = &["°c", "℃", "k", "c", "°"];
const TIME_UNITS: &[&str] = &[
    "h", "hr", "hrs", "hour", "hours", "min", "mins", "minute", "minutes", "s", "sec", "second", "seconds", "day",
    "days", "overnight", "week", "weeks",
];
const ATMOSPHERES: &[&str] = &["ar", "argon", "n2", "nitrogen", "air", "h2", "o2", "oxygen", "vacuum", "ar/h2"];
const SOLVENTS: &[&str] = &[
    "water", "ethanol", "methanol", "acetone", "nmp", "isopropanol", "dmf", "deionized", "distilled", "alcohol",
];
const AMOUNT_UNITS: &[&str] = &["g", "mg", "kg", "mol", "mmol", "ml", "l", "wt%", "wt", "m", "mm", "μm", "um", "nm"];

/// Collapsed character-class pattern, e.g. `LiFePO4` → `XxXxXd`.
pub fn shape(token: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for ch in token.chars() {
        let class = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_ascii_digit() {
            'd'
        } else {
            ch
        };
        if last != Some(class) {
            out.push(class);
            last = Some(class);
        }
    }
    out
}

fn is_number(token: &str) -> bool {
    let t = token.trim_end_matches('%');
    !t.is_empty()
        && t.chars().any(|c| c.is_ascii_digit())
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-' | '–' | '/'))
}

fn neighbor(tokens: &[String], i: usize, offset: isize) -> String {
    let j = i as isize + offset;
    if j < 0 {
        "<s>".into()
    } else if j as usize >= tokens.len() {
        "</s>".into()
    } else {
        tokens[j as usize].to_lowercase()
    }
}

/// Feature strings for token `i`.
pub fn feature_strings(tokens: &[String], i: usize, config: &FeatureConfig) -> Vec<String> {
    let tok = &tokens[i];
    let lower = tok.to_lowercase();
    let mut f = vec![
        "bias".to_string(),
        format!("w={tok}"),
        format!("lw={lower}"),
        format!("shape={}", shape(tok)),
    ];
    if is_chemical_formula(tok) {
        f.push("formula".into());
    }
    if is_number(tok) {
        f.push("number".into());
    }
    if tok.ends_with('%') {
        f.push("percent".into());
    }
    if tok.chars().next().is_some_and(char::is_uppercase) {
        f.push("init_cap".into());
    }
    let chars: Vec<char> = lower.chars().collect();
    for n in 1..=config.affix_len.min(chars.len()) {
        f.push(format!("p{n}={}", chars[..n].iter().collect::<String>()));
        f.push(format!("s{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
    }
    for (name, list) in [
        ("temp_unit", TEMP_UNITS),
        ("time_unit", TIME_UNITS),
        ("atmosphere", ATMOSPHERES),
        ("solvent", SOLVENTS),
        ("amount_unit", AMOUNT_UNITS),
    ] {
        if list.contains(&lower.as_str()) {
            f.push(format!("lex={name}"));
        }
    }
    for d in 1..=config.window as isize {
        f.push(format!("w-{d}={}", neighbor(tokens, i, -d)));
        f.push(format!("w+{d}={}", neighbor(tokens, i, d)));
    }
    f
}

/// Hashed feature keys per token, sorted and deduplicated.
pub fn extract(tokens: &[String], config: &FeatureConfig) -> Vec<Vec<u64>> {
    (0..tokens.len())
        .map(|i| {
            let mut keys: Vec<u64> = feature_strings(tokens, i, config)
                .iter()
                .map(|s| fnv1a(config.salt, s.as_bytes()))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            keys
        })
        .collect()
}
