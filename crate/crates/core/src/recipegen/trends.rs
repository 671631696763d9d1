use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::sequence::{RecipeKind, RecipeSequence};
use crate::error::{Error, Result};

/// Which entity values form one axis of a trend matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendAxis {
    pub kind: RecipeKind,
    pub category: String,
}

impl TrendAxis {
    pub fn new(kind: RecipeKind, category: impl Into<String>) -> Self {
        TrendAxis { kind, category: category.into() }
    }

    /// Looks the category up in the synthesis schema first, then assembly.
    pub fn for_category(category: &str) -> Result<Self> {
        [RecipeKind::Synthesis, RecipeKind::Assembly]
            .into_iter()
            .find(|k| k.categories().contains(&category))
            .map(|k| TrendAxis::new(k, category))
            .ok_or_else(|| Error::InvalidInput(format!("unknown entity category `{category}`")))
    }

    fn validate(&self) -> Result<()> {
        if self.kind.categories().contains(&self.category.as_str()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("unknown {} category `{}`", self.kind, self.category)))
        }
    }

    fn values_by_paper(&self, seqs: &[RecipeSequence]) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for s in seqs.iter().filter(|s| s.kind == self.kind) {
            let set = out.entry(s.paper_doi.clone()).or_default();
            for e in s.entities().filter(|e| e.category == self.category) {
                set.extend(e.trend_values().into_iter().map(str::to_string));
            }
        }
        out
    }
}

/// Distinct-paper co-occurrence counts between two entity categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendMatrix {
    pub row: TrendAxis,
    pub col: TrendAxis,
    pub row_values: Vec<String>,
    pub col_values: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub normalized: Vec<Vec<f64>>,
}

fn order_by_marginal(marginals: BTreeMap<String, u64>) -> Vec<String> {
    let mut v: Vec<(String, u64)> = marginals.into_iter().filter(|(_, n)| *n > 0).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}

pub fn trend_matrix(seqs: &[RecipeSequence], row: TrendAxis, col: TrendAxis) -> Result<TrendMatrix> {
    row.validate()?;
    col.validate()?;
    let rows_by_paper = row.values_by_paper(seqs);
    let cols_by_paper = col.values_by_paper(seqs);
    let mut cells: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (doi, rs) in &rows_by_paper {
        let Some(cs) = cols_by_paper.get(doi) else { continue };
        for r in rs {
            for c in cs {
                *cells.entry((r.clone(), c.clone())).or_default() += 1;
            }
        }
    }
    let mut row_marg: BTreeMap<String, u64> = BTreeMap::new();
    let mut col_marg: BTreeMap<String, u64> = BTreeMap::new();
    for ((r, c), n) in &cells {
        *row_marg.entry(r.clone()).or_default() += n;
        *col_marg.entry(c.clone()).or_default() += n;
    }
    let row_values = order_by_marginal(row_marg);
    let col_values = order_by_marginal(col_marg);
    let counts: Vec<Vec<u64>> = row_values
        .iter()
        .map(|r| col_values.iter().map(|c| cells.get(&(r.clone(), c.clone())).copied().unwrap_or(0)).collect())
        .collect();
    let max = counts.iter().flatten().copied().max().unwrap_or(0);
    let normalized = counts
        .iter()
        .map(|row| row.iter().map(|&n| if max == 0 { 0.0 } else { n as f64 / max as f64 }).collect())
        .collect();
    Ok(TrendMatrix { row, col, row_values, col_values, counts, normalized })
}

impl TrendMatrix {
    pub fn max_count(&self) -> u64 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Long-format CSV with every cell, zeros included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_value,col_value,count,normalized\n");
        for (i, r) in self.row_values.iter().enumerate() {
            for (j, c) in self.col_values.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", csv_field(r), csv_field(c), self.counts[i][j], self.normalized[i][j]);
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
