use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse row with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from unsorted pairs; duplicate indices are summed and zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *map.entry(i).or_insert(0.0) += v;
        }
        SparseVector {
            entries: map.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_pairs(values.iter().copied().enumerate())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }
}

/// Row-major sparse design matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub rows: Vec<SparseVector>,
    pub n_cols: usize,
}

impl DesignMatrix {
    pub fn new(rows: Vec<SparseVector>, n_cols: usize) -> Result<Self> {
        if let Some(bad) = rows.iter().filter_map(SparseVector::max_index).find(|&i| i >= n_cols) {
            return Err(Error::Dimension(format!("column {bad} out of range for {n_cols} columns")));
        }
        Ok(DesignMatrix { rows, n_cols })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("ragged dense rows".into()));
        }
        Self::new(rows.iter().map(|r| SparseVector::from_dense(r)).collect(), n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn select(&self, indices: &[usize]) -> DesignMatrix {
        DesignMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }
}

/// Smoothed TF-IDF with L2-normalized rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Term to column index; indices follow lexicographic term order.
    pub vocabulary: BTreeMap<String, usize>,
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
    pub idf: Vec<f64>,
}

pub fn fit_tfidf(documents: &[Vec<String>]) -> Result<TfidfModel> {
    if documents.is_empty() {
        return Err(Error::InvalidInput("cannot fit TF-IDF on an empty corpus".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in documents {
        let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n_docs = documents.len();
    let mut vocabulary = BTreeMap::new();
    let mut doc_freq = Vec::with_capacity(df.len());
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.into_iter().enumerate() {
        vocabulary.insert(term.to_string(), i);
        doc_freq.push(count);
        idf.push(((1 + n_docs) as f64 / (1 + count) as f64).ln() + 1.0);
    }
    Ok(TfidfModel {
        vocabulary,
        doc_freq,
        n_docs,
        idf,
    })
}

impl TfidfModel {
    pub fn n_features(&self) -> usize {
        self.vocabulary.len()
    }

    /// Raw counts times idf, then L2-normalized. Unknown terms are ignored and
    /// an all-unknown document maps to the zero vector.
    pub fn transform(&self, document: &[String]) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in document {
            if let Some(&i) = self.vocabulary.get(term) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, tf)| (i, tf * self.idf[i])).collect();
        let norm = entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }

    pub fn transform_all(&self, documents: &[Vec<String>]) -> DesignMatrix {
        DesignMatrix {
            rows: documents.iter().map(|d| self.transform(d)).collect(),
            n_cols: self.n_features(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(fit_tfidf(&[]).is_err());
    }

    #[test]
    fn idf_closed_forms() {
        let m = fit_tfidf(&docs(&["a b", "a", "a"])).unwrap();
        let a = m.vocabulary["a"];
        let b = m.vocabulary["b"];
        assert_eq!(m.idf[a], 1.0);
        assert!((m.idf[b] - 1.693_147_180_559_945_3).abs() < 1e-15);
    }

    #[test]
    fn vocabulary_indices_are_dense() {
        let m = fit_tfidf(&docs(&["z y", "x y w"])).unwrap();
        let mut idx: Vec<usize> = m.vocabulary.values().copied().collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..m.n_features()).collect::<Vec<_>>());
    }

    #[test]
    fn transform_edge_cases() {
        let m = fit_tfidf(&docs(&["a b", "b c"])).unwrap();
        assert!(m.transform(&docs(&["q r"])[0]).is_empty());
        let v = m.transform(&docs(&["a a a"])[0]);
        assert_eq!(v.entries, vec![(m.vocabulary["a"], 1.0)]);
    }

    // Frozen from a dense brute-force computation (ln((1+N)/(1+df))+1, tf*idf,
    // L2 row norm) over the same four documents, columns in term order.
    #[test]
    fn mini_corpus_matches_oracle_table() {
        let corpus = docs(&[
            "lifepo4 cathode carbon coating",
            "cathode slurry coating coating",
            "cathode cost",
            "lifepo4 carbon sucrose",
        ]);
        let m = fit_tfidf(&corpus).unwrap();
        let terms: Vec<&str> = m.vocabulary.keys().map(String::as_str).collect();
        assert_eq!(terms, ["carbon", "cathode", "coating", "cost", "lifepo4", "slurry", "sucrose"]);
        let oracle = [
            [0.5230350301866413, 0.423441934145613, 0.5230350301866413, 0.0, 0.5230350301866413, 0.0, 0.0],
            [0.0, 0.32346721385745636, 0.7990927223856119, 0.0, 0.0, 0.5067738969102946, 0.0],
            [0.0, 0.5380289691033573, 0.0, 0.8429263481500496, 0.0, 0.0, 0.0],
            [0.5264054336099155, 0.0, 0.0, 0.0, 0.5264054336099155, 0.0, 0.6676785446095399],
        ];
        let x = m.transform_all(&corpus);
        for (row, expected) in x.rows.iter().zip(oracle.iter()) {
            for (j, &w) in expected.iter().enumerate() {
                assert!((row.get(j) - w).abs() < 1e-12, "col {j}");
            }
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
    }
}
