//! Paragraph-level topic modeling.

mod eval;
mod lda;
mod pca;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use eval::{
    coherence_umass, log_likelihood, perplexity, select_k, training_perplexity, KScore, ModelSelectionReport,
    SelectKConfig,
};
pub use lda::{fit_lda, GibbsSampler, LdaConfig, LdaModel, Vocabulary, FOLD_IN_PASSES};
pub use pca::{fix_sign, jacobi_eigen, pca_2d, Pca2};

use crate::corpus::{self, ParagraphRecord, SectionKind, Stoplist};
use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    /// `(term, φ)` sorted by φ descending, then term.
    pub keywords: Vec<(String, f64)>,
    /// Fraction of training tokens assigned to the topic.
    pub corpus_share: f64,
}

pub fn topic_keywords(model: &LdaModel, topic_id: usize, n: usize) -> Result<TopicSummary> {
    if topic_id >= model.k {
        return Err(Error::InvalidInput(format!("topic {topic_id} out of range (K = {})", model.k)));
    }
    let phi = model.phi(topic_id);
    let keywords = eval::top_word_ids(model, topic_id, n)
        .into_iter()
        .map(|w| (model.vocab.term(w).to_string(), phi[w]))
        .collect();
    let total = model.total_tokens().max(1) as f64;
    Ok(TopicSummary {
        topic_id,
        keywords,
        corpus_share: f64::from(model.n_k[topic_id]) / total,
    })
}

/// Tokens used for topic modeling: lowercased words minus stopwords.
pub fn paragraph_tokens(paragraph: &ParagraphRecord, stoplist: &Stoplist) -> Vec<String> {
    corpus::bag_of_words(&paragraph.text, stoplist)
}

/// Dominant fold-in topic for each paragraph; ties go to the lower topic id.
pub fn assign_topics(model: &LdaModel, paragraphs: &[ParagraphRecord], stoplist: &Stoplist) -> Vec<ParagraphRecord> {
    paragraphs
        .iter()
        .map(|p| {
            let theta = model.fold_in(&paragraph_tokens(p, stoplist));
            let mut best = 0;
            for (k, &t) in theta.iter().enumerate() {
                if t > theta[best] {
                    best = k;
                }
            }
            let mut out = p.clone();
            out.topic_id = Some(best);
            out
        })
        .collect()
}

/// Keyword anchors that mark the two recipe topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingAnchors {
    pub synthesis: BTreeSet<String>,
    pub assembly: BTreeSet<String>,
    /// Keywords inspected per topic.
    pub top_n: usize,
    /// Minimum anchor hits among the top keywords.
    pub min_hits: usize,
}

impl Default for RoutingAnchors {
    fn default() -> Self {
        let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        RoutingAnchors {
            synthesis: set(&["solution", "temperature", "mixture", "powder", "h"]),
            assembly: set(&["cell", "electrode", "electrochemical", "cathode", "electrolyte", "foil"]),
            top_n: 10,
            min_hits: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicRouting {
    pub synthesis: Vec<usize>,
    pub assembly: Vec<usize>,
}

impl TopicRouting {
    /// Routes topics by anchor hits in their top keywords. A topic that
    /// qualifies for both kinds goes to the one with more hits (synthesis on
    /// a tie).
    pub fn from_anchors(model: &LdaModel, anchors: &RoutingAnchors) -> Self {
        let mut routing = TopicRouting::default();
        for k in 0..model.k {
            let top: BTreeSet<usize> = eval::top_word_ids(model, k, anchors.top_n).into_iter().collect();
            let hits = |set: &BTreeSet<String>| {
                top.iter()
                    .filter(|&&w| set.contains(model.vocab.term(w)))
                    .count()
            };
            let (s, a) = (hits(&anchors.synthesis), hits(&anchors.assembly));
            if s >= anchors.min_hits && s >= a {
                routing.synthesis.push(k);
            } else if a >= anchors.min_hits {
                routing.assembly.push(k);
            }
        }
        routing
    }

    pub fn kind_of(&self, topic: usize) -> SectionKind {
        if self.synthesis.contains(&topic) {
            SectionKind::Synthesis
        } else if self.assembly.contains(&topic) {
            SectionKind::Assembly
        } else {
            SectionKind::Other
        }
    }

    pub fn apply(&self, paragraphs: &mut [ParagraphRecord]) {
        for p in paragraphs {
            p.section_kind = p.topic_id.map(|t| self.kind_of(t));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPoint {
    pub topic_id: usize,
    pub x: f64,
    pub y: f64,
    pub corpus_share: f64,
}

/// 2D PCA coordinates of every topic's φ row.
pub fn pca_topic_map(model: &LdaModel) -> Result<Vec<TopicPoint>> {
    let pca = pca_2d(&model.phi_matrix())?;
    let total = model.total_tokens().max(1) as f64;
    Ok(pca
        .coords
        .iter()
        .enumerate()
        .map(|(k, c)| TopicPoint {
            topic_id: k,
            x: c[0],
            y: c[1],
            corpus_share: f64::from(model.n_k[k]) / total,
        })
        .collect())
}

/// `topic_id,x,y,corpus_share` rows.
pub fn topic_map_csv(points: &[TopicPoint]) -> String {
    let mut out = String::from("topic_id,x,y,corpus_share\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.topic_id, p.x, p.y, p.corpus_share));
    }
    out
}

/// `topic_id,rank,term,phi` rows.
pub fn keywords_csv(summaries: &[TopicSummary]) -> String {
    let mut out = String::from("topic_id,rank,term,phi\n");
    for s in summaries {
        for (rank, (term, phi)) in s.keywords.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", s.topic_id, rank + 1, term, phi));
        }
    }
    out
}

impl LdaModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: LdaModel = util::read_json(path)?;
        if !model.counts_consistent() {
            return Err(Error::Validation(format!("{}: LDA counts do not match assignments", path.display())));
        }
        Ok(model)
    }
}
