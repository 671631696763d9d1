//! Battery recipe extraction from scientific text.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`corpus`]: paper and paragraph records, ingestion, tokenization.
//! * [`textclass`]: TF-IDF features and paper relevance classifiers.
//! * [`topicmodel`]: collapsed Gibbs LDA, model selection, topic maps.
//! * [`nerlab`]: IOBES tagging and a transition-constrained linear-chain CRF.
//! * [`actionclass`]: lexicon-based synthesis action classification.
//! * [`normalizer`]: entity canonicalization, time and temperature parsing.
//! * [`recipegen`]: recipe sequences, Markov action model, recipe linking, trends.
//! * [`queryengine`]: the field query language and its inverted index.
//! * [`pipeline`]: stage orchestration over on-disk artifacts.

pub mod actionclass;
pub mod corpus;
pub mod error;
pub mod nerlab;
pub mod normalizer;
pub mod pipeline;
pub mod queryengine;
pub mod recipegen;
pub mod textclass;
pub mod topicmodel;
mod util;

pub use error::{Error, Result};
