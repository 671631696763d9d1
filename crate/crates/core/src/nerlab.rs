//! Named-entity tagging for synthesis and assembly paragraphs.

mod crf;
mod dataset;
mod eval;
mod features;
mod model;
mod paragraph;
mod tags;
mod train;

pub use crf::{log_partition, marginals, path_score, viterbi, Marginals, Potentials};
pub use dataset::{
    load_annotations, save_annotations, split_dataset, AnnotatedSequence, DatasetSplit, MIN_SPLIT_SEQUENCES,
};
pub use eval::{evaluate, score, CategoryScores, EvalReport, MatchMode, ModeScores};
pub use features::{feature_strings, shape, FeatureConfig};
pub use model::{CrfModel, ParamLayout, SequenceFeatures};
pub use paragraph::{tag_paragraph, EntityMention, GoldIndex, TaggedParagraph};
pub use tags::{
    decode_tags, encode_spans, validate_spans, DecodeMode, EntitySpan, Schema, Tag, TagSet, TransitionMask,
    ASSEMBLY_CATEGORIES, SYNTHESIS_CATEGORIES,
};
pub use train::{evaluate_model, shuffle_split_cv, train_crf, CvFold, EpochLog, Optimizer, TrainConfig, TrainReport};

/// Hashed feature keys of every token, as used for model construction.
pub fn feature_keys(tokens: &[String], config: &FeatureConfig) -> Vec<Vec<u64>> {
    features::extract(tokens, config)
}
