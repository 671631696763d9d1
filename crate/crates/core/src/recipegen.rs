//! Recipe sequences, the Markov action model, end-to-end linking and trend
//! matrices.

mod link;
mod markov;
mod sequence;
mod trends;

use std::path::Path;

pub use link::{audit_recipe, link_recipes, EndToEndRecipe};
pub use markov::{fit_markov, fit_markov_smoothed, ActionPath, MarkovActionModel};
pub use sequence::{build_sequence, RecipeKind, RecipeSequence, RecipeStep, StepEntity};
pub use trends::{trend_matrix, TrendAxis, TrendMatrix};

use crate::error::Result;
use crate::util;

pub fn save_recipes(path: &Path, recipes: &[EndToEndRecipe]) -> Result<()> {
    util::write_jsonl(path, recipes)
}

pub fn load_recipes(path: &Path) -> Result<Vec<EndToEndRecipe>> {
    Ok(util::read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn save_sequences(path: &Path, seqs: &[RecipeSequence]) -> Result<()> {
    util::write_jsonl(path, seqs)
}

pub fn load_sequences(path: &Path) -> Result<Vec<RecipeSequence>> {
    Ok(util::read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}
