use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::actionclass::{ActionCategory, ActionMention};
use crate::nerlab::{EntityMention, Schema};

pub type RecipeKind = Schema;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepEntity {
    pub category: String,
    pub value: String,
    /// Trend labels (temperature marks, time bins); empty for plain entities.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<String>,
}

impl StepEntity {
    fn from_mention(m: &EntityMention) -> Self {
        StepEntity {
            category: m.category.clone(),
            value: m.text().to_string(),
            bins: m.bins.clone(),
        }
    }

    /// Values used on trend axes: the bins when present, else the value.
    pub fn trend_values(&self) -> Vec<&str> {
        if self.bins.is_empty() {
            vec![self.value.as_str()]
        } else {
            self.bins.iter().map(String::as_str).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeStep {
    pub action: ActionCategory,
    pub lemma: String,
    pub sentence: usize,
    pub token: usize,
    pub entities: Vec<StepEntity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeSequence {
    pub paper_doi: String,
    pub ordinal: usize,
    pub kind: RecipeKind,
    pub steps: Vec<RecipeStep>,
    /// Entities of sentences without an action verb.
    pub unattached: Vec<StepEntity>,
}

impl RecipeSequence {
    pub fn actions(&self) -> Vec<ActionCategory> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn entities(&self) -> impl Iterator<Item = &StepEntity> {
        self.steps.iter().flat_map(|s| s.entities.iter()).chain(&self.unattached)
    }

    /// Distinct values of one entity category.
    pub fn values(&self, category: &str) -> BTreeSet<String> {
        self.entities()
            .filter(|e| e.category == category)
            .map(|e| e.value.clone())
            .collect()
    }
}

fn distance(entity: &EntityMention, token: usize) -> usize {
    if token < entity.start {
        entity.start - token
    } else if token >= entity.end {
        token + 1 - entity.end
    } else {
        0
    }
}

/// One step per action mention in textual order. Each entity joins the
/// nearest action verb of its sentence (earlier verb on ties); entities of
/// verb-less sentences are kept as unattached.
pub fn build_sequence(
    paper_doi: &str,
    ordinal: usize,
    kind: RecipeKind,
    entities: &[EntityMention],
    actions: &[ActionMention],
) -> RecipeSequence {
    let mut actions: Vec<&ActionMention> = actions.iter().collect();
    actions.sort_by_key(|a| (a.sentence, a.token));
    let mut steps: Vec<RecipeStep> = actions
        .iter()
        .map(|a| RecipeStep {
            action: a.category,
            lemma: a.lemma.clone(),
            sentence: a.sentence,
            token: a.token,
            entities: Vec::new(),
        })
        .collect();
    let mut entities: Vec<&EntityMention> = entities.iter().collect();
    entities.sort_by_key(|e| (e.sentence, e.start, e.end));
    let mut unattached = Vec::new();
    for e in entities {
        let nearest = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.sentence == e.sentence)
            .min_by_key(|(i, s)| (distance(e, s.token), *i))
            .map(|(i, _)| i);
        match nearest {
            Some(i) => steps[i].entities.push(StepEntity::from_mention(e)),
            None => unattached.push(StepEntity::from_mention(e)),
        }
    }
    RecipeSequence {
        paper_doi: paper_doi.to_string(),
        ordinal,
        kind,
        steps,
        unattached,
    }
}
