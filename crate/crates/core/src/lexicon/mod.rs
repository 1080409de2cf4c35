//! Corpus-specific lexicon induction from weighted seed words.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod graph;
pub mod propagate;
pub mod tokenize;

pub use graph::{build_graph, AssociationGraph, GraphParams, Vocabulary};
pub use propagate::{propagate, random_walk_with_restart, Propagation, PropagationParams};
pub use tokenize::{tokenize, tokenize_cased};

/// Token scores along one named axis, each in [-1, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Lexicon {
    axis: String,
    scores: BTreeMap<String, f64>,
}

impl Lexicon {
    pub fn new(axis: impl Into<String>) -> Self {
        Self { axis: axis.into(), scores: BTreeMap::new() }
    }

    pub fn from_scores(axis: impl Into<String>, scores: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut lex = Self::new(axis);
        for (t, s) in scores {
            lex.insert(t, s)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, token: impl Into<String>, score: f64) -> Result<()> {
        let token = token.into();
        if !(score.is_finite() && (-1.0..=1.0).contains(&score)) {
            return Err(Error::InvalidParameter(format!("score {score} for {token:?} outside [-1, 1]")));
        }
        self.scores.insert(token, score);
        Ok(())
    }

    pub fn axis(&self) -> &str {
        &self.axis
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.scores.get(token).copied()
    }

    /// Score of a token, zero when the lexicon does not know it.
    pub fn score(&self, token: &str) -> f64 {
        self.get(token).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.scores.iter().map(|(t, &s)| (t.as_str(), s))
    }

    pub fn negated(&self) -> Self {
        Self { axis: self.axis.clone(), scores: self.scores.iter().map(|(t, s)| (t.clone(), -s)).collect() }
    }
}

pub fn score_lookup(lexicon: &Lexicon, token: &str) -> f64 {
    lexicon.score(token)
}

/// One pole of an axis: seed words with positive weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedSet {
    weights: BTreeMap<String, f64>,
}

impl SeedSet {
    pub fn uniform<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Self { weights: words.into_iter().map(|w| (w.into(), 1.0)).collect() }
    }

    pub fn weighted<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (w, x) in pairs {
            let w = w.into();
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("seed {w:?} has non-positive weight {x}")));
            }
            weights.insert(w, x);
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.weights.contains_key(word)
    }
}
