//! Rule-based text scoring on top of a lexicon: negation, boosters, all-caps
//! and exclamation emphasis, normalized into [-1, 1].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analytics::Axis;
use crate::corpus::TweetRecord;
use crate::grid::{ConditionAnnotation, Variable};
use crate::lexicon::tokenize::{is_punctuation, tokenize_cased};
use crate::lexicon::Lexicon;
use crate::math::sqrt;
use crate::{Error, Result};

const NEGATIONS: &[&str] = &[
    "aint", "ain't", "arent", "aren't", "cannot", "cant", "can't", "couldnt", "couldn't", "darent", "daren't",
    "didnt", "didn't", "doesnt", "doesn't", "dont", "don't", "hadnt", "hadn't", "hasnt", "hasn't", "havent",
    "haven't", "isnt", "isn't", "mightnt", "mightn't", "mustnt", "mustn't", "neither", "never", "no", "nobody",
    "none", "nope", "nor", "not", "nothing", "nowhere", "shant", "shan't", "shouldnt", "shouldn't", "wasnt",
    "wasn't", "werent", "weren't", "without", "wont", "won't", "wouldnt", "wouldn't", "rarely", "seldom",
    "despite",
];

const BOOSTER_UP: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerably", "decidedly", "deeply", "effing",
    "enormously", "entirely", "especially", "exceptionally", "extremely", "fabulously", "flipping", "flippin",
    "fricking", "frickin", "frigging", "friggin", "fully", "fucking", "greatly", "hella", "highly", "hugely",
    "incredibly", "intensely", "majorly", "more", "most", "particularly", "purely", "quite", "really",
    "remarkably", "so", "substantially", "thoroughly", "totally", "tremendously", "uber", "unbelievably",
    "unusually", "utterly", "very", "proper", "well", "dead",
];

const BOOSTER_DOWN: &[&str] = &[
    "almost", "barely", "hardly", "kinda", "kindof", "kind-of", "less", "little", "marginally", "occasionally",
    "partly", "scarcely", "slightly", "somewhat", "sorta", "sortof", "sort-of",
];

/// Modifier vocabulary and constants for [`score_text`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringRules {
    pub negations: BTreeSet<String>,
    /// Signed increments: positive words intensify, negative words dampen.
    pub boosters: BTreeMap<String, f64>,
    pub caps_increment: f64,
    pub exclamation_increment: f64,
    pub exclamation_cap: usize,
    /// Multiplier applied to a negated valence; lies in (-1, 0).
    pub negation_factor: f64,
    /// Maps lexicon scores in [-1, 1] onto the constants' native range.
    pub lexicon_scale: f64,
    pub alpha: f64,
    pub lookback: usize,
    /// Booster weight by distance (index 0 is the adjacent token).
    pub booster_decay: Vec<f64>,
}

pub const BOOSTER_INCREMENT: f64 = 0.293;

impl Default for ScoringRules {
    fn default() -> Self {
        let boosters = BOOSTER_UP
            .iter()
            .map(|w| (String::from(*w), BOOSTER_INCREMENT))
            .chain(BOOSTER_DOWN.iter().map(|w| (String::from(*w), -BOOSTER_INCREMENT)))
            .collect();
        Self {
            negations: NEGATIONS.iter().map(|w| String::from(*w)).collect(),
            boosters,
            caps_increment: 0.733,
            exclamation_increment: 0.292,
            exclamation_cap: 3,
            negation_factor: -0.74,
            lexicon_scale: 4.0,
            alpha: 15.0,
            lookback: 3,
            booster_decay: alloc::vec![1.0, 0.95, 0.9],
        }
    }
}

impl ScoringRules {
    pub fn validate(&self) -> Result<()> {
        if !(self.negation_factor > -1.0 && self.negation_factor < 0.0) {
            return Err(Error::InvalidParameter("negation_factor must lie in (-1, 0)".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        let finite = [self.caps_increment, self.exclamation_increment, self.lexicon_scale]
            .iter()
            .chain(self.boosters.values())
            .chain(&self.booster_decay)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("scoring constants must be finite".into()));
        }
        if self.booster_decay.len() < self.lookback {
            return Err(Error::InvalidParameter("booster_decay needs one weight per lookback step".into()));
        }
        Ok(())
    }

    fn is_negation(&self, lower: &str) -> bool {
        self.negations.contains(lower) || lower.ends_with("n't")
    }

    fn is_modifier(&self, lower: &str) -> bool {
        self.is_negation(lower) || self.boosters.contains_key(lower)
    }
}

fn is_all_caps(token: &str) -> bool {
    let mut letters = 0;
    for c in token.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_uppercase() {
            return false;
        }
        letters += 1;
    }
    letters >= 2
}

fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Scores a text in [-1, 1]; texts without lexicon-bearing tokens score 0.
pub fn score_text(text: &str, lexicon: &Lexicon, rules: &ScoringRules) -> f64 {
    let cased = tokenize_cased(text);
    let lower: Vec<String> = cased.iter().map(|t| t.to_lowercase()).collect();
    let words: Vec<bool> = cased.iter().map(|t| t.chars().any(char::is_alphabetic)).collect();
    let any_caps = cased.iter().zip(&words).any(|(t, &w)| w && is_all_caps(t));
    let any_plain = cased.iter().zip(&words).any(|(t, &w)| w && !is_all_caps(t));
    let cap_diff = any_caps && any_plain;

    let mut total = 0.0;
    let mut bearing = false;
    for i in 0..cased.len() {
        let tok = &lower[i];
        if is_punctuation(tok) || rules.is_modifier(tok) {
            continue;
        }
        let Some(score) = lexicon.get(tok).filter(|s| *s != 0.0) else {
            continue;
        };
        bearing = true;
        let mut v = score * rules.lexicon_scale;
        if cap_diff && is_all_caps(&cased[i]) {
            v += signum(v) * rules.caps_increment;
        }
        let mut negated = false;
        for d in 1..=rules.lookback.min(i) {
            let prev = &lower[i - d];
            if let Some(&b) = rules.boosters.get(prev.as_str()) {
                let mut s = if v < 0.0 { -b } else { b };
                if cap_diff && is_all_caps(&cased[i - d]) {
                    s += signum(v) * rules.caps_increment;
                }
                v += s * rules.booster_decay[d - 1];
            }
            negated |= rules.is_negation(prev);
        }
        if negated {
            v *= rules.negation_factor;
        }
        total += v;
    }
    if !bearing {
        return 0.0;
    }
    let marks = lower.iter().filter(|t| t.as_str() == "!").count().min(rules.exclamation_cap);
    total += signum(total) * marks as f64 * rules.exclamation_increment;
    let s = total / sqrt(total * total + rules.alpha);
    s.clamp(-1.0, 1.0)
}

/// A post joined with its sentiment, weather annotation and region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub sentiment: f64,
    pub conditions: ConditionAnnotation,
    pub region: Option<String>,
}

impl ScoredTweet {
    /// The variable on the requested axis, `None` when invalid.
    pub fn value(&self, variable: Variable, axis: Axis) -> Option<f64> {
        let c = self.conditions.get(variable);
        if !c.is_valid() {
            return None;
        }
        match axis {
            Axis::Raw => c.raw,
            Axis::Z => c.z,
        }
    }
}

/// Sentiment of every record, in input order.
pub fn score_corpus(records: &[TweetRecord], lexicon: &Lexicon, rules: &ScoringRules) -> Vec<f64> {
    records.iter().map(|r| score_text(&r.text, lexicon, rules)).collect()
}

/// Joins records with sentiments, annotations and region names. All slices
/// are parallel to `records`.
pub fn join_scored(
    records: &[TweetRecord],
    sentiments: &[f64],
    annotations: &[ConditionAnnotation],
    regions: &[Option<String>],
) -> Result<Vec<ScoredTweet>> {
    if sentiments.len() != records.len() || annotations.len() != records.len() || regions.len() != records.len() {
        return Err(Error::InvalidParameter("joined columns differ in length".into()));
    }
    Ok(records
        .iter()
        .zip(sentiments)
        .zip(annotations)
        .zip(regions)
        .map(|(((r, &s), a), g)| ScoredTweet {
            id: r.id.clone(),
            timestamp: r.timestamp,
            sentiment: s,
            conditions: *a,
            region: g.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(pairs: &[(&str, f64)]) -> Lexicon {
        Lexicon::from_scores("sentiment", pairs.iter().map(|(t, s)| (String::from(*t), *s))).unwrap()
    }

    fn norm(s: f64) -> f64 {
        s / (s * s + 15.0).sqrt()
    }

    #[test]
    fn example_sentences() {
        let rules = ScoringRules::default();
        assert!(score_text("I love the weather", &lex(&[("love", 0.7)]), &rules) > 0.0);
        assert!(score_text("This weather is horrid", &lex(&[("horrid", -0.7)]), &rules) < 0.0);
        assert_eq!(score_text("the the the", &lex(&[("love", 0.7)]), &rules), 0.0);
        assert_eq!(score_text("", &lex(&[("love", 0.7)]), &rules), 0.0);
        assert_eq!(score_text("I love it", &Lexicon::new("s"), &rules), 0.0);
    }

    #[test]
    fn plain_valence_is_normalized_scaled_score() {
        let rules = ScoringRules::default();
        let got = score_text("good", &lex(&[("good", 0.7)]), &rules);
        assert!((got - norm(2.8)).abs() < 1e-15);
    }

    #[test]
    fn negation_flips_and_damps() {
        let rules = ScoringRules::default();
        let l = lex(&[("good", 0.7)]);
        // 0.7 * 4 = 2.8; 2.8 * -0.74 = -2.072; -2.072 / sqrt(2.072^2 + 15)
        let expected = -2.072 / (2.072f64 * 2.072 + 15.0).sqrt();
        let got = score_text("not good", &l, &rules);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((expected - -0.471_724).abs() < 1e-6);
        // three tokens back still negates, four does not
        assert!(score_text("not a very good", &l, &rules) < 0.0);
        assert!(score_text("not a b c good", &l, &rules) > 0.0);
        assert!(score_text("isn't good", &l, &rules) < 0.0);
    }

    #[test]
    fn boosters() {
        let rules = ScoringRules::default();
        let l = lex(&[("good", 0.7), ("bad", -0.7)]);
        let base = score_text("good", &l, &rules);
        let up = score_text("very good", &l, &rules);
        assert!((up - norm(2.8 + 0.293)).abs() < 1e-15);
        assert!(up > base);
        assert!(score_text("slightly good", &l, &rules) < base);
        assert!(score_text("very bad", &l, &rules) < score_text("bad", &l, &rules));
        // decayed with distance
        let far = score_text("very nice day good", &l, &rules);
        assert!((far - norm(2.8 + 0.293 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn caps_and_exclamations() {
        let rules = ScoringRules::default();
        let l = lex(&[("good", 0.7)]);
        let caps = score_text("GOOD day", &l, &rules);
        assert!((caps - norm(2.8 + 0.733)).abs() < 1e-15);
        // all-caps text has no differential
        assert!((score_text("GOOD DAY", &l, &rules) - norm(2.8)).abs() < 1e-15);
        let bang = score_text("good!!!!!", &l, &rules);
        assert!((bang - norm(2.8 + 3.0 * 0.292)).abs() < 1e-15);
        let l = lex(&[("bad", -0.5)]);
        assert!((score_text("bad!", &l, &rules) - norm(-2.0 - 0.292)).abs() < 1e-15);
    }

    #[test]
    fn single_token_sign_matches_lexicon() {
        let rules = ScoringRules::default();
        for s in [-1.0, -0.3, 0.01, 0.9] {
            let got = score_text("word", &lex(&[("word", s)]), &rules);
            assert_eq!(got.signum(), f64::signum(s));
        }
    }

    #[test]
    fn rules_validation() {
        assert!(ScoringRules::default().validate().is_ok());
        let bad = ScoringRules { negation_factor: 0.5, ..ScoringRules::default() };
        assert!(bad.validate().is_err());
        let bad = ScoringRules { alpha: 0.0, ..ScoringRules::default() };
        assert!(bad.validate().is_err());
    }
}
