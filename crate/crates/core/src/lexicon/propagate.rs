//! Seed polarity propagation by random walk with restart.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::AssociationGraph;
use super::{Lexicon, SeedSet};
use crate::math::mean_sd;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// Probability of following an edge rather than jumping back to a seed.
    pub continue_prob: f64,
    /// L1 change between sweeps below which the walk has converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self { continue_prob: 0.85, tol: 1e-8, max_iter: 10_000 }
    }
}

impl PropagationParams {
    fn validate(&self) -> Result<()> {
        if !(self.continue_prob > 0.0 && self.continue_prob < 1.0) {
            return Err(Error::InvalidParameter("continue_prob must lie in (0, 1)".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Stationary distribution of a walk that follows edges with probability
/// `continue_prob` (proportionally to weight) and otherwise restarts from
/// `restart`. Mass reaching an isolated node restarts as well, so the result
/// sums to one.
pub fn random_walk_with_restart(graph: &AssociationGraph, restart: &[f64], params: &PropagationParams) -> Result<Vec<f64>> {
    params.validate()?;
    let n = graph.node_count();
    if restart.len() != n {
        return Err(Error::InvalidParameter("restart vector length must equal node count".into()));
    }
    let beta = params.continue_prob;
    let degrees: Vec<f64> = (0..n).map(|u| graph.degree(u)).collect();
    let mut p = restart.to_vec();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for u in 0..n {
            if p[u] == 0.0 {
                continue;
            }
            if degrees[u] > 0.0 {
                let share = beta * p[u] / degrees[u];
                for &(v, w) in graph.neighbors(u) {
                    next[v] += share * w;
                }
            } else {
                dangling += p[u];
            }
        }
        let jump = beta * dangling + (1.0 - beta);
        for (x, s) in next.iter_mut().zip(restart) {
            *x += jump * s;
        }
        residual = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut p, &mut next);
        if residual < params.tol {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence { iterations: params.max_iter, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub lexicon: Lexicon,
    pub p_pos: Vec<f64>,
    pub p_neg: Vec<f64>,
    /// Seed words not present in the graph.
    pub dropped_seeds: Vec<String>,
    /// Tokens neither walk reached; they score zero.
    pub unreached: Vec<String>,
}

fn restart_vector(graph: &AssociationGraph, seeds: &SeedSet, side: &'static str, dropped: &mut Vec<String>) -> Result<Vec<f64>> {
    let mut s = vec![0.0; graph.node_count()];
    let mut total = 0.0;
    for (word, &w) in seeds.weights() {
        match graph.vocabulary().index_of(word) {
            Some(i) => {
                s[i] += w;
                total += w;
            }
            None => dropped.push(word.clone()),
        }
    }
    if total == 0.0 {
        return Err(Error::MissingSeeds { side });
    }
    s.iter_mut().for_each(|x| *x /= total);
    Ok(s)
}

/// Induces a lexicon on `axis` by contrasting the positive- and
/// negative-seeded walks.
///
/// The raw polarity `(p_pos - p_neg) / (p_pos + p_neg)` is standardized over
/// the reached vocabulary and squashed with `tanh` into (-1, 1).
pub fn propagate(
    graph: &AssociationGraph,
    positive: &SeedSet,
    negative: &SeedSet,
    params: &PropagationParams,
    axis: &str,
) -> Result<Propagation> {
    if let Some(w) = positive.weights().keys().find(|w| negative.weights().contains_key(*w)) {
        return Err(Error::OverlappingSeeds(w.clone()));
    }
    let mut dropped_seeds = Vec::new();
    let s_pos = restart_vector(graph, positive, "positive", &mut dropped_seeds)?;
    let s_neg = restart_vector(graph, negative, "negative", &mut dropped_seeds)?;
    let p_pos = random_walk_with_restart(graph, &s_pos, params)?;
    let p_neg = random_walk_with_restart(graph, &s_neg, params)?;

    let raw: Vec<Option<f64>> = p_pos
        .iter()
        .zip(&p_neg)
        .map(|(&a, &b)| (a + b > 0.0).then(|| (a - b) / (a + b)))
        .collect();
    let reached: Vec<f64> = raw.iter().flatten().copied().collect();
    let (mean, sd) = mean_sd(&reached);

    let vocab = graph.vocabulary();
    let mut scores = BTreeMap::new();
    let mut unreached = Vec::new();
    for (i, r) in raw.iter().enumerate() {
        let score = match r {
            Some(r) if sd > 0.0 => libm::tanh((r - mean) / sd),
            Some(_) => 0.0,
            None => {
                unreached.push(String::from(vocab.token(i)));
                0.0
            }
        };
        scores.insert(String::from(vocab.token(i)), score);
    }
    Ok(Propagation { lexicon: Lexicon::from_scores(axis, scores)?, p_pos, p_neg, dropped_seeds, unreached })
}
