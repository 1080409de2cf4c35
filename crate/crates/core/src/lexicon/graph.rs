//! Word-association graph: windowed co-occurrence counts, a positive PMI
//! transform, and a k-nearest-neighbour graph over cosine similarity of the
//! PPMI rows.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tokenize::is_punctuation;
use crate::math::sqrt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphParams {
    /// Co-occurrence reaches this many tokens on either side.
    pub window: usize,
    pub min_count: u64,
    pub k_neighbors: usize,
    /// Tokens whose co-occurrence profile is consistent with independence
    /// (chi-square deviation below this many standard normal units) get no
    /// edges. Zero disables the test.
    pub min_z: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self { window: 4, min_count: 10, k_neighbors: 25, min_z: 3.0 }
    }
}

/// Dense token indices in lexicographic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freq: Vec<u64>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn frequency(&self, idx: usize) -> u64 {
        self.freq[idx]
    }

    pub fn frequencies(&self) -> BTreeMap<String, u64> {
        self.tokens.iter().cloned().zip(self.freq.iter().copied()).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Undirected weighted graph over a vocabulary. Adjacency lists are sorted by
/// neighbour index and the edge set is symmetric with identical weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationGraph {
    vocab: Vocabulary,
    adj: Vec<Vec<(usize, f64)>>,
}

impl AssociationGraph {
    /// Builds a graph directly from an edge list, mainly for tests and
    /// fixtures. Duplicate edges keep the larger weight.
    pub fn from_edges(tokens: &[&str], edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(String, usize)> = tokens.iter().enumerate().map(|(i, t)| (String::from(*t), i)).collect();
        sorted.sort();
        let remap: Vec<usize> = {
            let mut m = vec![0; tokens.len()];
            for (new, (_, old)) in sorted.iter().enumerate() {
                m[*old] = new;
            }
            m
        };
        let vocab = Vocabulary {
            tokens: sorted.iter().map(|(t, _)| t.clone()).collect(),
            freq: vec![1; tokens.len()],
            index: sorted.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect(),
        };
        if vocab.index.len() != tokens.len() {
            return Err(Error::InvalidParameter("duplicate token in graph fixture".into()));
        }
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); tokens.len()];
        for &(a, b, w) in edges {
            if a == b || a >= tokens.len() || b >= tokens.len() || !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter("invalid edge in graph fixture".into()));
            }
            let (a, b) = (remap[a], remap[b]);
            for (x, y) in [(a, b), (b, a)] {
                let e = maps[x].entry(y).or_insert(w);
                *e = e.max(w);
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Ok(Self { vocab, adj })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> f64 {
        self.adj[node].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a].binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| self.adj[a][i].1)
    }

    /// True when the weighted adjacency equals its transpose exactly.
    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(a, row)| row.iter().all(|&(b, w)| self.weight(b, a) == Some(w)))
    }
}

/// Chi-square goodness of fit of one co-occurrence row against the
/// independence expectation `r_a r_b / (T - r_a)` over the `partners` other
/// tokens that co-occur with anything, as a Wilson-Hilferty normal deviate.
/// `None` when there are too few partners to test.
fn independence_z(row: &BTreeMap<usize, f64>, row_sums: &[f64], total: f64, r_a: f64, partners: usize) -> Option<f64> {
    if partners < 2 || r_a <= 0.0 {
        return None;
    }
    let scale = r_a / (total - r_a);
    // sum (c - e)^2 / e = sum c^2 / e - r_a, since both c and e sum to r_a
    let chi2 = row.iter().map(|(&b, &c)| c * c / (scale * row_sums[b])).sum::<f64>() - r_a;
    let k = (partners - 1) as f64;
    let v = 2.0 / (9.0 * k);
    Some((libm::cbrt(chi2.max(0.0) / k) - (1.0 - v)) / sqrt(v))
}

fn eligible(token: &str) -> bool {
    !is_punctuation(token)
}

/// Builds the association graph from tokenized documents. Tokens in `exempt`
/// bypass `min_count` (they still need to occur at least once).
pub fn build_graph(docs: &[Vec<String>], params: &GraphParams, exempt: &BTreeSet<String>) -> Result<AssociationGraph> {
    if params.window == 0 || params.k_neighbors == 0 {
        return Err(Error::InvalidParameter("window and k_neighbors must be positive".into()));
    }
    if !(params.min_z >= 0.0 && params.min_z.is_finite()) {
        return Err(Error::InvalidParameter("min_z must be finite and non-negative".into()));
    }
    if docs.is_empty() {
        return Err(Error::EmptyInput("corpus has no documents".into()));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        for t in doc.iter().filter(|t| eligible(t)) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let distinct = counts.len();
    let mut vocab = Vocabulary::default();
    for (t, c) in counts {
        if c >= params.min_count || exempt.contains(t) {
            vocab.index.insert(String::from(t), vocab.tokens.len());
            vocab.tokens.push(String::from(t));
            vocab.freq.push(c);
        }
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count: params.min_count, distinct });
    }
    let n = vocab.len();

    // symmetric windowed co-occurrence over eligible-token positions
    let mut cooc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for doc in docs {
        let ids: Vec<Option<usize>> = doc.iter().filter(|t| eligible(t)).map(|t| vocab.index_of(t)).collect();
        for (i, a) in ids.iter().enumerate() {
            let Some(a) = *a else { continue };
            for b in ids.iter().skip(i + 1).take(params.window).flatten() {
                if a != *b {
                    *cooc[a].entry(*b).or_default() += 1.0;
                    *cooc[*b].entry(a).or_default() += 1.0;
                }
            }
        }
    }

    // positive PMI rows, each augmented with a self entry equal to the row
    // maximum so that direct co-occurrence also raises cosine similarity
    let row_sums: Vec<f64> = cooc.iter().map(|r| r.values().sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let partners = row_sums.iter().filter(|&&r| r > 0.0).count();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for (a, row) in cooc.iter().enumerate() {
        if params.min_z > 0.0
            && !exempt.contains(vocab.token(a))
            && independence_z(row, &row_sums, total, row_sums[a], partners - 1).is_some_and(|z| z < params.min_z)
        {
            rows.push(Vec::new());
            continue;
        }
        let mut v: Vec<(usize, f64)> = row
            .iter()
            .filter_map(|(&b, &c)| {
                let pmi = libm::log(c * total / (row_sums[a] * row_sums[b]));
                (pmi > 0.0).then_some((b, pmi))
            })
            .collect();
        if let Some(max) = v.iter().map(|&(_, x)| x).reduce(f64::max) {
            let pos = v.partition_point(|&(b, _)| b < a);
            v.insert(pos, (a, max));
        }
        let norm = sqrt(v.iter().map(|&(_, x)| x * x).sum());
        for e in &mut v {
            e.1 /= norm;
        }
        rows.push(v);
    }
    drop(cooc);

    let mut postings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (a, row) in rows.iter().enumerate() {
        for &(c, x) in row {
            postings[c].push((a, x));
        }
    }

    let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    for a in 0..n {
        for &(c, x) in &rows[a] {
            for &(b, y) in &postings[c] {
                if acc[b] == 0.0 {
                    touched.push(b);
                }
                acc[b] += x * y;
            }
        }
        let mut cands: Vec<(usize, f64)> = touched.iter().filter(|&&b| b != a && acc[b] > 0.0).map(|&b| (b, acc[b])).collect();
        for &b in &touched {
            acc[b] = 0.0;
        }
        touched.clear();
        cands.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        cands.truncate(params.k_neighbors);
        for (b, w) in cands {
            let w = w.min(1.0);
            for (x, y) in [(a, b), (b, a)] {
                let e = maps[x].entry(y).or_insert(w);
                *e = e.max(w);
            }
        }
    }
    let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
    Ok(AssociationGraph { vocab, adj })
}
