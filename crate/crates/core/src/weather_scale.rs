//! Weather-intensity scales learned by tagging posts from the extreme
//! percentiles of a condition and propagating from the tags.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::Variable;
use crate::lexicon::{build_graph, propagate, tokenize, GraphParams, Lexicon, PropagationParams, SeedSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagParams {
    /// Share of the ranked posts in each band.
    pub band_fraction: f64,
    /// Bands at each end; band k is tagged `top{k}` / `low{k}`.
    pub bands: usize,
    pub min_records: usize,
    /// Seed weight per band, most extreme first.
    pub weights: Vec<f64>,
}

impl Default for TagParams {
    fn default() -> Self {
        Self { band_fraction: 0.01, bands: 3, min_records: 600, weights: alloc::vec![3.0, 2.0, 1.0] }
    }
}

impl TagParams {
    pub fn top_tag(k: usize) -> String {
        format!("top{k}")
    }

    pub fn low_tag(k: usize) -> String {
        format!("low{k}")
    }

    pub fn tags(&self) -> Vec<String> {
        (1..=self.bands).map(Self::top_tag).chain((1..=self.bands).map(Self::low_tag)).collect()
    }

    /// The two weighted seed sets (top side first).
    pub fn seeds(&self) -> Result<(SeedSet, SeedSet)> {
        if self.weights.len() != self.bands {
            return Err(Error::InvalidParameter("need one seed weight per band".into()));
        }
        let top = SeedSet::weighted((1..=self.bands).map(|k| (Self::top_tag(k), self.weights[k - 1])))?;
        let low = SeedSet::weighted((1..=self.bands).map(|k| (Self::low_tag(k), self.weights[k - 1])))?;
        Ok((top, low))
    }
}

/// A post as seen by the tagger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleDoc<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagBand {
    pub tag: String,
    pub count: usize,
    /// Largest and smallest z-score inside the band.
    pub z_max: f64,
    pub z_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagReport {
    pub variable: Variable,
    /// Posts with a valid z-score (the ranked population).
    pub ranked: usize,
    pub band_size: usize,
    /// Top bands from the extreme inward, then low bands likewise.
    pub bands: Vec<TagBand>,
}

/// Training copies of the post texts; the originals are left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedCorpus {
    pub texts: Vec<String>,
    pub tags: Vec<Option<String>>,
    pub report: TagReport,
    pub params: TagParams,
}

fn band_size(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    libm::floor(x + 1e-9 * x.max(1.0)) as usize
}

/// Ranks posts by z-score and appends band tags to copies of their text.
/// Ties rank by post id; low bands are taken from the bottom of the same
/// ranking so no post can land in two bands.
pub fn tag_percentiles(docs: &[ScaleDoc<'_>], variable: Variable, params: &TagParams) -> Result<TaggedCorpus> {
    if params.bands == 0 || !(params.band_fraction > 0.0 && params.band_fraction < 1.0) {
        return Err(Error::InvalidParameter("bands and band_fraction must be positive".into()));
    }
    let tags = params.tags();
    for d in docs {
        if let Some(tag) = tokenize(d.text).into_iter().find(|t| tags.contains(t)) {
            return Err(Error::TagCollision { tag, record: String::from(d.id) });
        }
    }
    let mut ranked: Vec<(usize, f64)> = docs.iter().enumerate().filter_map(|(i, d)| d.z.map(|z| (i, z))).collect();
    let n = ranked.len();
    if n < params.min_records {
        return Err(Error::TooFewRecords { got: n, need: params.min_records });
    }
    let size = band_size(params.band_fraction, n);
    if size == 0 || 2 * params.bands * size > n {
        return Err(Error::TooFewRecords { got: n, need: 2 * params.bands });
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| docs[a.0].id.cmp(docs[b.0].id)));
    let mut assigned: Vec<Option<String>> = alloc::vec![None; docs.len()];
    let mut bands = Vec::with_capacity(2 * params.bands);
    let mut take = |slice: &[(usize, f64)], tag: String, bands: &mut Vec<TagBand>| {
        for &(i, _) in slice {
            assigned[i] = Some(tag.clone());
        }
        let z_max = slice.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let z_min = slice.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        bands.push(TagBand { tag, count: slice.len(), z_max, z_min });
    };
    for k in 0..params.bands {
        take(&ranked[k * size..(k + 1) * size], TagParams::top_tag(k + 1), &mut bands);
    }
    for k in 0..params.bands {
        take(&ranked[n - (k + 1) * size..n - k * size], TagParams::low_tag(k + 1), &mut bands);
    }
    let texts = docs
        .iter()
        .zip(&assigned)
        .map(|(d, tag)| match tag {
            Some(t) => format!("{} {}", d.text, t),
            None => String::from(d.text),
        })
        .collect();
    Ok(TaggedCorpus {
        texts,
        tags: assigned,
        report: TagReport { variable, ranked: n, band_size: size, bands },
        params: params.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherScale {
    pub lexicon: Lexicon,
    pub frequencies: BTreeMap<String, u64>,
    pub unreached: Vec<String>,
}

/// Learns the scale for the tagged variable: +1 leans toward the top bands.
pub fn build_weather_scale(
    tagged: &TaggedCorpus,
    graph_params: &GraphParams,
    propagation: &PropagationParams,
) -> Result<WeatherScale> {
    let docs: Vec<Vec<String>> = tagged.texts.iter().map(|t| tokenize(t)).collect();
    let tags: BTreeSet<String> = tagged.params.tags().into_iter().collect();
    let graph = build_graph(&docs, graph_params, &tags)?;
    for t in &tags {
        if graph.vocabulary().index_of(t).is_none() {
            return Err(Error::MissingTag(t.clone()));
        }
    }
    let (top, low) = tagged.params.seeds()?;
    let out = propagate(&graph, &top, &low, propagation, tagged.report.variable.name())?;
    Ok(WeatherScale { lexicon: out.lexicon, frequencies: graph.vocabulary().frequencies(), unreached: out.unreached })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub token: String,
    pub sentiment: f64,
    pub weather: f64,
    pub freq: u64,
}

/// Joins sentiment and weather scores per token, keeping tokens seen at least
/// `min_frequency` times, strongest joint placement first.
pub fn emit_word_scatter(
    sentiment: &Lexicon,
    weather: &Lexicon,
    frequencies: &BTreeMap<String, u64>,
    min_frequency: u64,
) -> Result<Vec<ScatterRow>> {
    let joined: Vec<(&str, f64, f64)> =
        sentiment.iter().filter_map(|(t, s)| weather.get(t).map(|w| (t, s, w))).collect();
    if joined.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let mut rows: Vec<ScatterRow> = joined
        .into_iter()
        .map(|(t, s, w)| ScatterRow { token: String::from(t), sentiment: s, weather: w, freq: frequencies.get(t).copied().unwrap_or(0) })
        .filter(|r| r.freq >= min_frequency)
        .collect();
    rows.sort_by(|a, b| {
        (b.sentiment.abs() * b.weather.abs())
            .total_cmp(&(a.sentiment.abs() * a.weather.abs()))
            .then_with(|| a.token.cmp(&b.token))
    });
    Ok(rows)
}
