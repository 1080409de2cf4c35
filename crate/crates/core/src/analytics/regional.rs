use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::curve::{curve_from_points, ResponseCurve};
use super::Axis;
use crate::grid::Variable;
use crate::math::mean_sd;
use crate::scorer::ScoredTweet;
use crate::stats::{pearson_r_p, Correlation, Undefined};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

/// Standardizes a group's sentiments to zero mean and unit population sd.
pub fn normalize_sentiment(sentiments: &[f64]) -> Result<Normalized> {
    if sentiments.len() < 2 {
        return Err(Error::EmptyInput(format!("need at least 2 sentiments, got {}", sentiments.len())));
    }
    let (mean, sd) = mean_sd(sentiments);
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::ZeroVariance("group sentiment is constant".into()));
    }
    Ok(Normalized { values: sentiments.iter().map(|s| (s - mean) / sd).collect(), mean, sd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCurves {
    pub group: String,
    /// Posts in the group with a valid value for the variable.
    pub n: usize,
    pub sentiment_mean: f64,
    pub sentiment_sd: f64,
    /// Raw condition against raw sentiment.
    pub raw: ResponseCurve,
    /// Condition z-score against group-normalized sentiment.
    pub normalized: ResponseCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalComparison {
    pub variable: Variable,
    pub groups: [GroupCurves; 2],
    pub raw: core::result::Result<Correlation, Undefined>,
    pub raw_shared_bins: usize,
    pub normalized: core::result::Result<Correlation, Undefined>,
    pub norm_shared_bins: usize,
}

fn shared_correlation(a: &ResponseCurve, b: &ResponseCurve) -> (core::result::Result<Correlation, Undefined>, usize) {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .bins
        .iter()
        .zip(&b.bins)
        .filter(|(x, y)| x.included && y.included)
        .filter_map(|(x, y)| Some((x.mean_sentiment?, y.mean_sentiment?)))
        .unzip();
    let n = xs.len();
    (pearson_r_p(&xs, &ys), n)
}

fn pooled_edges(values: &[f64], nbins: usize) -> Result<Option<Vec<f64>>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no valid values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(None);
    }
    let w = (hi - lo) / nbins as f64;
    let mut edges: Vec<f64> = (0..nbins).map(|k| lo + k as f64 * w).collect();
    edges.push(hi);
    Ok(Some(edges))
}

/// Compares two groups' response to `variable`: raw curves over shared raw
/// edges, and z-score curves of group-normalized sentiment over shared
/// z edges. Correlations use only bins included in both groups.
pub fn regional_compare<F>(
    tweets: &[ScoredTweet],
    group_of: F,
    groups: [&str; 2],
    variable: Variable,
    nbins: usize,
    min_fraction: f64,
) -> Result<RegionalComparison>
where
    F: Fn(&ScoredTweet) -> Option<String>,
{
    if groups[0] == groups[1] {
        return Err(Error::InvalidParameter("regional comparison needs two distinct groups".into()));
    }
    let members: [Vec<&ScoredTweet>; 2] = groups.map(|g| {
        tweets
            .iter()
            .filter(|t| t.value(variable, Axis::Z).is_some() && group_of(t).as_deref() == Some(g))
            .collect()
    });
    for (g, m) in groups.iter().zip(&members) {
        if m.is_empty() {
            return Err(Error::EmptyInput(format!("group {g:?} has no posts with valid {variable}")));
        }
    }
    let value = |t: &ScoredTweet, axis| t.value(variable, axis).unwrap();
    let all_raw: Vec<f64> = members.iter().flatten().map(|t| value(t, Axis::Raw)).collect();
    let all_z: Vec<f64> = members.iter().flatten().map(|t| value(t, Axis::Z)).collect();
    let raw_edges = pooled_edges(&all_raw, nbins)?;
    let z_edges = pooled_edges(&all_z, nbins)?;
    let total = tweets.len();

    let mut curves = Vec::with_capacity(2);
    for (g, m) in groups.iter().zip(&members) {
        let sentiments: Vec<f64> = m.iter().map(|t| t.sentiment).collect();
        let norm = normalize_sentiment(&sentiments).map_err(|e| match e {
            Error::ZeroVariance(_) => Error::ZeroVariance(format!("group {g:?} sentiment is constant")),
            other => other,
        })?;
        let raw_pts: Vec<(f64, f64)> = m.iter().map(|t| (value(t, Axis::Raw), t.sentiment)).collect();
        let z_pts: Vec<(f64, f64)> = m.iter().zip(&norm.values).map(|(t, &s)| (value(t, Axis::Z), s)).collect();
        let raw = curve_from_points(&raw_pts, raw_edges.as_deref(), variable, Axis::Raw, nbins, min_fraction, total)?;
        let normalized = curve_from_points(&z_pts, z_edges.as_deref(), variable, Axis::Z, nbins, min_fraction, total)?;
        curves.push(GroupCurves {
            group: String::from(*g),
            n: m.len(),
            sentiment_mean: norm.mean,
            sentiment_sd: norm.sd,
            raw,
            normalized,
        });
    }
    let b = curves.pop().unwrap();
    let a = curves.pop().unwrap();
    let (raw, raw_shared_bins) = shared_correlation(&a.raw, &b.raw);
    let (normalized, norm_shared_bins) = shared_correlation(&a.normalized, &b.normalized);
    Ok(RegionalComparison { variable, groups: [a, b], raw, raw_shared_bins, normalized, norm_shared_bins })
}
