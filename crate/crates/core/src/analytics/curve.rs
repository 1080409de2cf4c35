use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Axis;
use crate::grid::Variable;
use crate::scorer::ScoredTweet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub center: f64,
    pub mean_sentiment: Option<f64>,
    pub count: usize,
    pub included: bool,
}

/// Mean sentiment over equal-width bins of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub variable: Variable,
    pub axis: Axis,
    /// `bins.len() + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub bins: Vec<Bin>,
    /// Posts the inclusion fraction refers to.
    pub total: usize,
    /// Posts with a valid value on this axis.
    pub valid: usize,
    pub min_count: usize,
    /// All valid values were identical; the single bin is centered on them.
    pub degenerate: bool,
}

impl ResponseCurve {
    pub fn included(&self) -> impl Iterator<Item = (usize, &Bin)> + '_ {
        self.bins.iter().enumerate().filter(|(_, b)| b.included)
    }
}

/// Smallest count reaching `fraction * total`, computed so that products that
/// land on an integer up to rounding (0.001 * 20000) do not round up.
pub fn inclusion_threshold(fraction: f64, total: usize) -> usize {
    let x = fraction * total as f64;
    libm::ceil(x - 1e-9 * x.max(1.0)).max(1.0) as usize
}

fn equal_edges(lo: f64, hi: f64, nbins: usize) -> Vec<f64> {
    let w = (hi - lo) / nbins as f64;
    let mut edges: Vec<f64> = (0..nbins).map(|k| lo + k as f64 * w).collect();
    edges.push(hi);
    edges
}

/// Index of the bin holding `v`: right-open intervals except the last, which
/// is closed. Values outside the edges return `None`.
fn locate(edges: &[f64], v: f64) -> Option<usize> {
    let n = edges.len() - 1;
    if v < edges[0] || v > edges[n] {
        return None;
    }
    let w = (edges[n] - edges[0]) / n as f64;
    let mut k = (libm::floor((v - edges[0]) / w).max(0.0) as usize).min(n - 1);
    while k + 1 < n && v >= edges[k + 1] {
        k += 1;
    }
    while k > 0 && v < edges[k] {
        k -= 1;
    }
    Some(k)
}

/// Bins `(condition, sentiment)` points. With `edges` unset the range is the
/// points' own [min, max]. `total` is the population the inclusion fraction
/// refers to.
pub fn bin_points(
    points: &[(f64, f64)],
    edges: Option<&[f64]>,
    nbins: usize,
    min_fraction: f64,
    total: usize,
) -> Result<(Vec<f64>, Vec<Bin>, bool)> {
    if nbins == 0 {
        return Err(Error::InvalidParameter("nbins must be positive".into()));
    }
    if !(0.0..=1.0).contains(&min_fraction) {
        return Err(Error::InvalidParameter("min_fraction must lie in [0, 1]".into()));
    }
    let (edges, degenerate) = match edges {
        Some(e) => {
            if e.len() < 2 || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter("bin edges must be strictly increasing".into()));
            }
            (e.to_vec(), false)
        }
        None => {
            if points.is_empty() {
                return Err(Error::EmptyInput("no valid values to bin".into()));
            }
            let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (vec![lo - 0.5, hi + 0.5], true)
            } else {
                (equal_edges(lo, hi, nbins), false)
            }
        }
    };
    let n = edges.len() - 1;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for &(v, s) in points {
        if let Some(k) = locate(&edges, v) {
            sums[k] += s;
            counts[k] += 1;
        }
    }
    let min_count = inclusion_threshold(min_fraction, total);
    let bins = (0..n)
        .map(|k| Bin {
            center: (edges[k] + edges[k + 1]) / 2.0,
            mean_sentiment: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
            count: counts[k],
            included: counts[k] >= min_count,
        })
        .collect();
    Ok((edges, bins, degenerate))
}

pub(crate) fn curve_from_points(
    points: &[(f64, f64)],
    edges: Option<&[f64]>,
    variable: Variable,
    axis: Axis,
    nbins: usize,
    min_fraction: f64,
    total: usize,
) -> Result<ResponseCurve> {
    let (edges, bins, degenerate) = bin_points(points, edges, nbins, min_fraction, total)?;
    Ok(ResponseCurve {
        variable,
        axis,
        edges,
        bins,
        total,
        valid: points.len(),
        min_count: inclusion_threshold(min_fraction, total),
        degenerate,
    })
}

/// Mean sentiment per equal-width bin of `variable` on `axis`. Bins are
/// included when they hold at least `min_fraction` of all posts passed in.
pub fn bin_response(
    tweets: &[ScoredTweet],
    variable: Variable,
    axis: Axis,
    nbins: usize,
    min_fraction: f64,
) -> Result<ResponseCurve> {
    let points: Vec<(f64, f64)> = tweets.iter().filter_map(|t| t.value(variable, axis).map(|v| (v, t.sentiment))).collect();
    curve_from_points(&points, None, variable, axis, nbins, min_fraction, tweets.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_exact() {
        assert_eq!(inclusion_threshold(0.001, 20_000), 20);
        assert_eq!(inclusion_threshold(0.001, 10_000), 10);
        assert_eq!(inclusion_threshold(0.001, 10_001), 11);
        assert_eq!(inclusion_threshold(0.001, 999), 1);
        assert_eq!(inclusion_threshold(0.0, 50), 1);
    }

    #[test]
    fn constant_sentiment() {
        let pts: Vec<(f64, f64)> = (0..1000).map(|i| (i as f64 * 30.0 / 999.0, 0.2)).collect();
        let (edges, bins, deg) = bin_points(&pts, None, 30, 0.001, 1000).unwrap();
        assert!(!deg);
        assert_eq!(edges.len(), 31);
        assert_eq!((edges[0], edges[30]), (0.0, 30.0));
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 1000);
        for b in &bins {
            assert!(b.included);
            assert!((b.mean_sentiment.unwrap() - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_bin_excluded() {
        let mut pts: Vec<(f64, f64)> = (0..5000).map(|i| (i as f64 / 5000.0, 0.1)).collect();
        pts.extend((0..5000).map(|i| (2.0 + i as f64 / 5000.0, 0.1)));
        let (_, bins, _) = bin_points(&pts, None, 30, 0.001, 10_000).unwrap();
        let empty: Vec<&Bin> = bins.iter().filter(|b| b.count == 0).collect();
        assert!(!empty.is_empty());
        assert!(empty.iter().all(|b| !b.included && b.mean_sentiment.is_none()));
    }

    #[test]
    fn max_value_in_last_bin() {
        let pts = [(0.0, 1.0), (0.5, -1.0), (3.0, 0.5)];
        let (_, bins, _) = bin_points(&pts, None, 3, 0.0, 3).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).collect::<Vec<_>>(), [2, 0, 1]);
    }

    #[test]
    fn degenerate_single_value() {
        let pts = [(4.0, 0.5), (4.0, -0.5)];
        let (edges, bins, deg) = bin_points(&pts, None, 30, 0.0, 2).unwrap();
        assert!(deg);
        assert_eq!(edges, [3.5, 4.5]);
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].mean_sentiment, Some(0.0));
    }

    #[test]
    fn bad_inputs() {
        assert!(bin_points(&[], None, 30, 0.001, 0).is_err());
        assert!(bin_points(&[(1.0, 1.0)], None, 0, 0.001, 1).is_err());
        assert!(bin_points(&[(1.0, 1.0)], Some(&[1.0, 1.0]), 1, 0.001, 1).is_err());
    }
}
