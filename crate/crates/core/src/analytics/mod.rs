//! Aggregate views of scored posts: binned response curves, pairwise
//! condition grids and regional comparisons.

use serde::{Deserialize, Serialize};

mod curve;
mod pairs;
mod regional;

pub use curve::{bin_points, bin_response, inclusion_threshold, Bin, ResponseCurve};
pub use pairs::{hex_center, hex_cell, pair_grid, PairCell, PairGrid, Tiling};
pub use regional::{normalize_sentiment, regional_compare, GroupCurves, Normalized, RegionalComparison};

/// Whether a condition is read in physical units or as a climatological z-score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Raw,
    Z,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Raw => "raw",
            Axis::Z => "z",
        }
    }
}
