use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Axis;
use crate::grid::Variable;
use crate::scorer::ScoredTweet;
use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Tiling of the (a, b) condition plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tiling {
    /// Pointy-top hexagons with the given center-to-corner radius.
    Hex { size: f64 },
    Rect { width: f64, height: f64 },
}

impl Tiling {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Tiling::Hex { size } => size > 0.0 && size.is_finite(),
            Tiling::Rect { width, height } => width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("cell size must be positive".into()))
        }
    }

    /// Cell coordinates holding a point.
    pub fn cell(&self, x: f64, y: f64) -> (i64, i64) {
        match *self {
            Tiling::Hex { size } => hex_cell(x, y, size),
            Tiling::Rect { width, height } => (libm::floor(x / width) as i64, libm::floor(y / height) as i64),
        }
    }

    pub fn center(&self, q: i64, r: i64) -> (f64, f64) {
        match *self {
            Tiling::Hex { size } => hex_center(q, r, size),
            Tiling::Rect { width, height } => ((q as f64 + 0.5) * width, (r as f64 + 0.5) * height),
        }
    }
}

/// Center of axial hex `(q, r)`.
pub fn hex_center(q: i64, r: i64, size: f64) -> (f64, f64) {
    let (q, r) = (q as f64, r as f64);
    (size * SQRT3 * (q + r / 2.0), size * 1.5 * r)
}

/// Axial coordinates of the hex whose center is nearest `(x, y)`.
pub fn hex_cell(x: f64, y: f64, size: f64) -> (i64, i64) {
    let q = (SQRT3 / 3.0 * x - y / 3.0) / size;
    let r = (2.0 / 3.0 * y) / size;
    // cube rounding
    let s = -q - r;
    let (mut rq, mut rr, rs) = (libm::round(q), libm::round(r), libm::round(s));
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i64, rr as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub q: i64,
    pub r: i64,
    pub center_a: f64,
    pub center_b: f64,
    pub mean_sentiment: f64,
    pub count: usize,
    pub suppressed: bool,
}

/// Mean sentiment over a tiling of two conditions. Only occupied cells are
/// listed, ordered by `(q, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGrid {
    pub var_a: Variable,
    pub var_b: Variable,
    pub axis: Axis,
    pub tiling: Tiling,
    pub min_count: usize,
    pub cells: Vec<PairCell>,
}

impl PairGrid {
    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }
}

/// Tiles posts valid on both variables. Cells with fewer than `min_count`
/// posts are marked suppressed.
pub fn pair_grid(
    tweets: &[ScoredTweet],
    var_a: Variable,
    var_b: Variable,
    axis: Axis,
    tiling: Tiling,
    min_count: usize,
) -> Result<PairGrid> {
    tiling.validate()?;
    let mut acc: BTreeMap<(i64, i64), (f64, usize)> = BTreeMap::new();
    for t in tweets {
        let (Some(a), Some(b)) = (t.value(var_a, axis), t.value(var_b, axis)) else {
            continue;
        };
        let e = acc.entry(tiling.cell(a, b)).or_default();
        e.0 += t.sentiment;
        e.1 += 1;
    }
    if acc.is_empty() {
        return Err(Error::EmptyInput(alloc::format!("no post has valid {var_a} and {var_b}")));
    }
    let cells = acc
        .into_iter()
        .map(|((q, r), (sum, count))| {
            let (center_a, center_b) = tiling.center(q, r);
            PairCell { q, r, center_a, center_b, mean_sentiment: sum / count as f64, count, suppressed: count < min_count }
        })
        .collect();
    Ok(PairGrid { var_a, var_b, axis, tiling, min_count, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_round_trip() {
        for q in -4..=4 {
            for r in -4..=4 {
                let (x, y) = hex_center(q, r, 0.25);
                assert_eq!(hex_cell(x, y, 0.25), (q, r));
            }
        }
    }

    #[test]
    fn rect_cells() {
        let t = Tiling::Rect { width: 0.5, height: 1.0 };
        assert_eq!(t.cell(0.74, -0.2), (1, -1));
        assert_eq!(t.center(1, -1), (0.75, -0.5));
    }

    #[test]
    fn invalid_tiling() {
        assert!(Tiling::Hex { size: 0.0 }.validate().is_err());
        assert!(Tiling::Rect { width: 1.0, height: -1.0 }.validate().is_err());
    }
}
