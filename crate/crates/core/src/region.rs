//! Named planar regions and overlap-based assignment of posts to them.
//!
//! Areas are planar with longitudes scaled by `cos(latitude)` at the
//! geometry's center, which is accurate enough at the scale of a country.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Geometry;
use crate::math::cos_deg;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub group: String,
    /// Exterior ring as (lon, lat) vertices, not repeating the first vertex.
    pub ring: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(name: impl Into<String>, group: impl Into<String>, mut ring: Vec<(f64, f64)>) -> Result<Self> {
        let name = name.into();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(Error::InvalidRegion(format!("region {name:?} has fewer than 3 vertices")));
        }
        if ring.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidRegion(format!("region {name:?} has a non-finite vertex")));
        }
        if signed_area(&ring) == 0.0 {
            return Err(Error::InvalidRegion(format!("region {name:?} has zero area")));
        }
        if !is_simple(&ring) {
            return Err(Error::InvalidRegion(format!("region {name:?} is self-intersecting")));
        }
        Ok(Self { name, group: group.into(), ring })
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        bounds(&self.ring)
    }

    /// Point-in-polygon by ray casting; points on the boundary count as inside.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        matches!(locate(&self.ring, (lon, lat)), Location::Inside | Location::Boundary)
    }

    /// Planar area of `self ∩ bbox`, in the same scaled units as [`bbox_area`].
    pub fn bbox_overlap_area(&self, lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> f64 {
        let (rx0, ry0, rx1, ry1) = self.bounds();
        if rx1 < lon_min || rx0 > lon_max || ry1 < lat_min || ry0 > lat_max {
            return 0.0;
        }
        let scale = cos_deg((lat_min + lat_max) / 2.0);
        let clipped = clip_to_rect(&self.ring, lon_min, lat_min, lon_max, lat_max);
        signed_area(&clipped).abs() * scale
    }
}

pub fn bbox_area(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> f64 {
    (lon_max - lon_min) * (lat_max - lat_min) * cos_deg((lat_min + lat_max) / 2.0)
}

/// Non-overlapping named regions, each tagged with a group label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionSet {
    regions: Vec<Region>,
}

impl RegionSet {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for r in &regions {
            if !names.insert(r.name.as_str()) {
                return Err(Error::InvalidRegion(format!("duplicate region name {:?}", r.name)));
            }
        }
        for (i, a) in regions.iter().enumerate() {
            for b in &regions[i + 1..] {
                if overlaps(&a.ring, &b.ring) {
                    return Err(Error::InvalidRegion(format!("regions {:?} and {:?} overlap", a.name, b.name)));
                }
            }
        }
        Ok(Self { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn get(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn group_of(&self, name: &str) -> Option<&str> {
        self.get(name).map(|r| r.group.as_str())
    }

    pub fn groups(&self) -> BTreeSet<&str> {
        self.regions.iter().map(|r| r.group.as_str()).collect()
    }

    /// Assigns a geometry to at most one region.
    ///
    /// Points (and zero-area boxes, via their center) go to the containing
    /// region. Boxes go to the region holding at least `overlap_threshold` of
    /// their area; if no region or more than one region qualifies, the record
    /// is ambiguous and gets `None`.
    pub fn assign(&self, geometry: &Geometry, overlap_threshold: f64) -> Option<&Region> {
        if geometry.is_degenerate() {
            let (lon, lat) = geometry.center();
            return self.regions.iter().find(|r| r.contains(lon, lat));
        }
        let Geometry::BBox { lon_min, lat_min, lon_max, lat_max } = *geometry else {
            unreachable!("points are degenerate");
        };
        let total = bbox_area(lon_min, lat_min, lon_max, lat_max);
        let mut hits = self
            .regions
            .iter()
            .filter(|r| r.bbox_overlap_area(lon_min, lat_min, lon_max, lat_max) >= overlap_threshold * total * (1.0 - 1e-9));
        match (hits.next(), hits.next()) {
            (Some(r), None) => Some(r),
            _ => None,
        }
    }
}

pub fn assign_region<'a>(geometry: &Geometry, regions: &'a RegionSet, overlap_threshold: f64) -> Option<&'a str> {
    regions.assign(geometry, overlap_threshold).map(|r| r.name.as_str())
}

fn bounds(ring: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    ring.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(x0, y0, x1, y1), &(x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
    )
}

fn signed_area(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Inside,
    Boundary,
    Outside,
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    cross(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

fn locate(ring: &[(f64, f64)], p: (f64, f64)) -> Location {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if on_segment(p, a, b) {
            return Location::Boundary;
        }
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_touch(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

fn segments_cross(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn is_simple(ring: &[(f64, f64)]) -> bool {
    let n = ring.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_touch(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Interior overlap test for two simple polygons. Shared edges and touching
/// vertices are allowed.
fn overlaps(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    let (ax0, ay0, ax1, ay1) = bounds(a);
    let (bx0, by0, bx1, by1) = bounds(b);
    if ax1 <= bx0 || bx1 <= ax0 || ay1 <= by0 || by1 <= ay0 {
        return false;
    }
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segments_cross(a[i], a[(i + 1) % a.len()], b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    let probes = |ring: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let n = ring.len();
        let mut pts: Vec<(f64, f64)> = ring.to_vec();
        pts.extend((0..n).map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0)
        }));
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
        pts.push((sx / n as f64, sy / n as f64));
        pts
    };
    // the vertex centroid is only a useful probe for the polygon it came from
    let inside_own = |ring: &[(f64, f64)], p| locate(ring, p) == Location::Inside;
    let pa = probes(a);
    let pb = probes(b);
    let ca = *pa.last().unwrap();
    let cb = *pb.last().unwrap();
    pa[..pa.len() - 1].iter().any(|&p| locate(b, p) == Location::Inside)
        || pb[..pb.len() - 1].iter().any(|&p| locate(a, p) == Location::Inside)
        || (inside_own(a, ca) && locate(b, ca) == Location::Inside)
        || (inside_own(b, cb) && locate(a, cb) == Location::Inside)
}

/// Sutherland-Hodgman clip of an arbitrary simple polygon to an axis-aligned
/// rectangle. The result may contain degenerate edges, which do not affect
/// its area.
fn clip_to_rect(ring: &[(f64, f64)], x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<(f64, f64)> {
    #[derive(Clone, Copy)]
    enum Edge {
        Left(f64),
        Right(f64),
        Bottom(f64),
        Top(f64),
    }
    fn inside(e: Edge, p: (f64, f64)) -> bool {
        match e {
            Edge::Left(x) => p.0 >= x,
            Edge::Right(x) => p.0 <= x,
            Edge::Bottom(y) => p.1 >= y,
            Edge::Top(y) => p.1 <= y,
        }
    }
    fn intersect(e: Edge, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        match e {
            Edge::Left(x) | Edge::Right(x) => {
                let t = (x - a.0) / (b.0 - a.0);
                (x, a.1 + t * (b.1 - a.1))
            }
            Edge::Bottom(y) | Edge::Top(y) => {
                let t = (y - a.1) / (b.1 - a.1);
                (a.0 + t * (b.0 - a.0), y)
            }
        }
    }
    let mut out: Vec<(f64, f64)> = ring.to_vec();
    for edge in [Edge::Left(x0), Edge::Right(x1), Edge::Bottom(y0), Edge::Top(y1)] {
        if out.is_empty() {
            break;
        }
        let input = core::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            match (inside(edge, prev), inside(edge, cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(intersect(edge, prev, cur)),
                (false, true) => {
                    out.push(intersect(edge, prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rect(name: &str, group: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Region {
        Region::new(name, group, vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]).unwrap()
    }

    fn uk_like() -> RegionSet {
        RegionSet::new(vec![
            rect("Scotland", "North", -6.0, 55.0, -1.0, 59.0),
            rect("London", "South", -0.5, 51.3, 0.3, 51.7),
            // L-shaped, non-convex
            Region::new(
                "Wales",
                "West",
                vec![(-5.0, 51.0), (-3.0, 51.0), (-3.0, 52.0), (-4.0, 52.0), (-4.0, 53.0), (-5.0, 53.0)],
            )
            .unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn bbox_inside_region() {
        let rs = uk_like();
        let g = Geometry::BBox { lon_min: -4.0, lat_min: 56.0, lon_max: -3.0, lat_max: 57.0 };
        assert_eq!(assign_region(&g, &rs, 0.5), Some("Scotland"));
    }

    #[test]
    fn point_in_london() {
        let rs = uk_like();
        let g = Geometry::Point { lon: -0.12, lat: 51.5 };
        assert_eq!(assign_region(&g, &rs, 0.5), Some("London"));
        let g = Geometry::Point { lon: 10.0, lat: 51.5 };
        assert_eq!(assign_region(&g, &rs, 0.5), None);
    }

    #[test]
    fn forty_percent_overlap_is_rejected() {
        // bbox lon [-1.4, -0.4] x lat [57, 58]: 0.4 of its width lies in Scotland.
        let rs = uk_like();
        let g = Geometry::BBox { lon_min: -1.4, lat_min: 57.0, lon_max: -0.4, lat_max: 58.0 };
        let r = rs.get("Scotland").unwrap();
        let frac = r.bbox_overlap_area(-1.4, 57.0, -0.4, 58.0) / bbox_area(-1.4, 57.0, -0.4, 58.0);
        assert!((frac - 0.4).abs() < 1e-12, "{frac}");
        assert_eq!(assign_region(&g, &rs, 0.5), None);
        assert_eq!(assign_region(&g, &rs, 0.4), Some("Scotland"));
    }

    #[test]
    fn non_convex_overlap_area() {
        // bbox over the notch of the L: lon [-4.5,-3.5] lat [51.5,52.5].
        // Inside the L: [-4.5,-3.5]x[51.5,52.0] (0.5) + [-4.5,-4.0]x[52.0,52.5] (0.25) = 0.75.
        let rs = uk_like();
        let r = rs.get("Wales").unwrap();
        let frac = r.bbox_overlap_area(-4.5, 51.5, -3.5, 52.5) / bbox_area(-4.5, 51.5, -3.5, 52.5);
        assert!((frac - 0.75).abs() < 1e-12, "{frac}");
    }

    #[test]
    fn degenerate_bbox_uses_center() {
        let rs = uk_like();
        let g = Geometry::BBox { lon_min: -0.2, lat_min: 51.5, lon_max: 0.0, lat_max: 51.5 };
        assert_eq!(assign_region(&g, &rs, 0.5), Some("London"));
    }

    #[test]
    fn even_split_is_ambiguous() {
        let rs = RegionSet::new(vec![rect("A", "g", 0.0, 0.0, 1.0, 1.0), rect("B", "g", 1.0, 0.0, 2.0, 1.0)]).unwrap();
        let g = Geometry::BBox { lon_min: 0.5, lat_min: 0.25, lon_max: 1.5, lat_max: 0.75 };
        assert_eq!(assign_region(&g, &rs, 0.5), None);
        // shared edge point belongs to the first region listed
        assert_eq!(assign_region(&Geometry::Point { lon: 1.0, lat: 0.5 }, &rs, 0.5), Some("A"));
    }

    #[test]
    fn invalid_region_sets() {
        assert!(Region::new("bow", "g", vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(Region::new("line", "g", vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        let dup = RegionSet::new(vec![rect("A", "g", 0.0, 0.0, 1.0, 1.0), rect("A", "g", 2.0, 0.0, 3.0, 1.0)]);
        assert!(dup.is_err());
        let over = RegionSet::new(vec![rect("A", "g", 0.0, 0.0, 1.0, 1.0), rect("B", "g", 0.5, 0.5, 1.5, 1.5)]);
        assert!(over.is_err());
        let same = RegionSet::new(vec![rect("A", "g", 0.0, 0.0, 1.0, 1.0), rect("B", "g", 0.0, 0.0, 1.0, 1.0)]);
        assert!(same.is_err());
        let nested = RegionSet::new(vec![rect("A", "g", 0.0, 0.0, 3.0, 3.0), rect("B", "g", 1.0, 1.0, 2.0, 2.0)]);
        assert!(nested.is_err());
    }

    #[test]
    fn closed_ring_accepted() {
        let r = Region::new("sq", "g", vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]).unwrap();
        assert_eq!(r.ring.len(), 4);
    }
}
