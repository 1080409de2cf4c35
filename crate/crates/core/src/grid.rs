//! Regular lat/lon daily weather grids, per-cell climatologies and the
//! z-score annotation of posts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::corpus::{Geometry, TweetRecord};
use crate::math::{cos_deg, sqrt, sum};
use crate::{Error, Result};

/// The five daily-maximum variables every post is annotated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Tmax,
    Precip,
    Wind,
    Humidity,
    Pressure,
}

impl Variable {
    pub const ALL: [Variable; 5] =
        [Variable::Tmax, Variable::Precip, Variable::Wind, Variable::Humidity, Variable::Pressure];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Tmax => "tmax",
            Variable::Precip => "precip",
            Variable::Wind => "wind",
            Variable::Humidity => "humidity",
            Variable::Pressure => "pressure",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn check(self, value: f64) -> Result<()> {
        let ok = value.is_finite()
            && match self {
                Variable::Humidity => (0.0..=100.0).contains(&value),
                Variable::Precip | Variable::Wind => value >= 0.0,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGridData(format!("{} value {value} out of range", self.name())))
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid geometry. Node `(i, j)` sits at
/// `(lat_origin + i * dlat, lon_origin + j * dlon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_origin: f64,
    pub lon_origin: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub n_lat: usize,
    pub n_lon: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dlat > 0.0 && self.dlon > 0.0) {
            return Err(Error::InvalidParameter(format!("grid steps must be positive ({}, {})", self.dlat, self.dlon)));
        }
        if self.n_lat == 0 || self.n_lon == 0 {
            return Err(Error::InvalidParameter("grid must have at least one node".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.n_lat * self.n_lon
    }

    pub fn flat(&self, lat_idx: usize, lon_idx: usize) -> usize {
        lat_idx * self.n_lon + lon_idx
    }

    pub fn unflat(&self, cell: usize) -> (usize, usize) {
        (cell / self.n_lon, cell % self.n_lon)
    }

    /// (lon, lat) of a node.
    pub fn node(&self, lat_idx: usize, lon_idx: usize) -> (f64, f64) {
        (self.lon_origin + lon_idx as f64 * self.dlon, self.lat_origin + lat_idx as f64 * self.dlat)
    }

    /// Nearest node under cos(lat)-scaled planar distance. The metric is
    /// separable on a regular grid, so each axis rounds independently.
    /// Locations more than one grid step outside the grid have no nearest node.
    pub fn nearest(&self, lon: f64, lat: f64) -> Option<usize> {
        let fi = (lat - self.lat_origin) / self.dlat;
        let fj = (lon - self.lon_origin) / self.dlon;
        let within = |f: f64, n: usize| f >= -1.0 && f <= n as f64;
        if !within(fi, self.n_lat) || !within(fj, self.n_lon) {
            return None;
        }
        let clamp = |f: f64, n: usize| (libm::round(f).max(0.0) as usize).min(n - 1);
        Some(self.flat(clamp(fi, self.n_lat), clamp(fj, self.n_lon)))
    }

    /// Nodes inside a box, boundary included.
    pub fn covered(&self, lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Vec<usize> {
        const EPS: f64 = 1e-9;
        let range = |lo: f64, hi: f64, origin: f64, step: f64, n: usize| -> Option<(usize, usize)> {
            let a = libm::ceil((lo - origin) / step - EPS).max(0.0);
            let b = libm::floor((hi - origin) / step + EPS);
            if b < 0.0 || a > b || a >= n as f64 {
                return None;
            }
            Some((a as usize, (b as usize).min(n - 1)))
        };
        let (Some((i0, i1)), Some((j0, j1))) = (
            range(lat_min, lat_max, self.lat_origin, self.dlat, self.n_lat),
            range(lon_min, lon_max, self.lon_origin, self.dlon, self.n_lon),
        ) else {
            return Vec::new();
        };
        (i0..=i1).flat_map(|i| (j0..=j1).map(move |j| (i, j))).map(|(i, j)| self.flat(i, j)).collect()
    }

    /// Nodes whose values represent a geometry: covered nodes for a box,
    /// otherwise the nearest node.
    pub fn nodes_for(&self, geometry: &Geometry) -> Vec<usize> {
        if let Geometry::BBox { lon_min, lat_min, lon_max, lat_max } = *geometry {
            let nodes = self.covered(lon_min, lat_min, lon_max, lat_max);
            if !nodes.is_empty() {
                return nodes;
            }
        }
        let (lon, lat) = geometry.center();
        self.nearest(lon, lat).into_iter().collect()
    }

    /// Planar distance (degrees of latitude) from a location to a node, with
    /// longitude scaled by the cosine of the location's latitude.
    pub fn distance(&self, lon: f64, lat: f64, cell: usize) -> f64 {
        let (i, j) = self.unflat(cell);
        let (nlon, nlat) = self.node(i, j);
        let dx = (lon - nlon) * cos_deg(lat);
        let dy = lat - nlat;
        sqrt(dx * dx + dy * dy)
    }
}

/// One day of one variable over the whole grid, row-major by latitude index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyField {
    pub date: NaiveDate,
    pub variable: Variable,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub first: Option<NaiveDate>,
    pub last: Option<NaiveDate>,
    /// Dates between `first` and `last` with no field for any variable.
    pub gaps: Vec<NaiveDate>,
    /// Per variable, fraction of (date, cell) slots that are missing, counting
    /// absent fields on dates in `first..=last` as fully missing.
    pub missing_fraction: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDataset {
    spec: GridSpec,
    fields: BTreeMap<(NaiveDate, Variable), Vec<Option<f64>>>,
}

impl GridDataset {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, fields: BTreeMap::new() })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn insert(&mut self, field: DailyField) -> Result<()> {
        if field.values.len() != self.spec.cells() {
            return Err(Error::GridMismatch(format!(
                "field {} {} has {} values, grid has {} cells",
                field.date,
                field.variable,
                field.values.len(),
                self.spec.cells()
            )));
        }
        for v in field.values.iter().flatten() {
            field.variable.check(*v)?;
        }
        let key = (field.date, field.variable);
        if self.fields.contains_key(&key) {
            return Err(Error::InvalidGridData(format!("duplicate field {} {}", field.date, field.variable)));
        }
        self.fields.insert(key, field.values);
        Ok(())
    }

    pub fn from_fields(spec: GridSpec, fields: impl IntoIterator<Item = DailyField>) -> Result<Self> {
        let mut ds = Self::new(spec)?;
        for f in fields {
            ds.insert(f)?;
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, date: NaiveDate, variable: Variable) -> Option<&[Option<f64>]> {
        self.fields.get(&(date, variable)).map(Vec::as_slice)
    }

    pub fn value(&self, date: NaiveDate, variable: Variable, cell: usize) -> Option<f64> {
        self.field(date, variable).and_then(|f| f.get(cell).copied().flatten())
    }

    /// Fields in (date, variable) order.
    pub fn fields(&self) -> impl Iterator<Item = DailyField> + '_ {
        self.fields.iter().map(|(&(date, variable), values)| DailyField { date, variable, values: values.clone() })
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        let mut last = None;
        self.fields.keys().filter_map(move |&(d, _)| {
            if last == Some(d) {
                None
            } else {
                last = Some(d);
                Some(d)
            }
        })
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        let first = self.fields.keys().next()?.0;
        let last = self.fields.keys().next_back()?.0;
        Some((first, last))
    }

    pub fn coverage(&self) -> CoverageReport {
        let Some((first, last)) = self.date_range() else {
            return CoverageReport { first: None, last: None, gaps: Vec::new(), missing_fraction: [0.0; 5] };
        };
        let present: alloc::collections::BTreeSet<NaiveDate> = self.dates().collect();
        let gaps: Vec<NaiveDate> = first.iter_days().take_while(|d| *d <= last).filter(|d| !present.contains(d)).collect();
        let days = (last - first).num_days() as usize + 1;
        let slots = (days * self.spec.cells()) as f64;
        let mut missing_fraction = [0.0; 5];
        for var in Variable::ALL {
            let observed: usize = self
                .fields
                .iter()
                .filter(|((_, v), _)| *v == var)
                .map(|(_, vals)| vals.iter().filter(|x| x.is_some()).count())
                .sum();
            missing_fraction[var.index()] = 1.0 - observed as f64 / slots;
        }
        CoverageReport { first: Some(first), last: Some(last), gaps, missing_fraction }
    }

    /// Raw values for a geometry on a date: the unweighted mean of non-missing
    /// values over covered nodes for a box, else the nearest node's value.
    pub fn conditions_at(&self, geometry: &Geometry, date: NaiveDate) -> [Option<f64>; 5] {
        let nodes = self.spec.nodes_for(geometry);
        Variable::ALL.map(|var| self.mean_over(date, var, &nodes).map(|(m, _)| m))
    }

    fn mean_over(&self, date: NaiveDate, variable: Variable, nodes: &[usize]) -> Option<(f64, Vec<usize>)> {
        let field = self.field(date, variable)?;
        let used: Vec<usize> = nodes.iter().copied().filter(|&c| field[c].is_some()).collect();
        if used.is_empty() {
            return None;
        }
        let mean = sum(used.iter().map(|&c| field[c].unwrap())) / used.len() as f64;
        Some((mean, used))
    }

    /// Mean of all non-missing values at `cells` on dates whose month is in
    /// `months` (and year in `years`, when given).
    pub fn seasonal_mean(
        &self,
        variable: Variable,
        cells: &[usize],
        months: &[u32],
        years: Option<YearWindow>,
    ) -> Option<f64> {
        let values: Vec<f64> = self
            .fields
            .iter()
            .filter(|((d, v), _)| {
                *v == variable && months.contains(&d.month()) && years.is_none_or(|w| w.contains(d.year()))
            })
            .flat_map(|(_, vals)| cells.iter().filter_map(|&c| vals.get(c).copied().flatten()))
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(sum(values.iter().copied()) / values.len() as f64)
        }
    }
}

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidParameter(format!("climatology window {start}-{end} is empty")));
        }
        Ok(Self { start, end })
    }

    /// The `years` calendar years before `study_year`.
    pub fn preceding(study_year: i32, years: i32) -> Result<Self> {
        Self::new(study_year - years, study_year - 1)
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && year <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mu: f64,
    pub sigma: f64,
    pub n_obs: usize,
    pub usable: bool,
}

pub const DEFAULT_MIN_OBS: usize = 100;

/// Per-cell, per-variable baseline mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Climatology {
    pub spec: GridSpec,
    pub window: YearWindow,
    pub min_obs: usize,
    cells: Vec<[CellStats; 5]>,
}

impl Climatology {
    /// Rebuilds a climatology from stored (variable, cell, mu, sigma, n_obs)
    /// rows; unusable flags are recomputed from `min_obs`.
    pub fn from_rows(
        spec: GridSpec,
        window: YearWindow,
        min_obs: usize,
        rows: impl IntoIterator<Item = (Variable, usize, usize, f64, f64, usize)>,
    ) -> Result<Self> {
        spec.validate()?;
        let blank = CellStats { mu: f64::NAN, sigma: f64::NAN, n_obs: 0, usable: false };
        let mut cells = vec![[blank; 5]; spec.cells()];
        for (var, i, j, mu, sigma, n_obs) in rows {
            if i >= spec.n_lat || j >= spec.n_lon {
                return Err(Error::GridMismatch(format!("climatology cell ({i}, {j}) outside grid")));
            }
            if sigma < 0.0 {
                return Err(Error::InvalidGridData(format!("negative sigma at ({i}, {j}) for {var}")));
            }
            cells[spec.flat(i, j)][var.index()] = CellStats { mu, sigma, n_obs, usable: usable(sigma, n_obs, min_obs) };
        }
        Ok(Self { spec, window, min_obs, cells })
    }

    pub fn get(&self, variable: Variable, cell: usize) -> &CellStats {
        &self.cells[cell][variable.index()]
    }

    /// Rows in (variable, lat_idx, lon_idx) order.
    pub fn rows(&self) -> impl Iterator<Item = (Variable, usize, usize, CellStats)> + '_ {
        Variable::ALL.into_iter().flat_map(move |var| {
            (0..self.spec.cells()).map(move |c| {
                let (i, j) = self.spec.unflat(c);
                (var, i, j, self.cells[c][var.index()])
            })
        })
    }
}

fn usable(sigma: f64, n_obs: usize, min_obs: usize) -> bool {
    n_obs > 0 && n_obs >= min_obs && sigma > 0.0 && sigma.is_finite()
}

pub fn compute_climatology(dataset: &GridDataset, window: YearWindow, min_obs: usize) -> Result<Climatology> {
    let spec = dataset.spec;
    let in_window: Vec<(Variable, &Vec<Option<f64>>)> = dataset
        .fields
        .iter()
        .filter(|((d, _), _)| window.contains(d.year()))
        .map(|(&(_, v), vals)| (v, vals))
        .collect();
    if in_window.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no grid data inside climatology window {}-{}",
            window.start, window.end
        )));
    }
    let mut cells = Vec::with_capacity(spec.cells());
    for c in 0..spec.cells() {
        let stats = Variable::ALL.map(|var| {
            let values: Vec<f64> =
                in_window.iter().filter(|(v, _)| *v == var).filter_map(|(_, vals)| vals[c]).collect();
            let n = values.len();
            if n == 0 {
                return CellStats { mu: f64::NAN, sigma: f64::NAN, n_obs: 0, usable: false };
            }
            let mu = sum(values.iter().copied()) / n as f64;
            let var_pop = sum(values.iter().map(|x| (x - mu) * (x - mu))) / n as f64;
            let sigma = sqrt(var_pop);
            CellStats { mu, sigma, n_obs: n, usable: usable(sigma, n, min_obs) }
        });
        cells.push(stats);
    }
    Ok(Climatology { spec, window, min_obs, cells })
}

/// `(value - mu) / sigma`, or `None` when sigma is not positive.
pub fn z_score(value: f64, mu: f64, sigma: f64) -> Option<f64> {
    if sigma > 0.0 && sigma.is_finite() {
        Some((value - mu) / sigma)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Condition {
    pub raw: Option<f64>,
    /// Baseline mean and standard deviation the z-score was computed against.
    pub baseline: Option<(f64, f64)>,
    pub z: Option<f64>,
}

impl Condition {
    pub fn is_valid(&self) -> bool {
        self.raw.is_some() && self.z.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionAnnotation {
    pub conditions: [Condition; 5],
}

impl ConditionAnnotation {
    pub fn get(&self, variable: Variable) -> &Condition {
        &self.conditions[variable.index()]
    }

    pub fn all_invalid(&self) -> bool {
        self.conditions.iter().all(|c| !c.is_valid())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationReport {
    /// One annotation per input record, in input order.
    pub annotations: Vec<ConditionAnnotation>,
    /// Records with no valid variable; analyses skip them.
    pub excluded: usize,
    /// Records dated inside (or before) the climatology window.
    pub not_after_window: usize,
}

/// Annotates one geometry/date. For boxes covering several nodes the raw
/// value, baseline mean and baseline sigma are each averaged over the nodes
/// that have data, so `z = (raw - mu) / sigma` holds for the stored baseline.
/// A variable is invalid if any contributing node has an unusable baseline.
pub fn annotate(geometry: &Geometry, date: NaiveDate, dataset: &GridDataset, climatology: &Climatology) -> ConditionAnnotation {
    let nodes = dataset.spec.nodes_for(geometry);
    let conditions = Variable::ALL.map(|var| {
        let Some((raw, used)) = dataset.mean_over(date, var, &nodes) else {
            return Condition::default();
        };
        let stats: Vec<&CellStats> = used.iter().map(|&c| climatology.get(var, c)).collect();
        if stats.iter().any(|s| !s.usable) {
            return Condition { raw: Some(raw), baseline: None, z: None };
        }
        let n = stats.len() as f64;
        let mu = sum(stats.iter().map(|s| s.mu)) / n;
        let sigma = sum(stats.iter().map(|s| s.sigma)) / n;
        let z = z_score(raw, mu, sigma);
        Condition { raw: Some(raw), baseline: z.map(|_| (mu, sigma)), z }
    });
    ConditionAnnotation { conditions }
}

pub fn annotate_tweets(records: &[TweetRecord], dataset: &GridDataset, climatology: &Climatology) -> Result<AnnotationReport> {
    if dataset.spec != climatology.spec {
        return Err(Error::GridMismatch(String::from("climatology was computed on a different grid")));
    }
    let mut excluded = 0;
    let mut not_after_window = 0;
    let annotations = records
        .iter()
        .map(|r| {
            let date = r.date();
            if date.year() <= climatology.window.end {
                not_after_window += 1;
            }
            let a = annotate(&r.geometry, date, dataset, climatology);
            if a.all_invalid() {
                excluded += 1;
            }
            a
        })
        .collect();
    Ok(AnnotationReport { annotations, excluded, not_after_window })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_lat: usize, n_lon: usize) -> GridSpec {
        GridSpec { lat_origin: 55.0, lon_origin: -4.5, dlat: 0.25, dlon: 0.25, n_lat, n_lon }
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn full_dataset(spec: GridSpec, days: &[NaiveDate], f: impl Fn(NaiveDate, Variable, usize) -> Option<f64>) -> GridDataset {
        let mut ds = GridDataset::new(spec).unwrap();
        for &d in days {
            for var in Variable::ALL {
                let values = (0..spec.cells()).map(|c| f(d, var, c)).collect();
                ds.insert(DailyField { date: d, variable: var, values }).unwrap();
            }
        }
        ds
    }

    #[test]
    fn counts_fields_and_missing() {
        let days = [day(2021, 1, 1), day(2021, 1, 2), day(2021, 1, 3)];
        let ds = full_dataset(spec(2, 2), &days, |_, var, c| if var == Variable::Wind && c == 3 { None } else { Some(1.0) });
        assert_eq!(ds.len(), 15);
        assert_eq!(ds.value(days[0], Variable::Wind, 3), None);
        assert_eq!(ds.value(days[0], Variable::Wind, 2), Some(1.0));
        let cov = ds.coverage();
        assert!(cov.gaps.is_empty());
        assert!((cov.missing_fraction[Variable::Wind.index()] - 0.25).abs() < 1e-12);
        assert_eq!(cov.missing_fraction[Variable::Tmax.index()], 0.0);
    }

    #[test]
    fn coverage_reports_gaps() {
        let days = [day(2021, 1, 1), day(2021, 1, 3)];
        let ds = full_dataset(spec(1, 1), &days, |_, _, _| Some(1.0));
        let cov = ds.coverage();
        assert_eq!(cov.gaps, [day(2021, 1, 2)]);
        assert!((cov.missing_fraction[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fields() {
        let mut ds = GridDataset::new(spec(2, 2)).unwrap();
        let f = DailyField { date: day(2021, 1, 1), variable: Variable::Tmax, values: vec![Some(1.0); 3] };
        assert!(matches!(ds.insert(f), Err(Error::GridMismatch(_))));
        let f = DailyField { date: day(2021, 1, 1), variable: Variable::Humidity, values: vec![Some(101.0); 4] };
        assert!(ds.insert(f).is_err());
        let f = DailyField { date: day(2021, 1, 1), variable: Variable::Precip, values: vec![Some(-0.1); 4] };
        assert!(ds.insert(f).is_err());
        let f = DailyField { date: day(2021, 1, 1), variable: Variable::Tmax, values: vec![None; 4] };
        ds.insert(f.clone()).unwrap();
        assert!(ds.insert(f).is_err());
        let bad = GridSpec { dlat: 0.0, ..spec(1, 1) };
        assert!(GridDataset::new(bad).is_err());
    }

    #[test]
    fn climatology_hand_values() {
        let days = [day(2015, 3, 1), day(2016, 3, 1)];
        let ds = full_dataset(spec(1, 3), &days, |d, var, c| match (c, var) {
            (0, _) => Some(10.0),
            (1, _) => Some(if d.year() == 2015 { 8.0 } else { 12.0 }),
            _ => None,
        });
        let clim = compute_climatology(&ds, YearWindow::new(2011, 2020).unwrap(), 1).unwrap();
        let c0 = clim.get(Variable::Tmax, 0);
        assert_eq!((c0.mu, c0.sigma, c0.n_obs, c0.usable), (10.0, 0.0, 2, false));
        let c1 = clim.get(Variable::Tmax, 1);
        assert_eq!((c1.mu, c1.sigma, c1.n_obs, c1.usable), (10.0, 2.0, 2, true));
        let c2 = clim.get(Variable::Tmax, 2);
        assert_eq!((c2.n_obs, c2.usable), (0, false));
        // default minimum flags the two-observation cell
        let clim = compute_climatology(&ds, YearWindow::new(2011, 2020).unwrap(), DEFAULT_MIN_OBS).unwrap();
        assert!(!clim.get(Variable::Tmax, 1).usable);
    }

    #[test]
    fn climatology_window_outside_data() {
        let ds = full_dataset(spec(1, 1), &[day(2021, 1, 1)], |_, _, _| Some(1.0));
        assert!(compute_climatology(&ds, YearWindow::new(2011, 2020).unwrap(), 1).is_err());
        assert_eq!(YearWindow::preceding(2021, 10).unwrap(), YearWindow { start: 2011, end: 2020 });
    }

    #[test]
    fn z_score_definition() {
        assert_eq!(z_score(5.0, 5.0, 2.0), Some(0.0));
        assert_eq!(z_score(9.0, 5.0, 2.0), Some(2.0));
        assert_eq!(z_score(9.0, 5.0, 0.0), None);
        assert_eq!(z_score(9.0, 5.0, -1.0), None);
        // a Glasgow-like cell where mu + 2 sigma = 22.37
        let (mu, sigma) = (15.0, 3.685);
        assert!((z_score(22.37, mu, sigma).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conditions_on_node_and_box() {
        let s = spec(2, 2);
        let d = day(2021, 6, 1);
        let tmax = [10.0, 14.0, 20.0, 30.0];
        let ds = full_dataset(s, &[d], |_, var, c| if var == Variable::Tmax { Some(tmax[c]) } else { Some(50.0) });
        // exactly on node (0, 1)
        let (lon, lat) = s.node(0, 1);
        assert_eq!(ds.conditions_at(&Geometry::Point { lon, lat }, d)[0], Some(14.0));
        // box covering the two southern nodes, boundary inclusive
        let bbox = Geometry::BBox { lon_min: -4.5, lat_min: 54.9, lon_max: -4.25, lat_max: 55.1 };
        assert_eq!(ds.conditions_at(&bbox, d)[0], Some(12.0));
        // small box between the four nodes covers none: nearest wins
        let small = Geometry::BBox { lon_min: -4.44, lat_min: 55.17, lon_max: -4.42, lat_max: 55.19 };
        assert!(s.covered(-4.44, 55.17, -4.42, 55.19).is_empty());
        assert_eq!(ds.conditions_at(&small, d)[0], Some(20.0));
        // nearest by brute force agrees
        let (clon, clat) = small.center();
        let brute = (0..4).min_by(|&a, &b| s.distance(clon, clat, a).partial_cmp(&s.distance(clon, clat, b)).unwrap()).unwrap();
        assert_eq!(brute, 2);
        // date outside the dataset
        assert_eq!(ds.conditions_at(&small, day(2022, 1, 1)), [None; 5]);
        // far outside the grid
        assert_eq!(ds.conditions_at(&Geometry::Point { lon: 10.0, lat: 40.0 }, d), [None; 5]);
    }

    #[test]
    fn box_ignores_missing_nodes() {
        let s = spec(1, 2);
        let d = day(2021, 6, 1);
        let ds = full_dataset(s, &[d], |_, _, c| if c == 0 { None } else { Some(7.0) });
        let bbox = Geometry::BBox { lon_min: -4.6, lat_min: 54.9, lon_max: -4.2, lat_max: 55.1 };
        assert_eq!(ds.conditions_at(&bbox, d)[0], Some(7.0));
        let p = Geometry::Point { lon: -4.5, lat: 55.0 };
        assert_eq!(ds.conditions_at(&p, d)[0], None);
    }

    #[test]
    fn annotation_marks_unusable_cells() {
        let s = spec(1, 1);
        let days: Vec<NaiveDate> = day(2011, 1, 1).iter_days().take(400).chain([day(2021, 7, 1)]).collect();
        let ds = full_dataset(s, &days, |d, var, _| match var {
            Variable::Pressure => Some(1000.0),
            _ => Some(if d.ordinal() % 2 == 0 { 1.0 } else { 3.0 }),
        });
        let clim = compute_climatology(&ds, YearWindow::new(2011, 2020).unwrap(), DEFAULT_MIN_OBS).unwrap();
        let a = annotate(&Geometry::Point { lon: -4.5, lat: 55.0 }, day(2021, 7, 1), &ds, &clim);
        assert!(!a.get(Variable::Pressure).is_valid());
        assert_eq!(a.get(Variable::Pressure).raw, Some(1000.0));
        for var in [Variable::Tmax, Variable::Precip, Variable::Wind, Variable::Humidity] {
            assert!(a.get(var).is_valid());
        }
    }

    #[test]
    fn seasonal_aggregation() {
        let s = spec(1, 2);
        let days: Vec<NaiveDate> = day(2020, 6, 1).iter_days().take(92).collect();
        let ds = full_dataset(s, &days, |d, _, c| {
            let base = if c == 0 { 18.71 } else { 20.88 };
            Some(base + if d.ordinal() % 2 == 0 { 1.5 } else { -1.5 })
        });
        // 92 consecutive ordinals: 46 even, 46 odd, so the offsets cancel.
        let north = ds.seasonal_mean(Variable::Tmax, &[0], &[6, 7, 8], None).unwrap();
        let south = ds.seasonal_mean(Variable::Tmax, &[1], &[6, 7, 8], None).unwrap();
        assert!((north - 18.71).abs() < 1e-9, "{north}");
        assert!((south - 20.88).abs() < 1e-9, "{south}");
    }
}
