//! Run configuration. Every threshold has a named key; omitted keys take the
//! defaults below.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use weatherlex_core::analytics::{Axis, Tiling};
use weatherlex_core::corpus::StudyWindow;
use weatherlex_core::grid::{Variable, YearWindow, DEFAULT_MIN_OBS};
use weatherlex_core::lexicon::{GraphParams, PropagationParams};
use weatherlex_core::weather_scale::TagParams;

use crate::error::{Error, Result};
use crate::formats::read_to_string;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub study: Study,
    #[serde(default)]
    pub filters: Filters,
    #[serde(default)]
    pub climatology: ClimatologyConfig,
    #[serde(default)]
    pub graph: GraphParams,
    #[serde(default)]
    pub propagation: PropagationParams,
    #[serde(default)]
    pub scales: ScalesConfig,
    #[serde(default)]
    pub curves: CurvesConfig,
    #[serde(default)]
    pub pairs: PairsConfig,
    #[serde(default)]
    pub regions: RegionsConfig,
    /// Directory holding the config; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub grid: PathBuf,
    pub grid_spec: PathBuf,
    #[serde(default)]
    pub regions: Option<PathBuf>,
    /// Sentiment seeds; the shipped defaults when unset.
    #[serde(default)]
    pub sentiment_seeds: Option<PathBuf>,
    /// Scoring rules JSON; built-in constants when unset.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    #[serde(deserialize_with = "toml_date")]
    pub start: NaiveDate,
    #[serde(deserialize_with = "toml_date")]
    pub end: NaiveDate,
}

/// Accepts both bare TOML dates and quoted `YYYY-MM-DD` strings.
fn toml_date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Native(toml::value::Datetime),
        Text(String),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Native(dt) => match (dt.date, dt.time) {
            (Some(date), None) => date.to_string(),
            _ => return Err(serde::de::Error::custom("expected a date without a time")),
        },
        Raw::Text(s) => s,
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Filters {
    pub high_volume_fraction: f64,
}

impl Default for Filters {
    fn default() -> Self {
        Self { high_volume_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClimatologyConfig {
    /// First and last reference year; unset means the `years` calendar years
    /// before the study start.
    pub start_year: Option<i32>,
    pub end_year: Option<i32>,
    pub years: i32,
    pub min_obs: usize,
}

impl Default for ClimatologyConfig {
    fn default() -> Self {
        Self { start_year: None, end_year: None, years: 10, min_obs: DEFAULT_MIN_OBS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalesConfig {
    pub band_fraction: f64,
    pub bands: usize,
    pub min_records: usize,
    pub weights: Vec<f64>,
    pub scatter_min_frequency: u64,
}

impl Default for ScalesConfig {
    fn default() -> Self {
        let t = TagParams::default();
        Self {
            band_fraction: t.band_fraction,
            bands: t.bands,
            min_records: t.min_records,
            weights: t.weights,
            scatter_min_frequency: 10,
        }
    }
}

impl ScalesConfig {
    pub fn tag_params(&self) -> TagParams {
        TagParams {
            band_fraction: self.band_fraction,
            bands: self.bands,
            min_records: self.min_records,
            weights: self.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesConfig {
    pub nbins: usize,
    pub min_fraction: f64,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        Self { nbins: 30, min_fraction: 0.001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TilingKind {
    Hex,
    Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    pub min_count: usize,
    pub tiling: TilingKind,
    /// Hex radius, or square side for the rectangular tiling.
    pub cell_size: f64,
    pub axis: Axis,
    /// Variable pairs to grid; every unordered pair when empty.
    pub pairs: Vec<[String; 2]>,
}

impl Default for PairsConfig {
    fn default() -> Self {
        Self { min_count: 5, tiling: TilingKind::Hex, cell_size: 0.25, axis: Axis::Z, pairs: Vec::new() }
    }
}

impl PairsConfig {
    pub fn tiling(&self) -> Tiling {
        match self.tiling {
            TilingKind::Hex => Tiling::Hex { size: self.cell_size },
            TilingKind::Rect => Tiling::Rect { width: self.cell_size, height: self.cell_size },
        }
    }

    pub fn variable_pairs(&self) -> Result<Vec<(Variable, Variable)>> {
        if self.pairs.is_empty() {
            let all = Variable::ALL;
            return Ok((0..5).flat_map(|i| (i + 1..5).map(move |j| (all[i], all[j]))).collect());
        }
        self.pairs
            .iter()
            .map(|[a, b]| {
                let (a, b) = (variable(a)?, variable(b)?);
                if a == b {
                    return Err(Error::Config(format!("pair ({a}, {b}) repeats a variable")));
                }
                Ok((a, b))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsConfig {
    pub overlap_threshold: f64,
    pub groups: [String; 2],
    /// Variables compared across groups; all five when empty.
    pub variables: Vec<String>,
}

impl Default for RegionsConfig {
    fn default() -> Self {
        Self { overlap_threshold: 0.5, groups: ["North".into(), "South".into()], variables: Vec::new() }
    }
}

impl RegionsConfig {
    pub fn variables(&self) -> Result<Vec<Variable>> {
        if self.variables.is_empty() {
            return Ok(Variable::ALL.to_vec());
        }
        self.variables.iter().map(|v| variable(v)).collect()
    }
}

pub fn variable(name: &str) -> Result<Variable> {
    Variable::from_name(name).ok_or_else(|| Error::Config(format!("unknown variable {name:?}")))
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.paths.out)
    }

    pub fn study_window(&self) -> Result<StudyWindow> {
        StudyWindow::new(self.study.start, self.study.end).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn climatology_window(&self) -> Result<YearWindow> {
        use chrono::Datelike;
        let c = &self.climatology;
        let w = match (c.start_year, c.end_year) {
            (Some(a), Some(b)) => YearWindow::new(a, b),
            (None, None) => YearWindow::preceding(self.study.start.year(), c.years),
            _ => return Err(Error::Config("set both climatology.start_year and end_year, or neither".into())),
        };
        w.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.study_window()?;
        self.climatology_window()?;
        let f = self.filters.high_volume_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad("filters.high_volume_fraction must lie in (0, 1)");
        }
        if self.graph.window == 0 || self.graph.k_neighbors == 0 {
            return bad("graph.window and graph.k_neighbors must be positive");
        }
        let p = &self.propagation;
        if !(p.continue_prob > 0.0 && p.continue_prob < 1.0) || !(p.tol > 0.0) || p.max_iter == 0 {
            return bad("propagation needs continue_prob in (0, 1), tol > 0 and max_iter > 0");
        }
        let s = &self.scales;
        if !(s.band_fraction > 0.0 && s.band_fraction < 1.0) || s.bands == 0 || s.weights.len() != s.bands {
            return bad("scales needs band_fraction in (0, 1) and one weight per band");
        }
        if s.weights.iter().any(|w| !(*w > 0.0)) {
            return bad("scales.weights must be positive");
        }
        if self.curves.nbins == 0 || !(0.0..=1.0).contains(&self.curves.min_fraction) {
            return bad("curves needs nbins > 0 and min_fraction in [0, 1]");
        }
        if !(self.pairs.cell_size > 0.0) {
            return bad("pairs.cell_size must be positive");
        }
        self.pairs.variable_pairs()?;
        let r = &self.regions;
        if !(r.overlap_threshold > 0.0 && r.overlap_threshold <= 1.0) {
            return bad("regions.overlap_threshold must lie in (0, 1]");
        }
        if r.groups[0] == r.groups[1] {
            return bad("regions.groups must name two different groups");
        }
        r.variables()?;
        Ok(())
    }
}
