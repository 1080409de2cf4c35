//! On-disk formats. Every writer has a matching reader so artifacts can be
//! loaded back by later stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use weatherlex_core::analytics::{PairCell, RegionalComparison, ResponseCurve};
use weatherlex_core::corpus::{Geometry, StudyWindow, TweetRecord};
use weatherlex_core::grid::{Climatology, Condition, ConditionAnnotation, DailyField, GridDataset, GridSpec, Variable, YearWindow};
use weatherlex_core::lexicon::{Lexicon, SeedSet};
use weatherlex_core::region::{Region, RegionSet};
use weatherlex_core::scorer::{ScoredTweet, ScoringRules};
use weatherlex_core::weather_scale::ScatterRow;

use crate::error::{Error, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str) -> std::result::Result<Option<f64>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<f64>().map(Some).map_err(|_| format!("not a number: {field:?}"))
}

fn parse_num<T: std::str::FromStr>(field: &str, what: &str) -> std::result::Result<T, String> {
    field.trim().parse().map_err(|_| format!("bad {what}: {field:?}"))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes())
}

fn check_header(path: &Path, rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::format(path, format!("expected header {:?}", expected.join(","))));
    }
    Ok(())
}

fn rows<'a, 'b>(
    path: &'a Path,
    rdr: &'a mut csv::Reader<&'b [u8]>,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + use<'a, 'b> {
    rdr.records().map(move |r| {
        let r = r.map_err(|e| Error::format(path, e.to_string()))?;
        let line = r.position().map(|p| p.line() as usize).unwrap_or(0);
        Ok((line, r))
    })
}

fn at_line(path: &Path, line: usize, msg: String) -> Error {
    Error::format(path, format!("line {line}: {msg}"))
}

struct CsvOut(csv::Writer<Vec<u8>>);

impl CsvOut {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        CsvOut(w)
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

// ---------------------------------------------------------------------------
// corpus

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    MalformedJson,
    MissingField,
    BadTimestamp,
    BadGeometry,
    EmptyId,
    OutsideWindow,
    DuplicateId,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::MalformedJson => "MALFORMED_JSON",
            RejectReason::MissingField => "MISSING_FIELD",
            RejectReason::BadTimestamp => "BAD_TIMESTAMP",
            RejectReason::BadGeometry => "BAD_GEOMETRY",
            RejectReason::EmptyId => "EMPTY_ID",
            RejectReason::OutsideWindow => "OUTSIDE_WINDOW",
            RejectReason::DuplicateId => "DUPLICATE_ID",
        }
    }

    /// Whether the line itself is broken, as opposed to a valid record that
    /// was not kept.
    pub fn is_malformed(self) -> bool {
        !matches!(self, RejectReason::OutsideWindow | RejectReason::DuplicateId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: RejectReason,
    pub detail: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}\t{}\t{}", self.line, self.reason.code(), self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCorpus {
    pub records: Vec<TweetRecord>,
    pub rejections: Vec<Rejection>,
    /// Non-blank lines read.
    pub lines: usize,
}

impl ParsedCorpus {
    pub fn rejection_log(&self) -> String {
        self.rejections.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
    #[error("{malformed} of {lines} lines are malformed; first: {first}")]
    TooManyMalformed { malformed: usize, lines: usize, first: Rejection },
}

fn str_field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> std::result::Result<&'a str, (RejectReason, String)> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err((RejectReason::MalformedJson, format!("field {key:?} is not a string"))),
        None => Err((RejectReason::MissingField, format!("missing field {key:?}"))),
    }
}

fn parse_geometry(v: Option<&Value>) -> std::result::Result<Geometry, (RejectReason, String)> {
    let bad = |m: &str| (RejectReason::BadGeometry, m.to_string());
    let obj = match v {
        Some(Value::Object(o)) => o,
        Some(_) => return Err(bad("geo is not an object")),
        None => return Err((RejectReason::MissingField, "missing field \"geo\"".into())),
    };
    let kind = obj.get("type").and_then(Value::as_str).ok_or_else(|| bad("geo.type missing"))?;
    let coords: Vec<f64> = obj
        .get("coords")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("geo.coords missing"))?
        .iter()
        .map(|c| c.as_f64().ok_or_else(|| bad("geo.coords holds a non-number")))
        .collect::<std::result::Result<_, _>>()?;
    let g = match (kind, coords.as_slice()) {
        ("point", &[lon, lat]) => Geometry::Point { lon, lat },
        ("bbox", &[lon_min, lat_min, lon_max, lat_max]) => Geometry::BBox { lon_min, lat_min, lon_max, lat_max },
        ("point" | "bbox", _) => return Err(bad("wrong number of coordinates")),
        _ => return Err(bad("geo.type must be \"point\" or \"bbox\"")),
    };
    g.validate().map_err(|e| (RejectReason::BadGeometry, e.to_string()))?;
    Ok(g)
}

fn parse_line(line: &str) -> std::result::Result<TweetRecord, (RejectReason, String)> {
    let v: Value = serde_json::from_str(line).map_err(|e| (RejectReason::MalformedJson, e.to_string()))?;
    let Value::Object(obj) = v else {
        return Err((RejectReason::MalformedJson, "line is not a JSON object".into()));
    };
    let id = str_field(&obj, "id")?;
    if id.trim().is_empty() {
        return Err((RejectReason::EmptyId, "id is empty".into()));
    }
    let ts = str_field(&obj, "ts")?;
    let timestamp = DateTime::parse_from_rfc3339(ts)
        .map_err(|e| (RejectReason::BadTimestamp, format!("{ts:?}: {e}")))?
        .with_timezone(&Utc);
    let text = str_field(&obj, "text")?;
    let handle = str_field(&obj, "handle")?;
    let display = str_field(&obj, "display")?;
    let geometry = parse_geometry(obj.get("geo"))?;
    Ok(TweetRecord {
        id: id.to_string(),
        timestamp,
        text: text.to_string(),
        author_handle: handle.to_string(),
        author_display: display.to_string(),
        geometry,
    })
}

/// Reads line-delimited records. Broken lines are logged and skipped,
/// records outside `window` are logged, and repeated ids keep the first
/// occurrence. More than half the lines being malformed is fatal.
pub fn parse_corpus(input: impl BufRead, window: Option<&StudyWindow>) -> std::result::Result<ParsedCorpus, ParseError> {
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    let mut seen = BTreeSet::new();
    let mut lines = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let reject = |reason, detail| Rejection { line: n, reason, detail };
        match parse_line(&line) {
            Err((reason, detail)) => rejections.push(reject(reason, detail)),
            Ok(r) if window.is_some_and(|w| !w.contains(&r.timestamp)) => {
                rejections.push(reject(RejectReason::OutsideWindow, format!("id {:?} at {}", r.id, r.timestamp)))
            }
            Ok(r) if seen.contains(&r.id) => rejections.push(reject(RejectReason::DuplicateId, format!("id {:?}", r.id))),
            Ok(r) => {
                seen.insert(r.id.clone());
                records.push(r);
            }
        }
    }
    let malformed = rejections.iter().filter(|r| r.reason.is_malformed()).count();
    if 2 * malformed > lines {
        let first = rejections.iter().find(|r| r.reason.is_malformed()).cloned().expect("malformed > 0");
        return Err(ParseError::TooManyMalformed { malformed, lines, first });
    }
    Ok(ParsedCorpus { records, rejections, lines })
}

pub fn read_corpus(path: &Path, window: Option<&StudyWindow>) -> Result<ParsedCorpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(io::BufReader::new(file), window).map_err(|e| match e {
        ParseError::Io(e) => Error::io(path, e),
        e => Error::format(path, e.to_string()),
    })
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Serialize)]
struct GeoOut<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    coords: Vec<f64>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    ts: String,
    text: &'a str,
    handle: &'a str,
    display: &'a str,
    geo: GeoOut<'a>,
}

pub fn corpus_line(r: &TweetRecord) -> String {
    let geo = match r.geometry {
        Geometry::Point { lon, lat } => GeoOut { kind: "point", coords: vec![lon, lat] },
        Geometry::BBox { lon_min, lat_min, lon_max, lat_max } => {
            GeoOut { kind: "bbox", coords: vec![lon_min, lat_min, lon_max, lat_max] }
        }
    };
    let out = RecordOut {
        id: &r.id,
        ts: format_timestamp(&r.timestamp),
        text: &r.text,
        handle: &r.author_handle,
        display: &r.author_display,
        geo,
    };
    serde_json::to_string(&out).expect("serializable record")
}

pub fn write_corpus(records: &[TweetRecord]) -> String {
    records.iter().map(|r| corpus_line(r) + "\n").collect()
}

// ---------------------------------------------------------------------------
// regions

#[derive(Serialize, Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    properties: FeatureProps,
    geometry: PolygonGeometry,
}

#[derive(Serialize, Deserialize)]
struct FeatureProps {
    name: String,
    group: String,
}

#[derive(Serialize, Deserialize)]
struct PolygonGeometry {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

pub fn parse_regions(path: &Path, text: &str) -> Result<RegionSet> {
    let fc: FeatureCollection = serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::format(path, "expected a FeatureCollection"));
    }
    let mut regions = Vec::with_capacity(fc.features.len());
    for f in fc.features {
        if f.geometry.kind != "Polygon" {
            return Err(Error::format(path, format!("region {:?}: only Polygon geometries are supported", f.properties.name)));
        }
        let Some(outer) = f.geometry.coordinates.into_iter().next() else {
            return Err(Error::format(path, format!("region {:?} has no ring", f.properties.name)));
        };
        let ring = outer.into_iter().map(|[lon, lat]| (lon, lat)).collect();
        regions.push(Region::new(f.properties.name, f.properties.group, ring)?);
    }
    Ok(RegionSet::new(regions)?)
}

pub fn read_regions(path: &Path) -> Result<RegionSet> {
    parse_regions(path, &read_to_string(path)?)
}

pub fn write_regions(regions: &RegionSet) -> String {
    let features = regions
        .regions()
        .iter()
        .map(|r| {
            let mut ring: Vec<[f64; 2]> = r.ring.iter().map(|&(lon, lat)| [lon, lat]).collect();
            ring.push(ring[0]);
            Feature {
                kind: "Feature".into(),
                properties: FeatureProps { name: r.name.clone(), group: r.group.clone() },
                geometry: PolygonGeometry { kind: "Polygon".into(), coordinates: vec![ring] },
            }
        })
        .collect();
    json_pretty(&FeatureCollection { kind: "FeatureCollection".into(), features })
}

// ---------------------------------------------------------------------------
// grid

pub const GRID_HEADER: [&str; 5] = ["date", "variable", "lat_idx", "lon_idx", "value"];

pub fn read_grid_spec(path: &Path) -> Result<GridSpec> {
    let spec: GridSpec = serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_grid_spec(spec: &GridSpec) -> String {
    json_pretty(spec)
}

pub fn parse_grid(path: &Path, spec: GridSpec, text: &str) -> Result<GridDataset> {
    spec.validate()?;
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &GRID_HEADER)?;
    let mut fields: BTreeMap<(NaiveDate, Variable), Vec<Option<f64>>> = BTreeMap::new();
    let mut seen: BTreeSet<(NaiveDate, Variable, usize)> = BTreeSet::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let parsed = (|| -> std::result::Result<_, String> {
            let date: NaiveDate = parse_num(&r[0], "date")?;
            let var = Variable::from_name(r[1].trim()).ok_or_else(|| format!("unknown variable {:?}", &r[1]))?;
            let i: usize = parse_num(&r[2], "lat_idx")?;
            let j: usize = parse_num(&r[3], "lon_idx")?;
            if i >= spec.n_lat || j >= spec.n_lon {
                return Err(format!("cell ({i}, {j}) outside the {}x{} grid", spec.n_lat, spec.n_lon));
            }
            Ok((date, var, i, j, parse_opt(&r[4])?))
        })();
        let (date, var, i, j, value) = parsed.map_err(|m| at_line(path, line, m))?;
        let cell = spec.flat(i, j);
        if !seen.insert((date, var, cell)) {
            return Err(at_line(path, line, format!("duplicate value for {date} {var} ({i}, {j})")));
        }
        fields.entry((date, var)).or_insert_with(|| vec![None; spec.cells()])[cell] = value;
    }
    let fields = fields.into_iter().map(|((date, variable), values)| DailyField { date, variable, values });
    GridDataset::from_fields(spec, fields).map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_grid(csv_path: &Path, spec_path: &Path) -> Result<GridDataset> {
    let spec = read_grid_spec(spec_path)?;
    parse_grid(csv_path, spec, &read_to_string(csv_path)?)
}

pub fn write_grid(dataset: &GridDataset) -> String {
    let spec = dataset.spec();
    let mut out = CsvOut::new(&GRID_HEADER);
    for f in dataset.fields() {
        let date = f.date.to_string();
        for (cell, v) in f.values.iter().enumerate() {
            let (i, j) = spec.unflat(cell);
            out.row([date.as_str(), f.variable.name(), &i.to_string(), &j.to_string(), &opt(*v)]);
        }
    }
    out.finish()
}

// ---------------------------------------------------------------------------
// climatology

pub const CLIMATOLOGY_HEADER: [&str; 6] = ["variable", "lat_idx", "lon_idx", "mu", "sigma", "n_obs"];

pub fn write_climatology(c: &Climatology) -> String {
    let mut s = format!("# window: {}-{}\n# min_obs: {}\n", c.window.start, c.window.end, c.min_obs);
    let mut out = CsvOut::new(&CLIMATOLOGY_HEADER);
    let finite = |x: f64| if x.is_finite() { x.to_string() } else { String::new() };
    for (var, i, j, st) in c.rows() {
        out.row([var.name(), &i.to_string(), &j.to_string(), &finite(st.mu), &finite(st.sigma), &st.n_obs.to_string()]);
    }
    s.push_str(&out.finish());
    s
}

fn comment_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix(key)?.strip_prefix(':').map(str::trim))
}

pub fn parse_climatology(path: &Path, spec: GridSpec, text: &str) -> Result<Climatology> {
    let window = comment_value(text, "window")
        .and_then(|w| {
            let (a, b) = w.split_once('-')?;
            YearWindow::new(a.trim().parse().ok()?, b.trim().parse().ok()?).ok()
        })
        .ok_or_else(|| Error::format(path, "missing or bad '# window: START-END' header"))?;
    let min_obs = comment_value(text, "min_obs")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format(path, "missing or bad '# min_obs: N' header"))?;
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &CLIMATOLOGY_HEADER)?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let parsed = (|| -> std::result::Result<_, String> {
            let var = Variable::from_name(r[0].trim()).ok_or_else(|| format!("unknown variable {:?}", &r[0]))?;
            Ok((
                var,
                parse_num(&r[1], "lat_idx")?,
                parse_num(&r[2], "lon_idx")?,
                parse_opt(&r[3])?.unwrap_or(f64::NAN),
                parse_opt(&r[4])?.unwrap_or(f64::NAN),
                parse_num(&r[5], "n_obs")?,
            ))
        })();
        out.push(parsed.map_err(|m| at_line(path, line, m))?);
    }
    Ok(Climatology::from_rows(spec, window, min_obs, out)?)
}

// ---------------------------------------------------------------------------
// lexicons, seeds, rules

pub fn write_lexicon(lexicon: &Lexicon) -> String {
    let mut s = format!("# axis: {}\n", lexicon.axis());
    let mut out = CsvOut::new(&["token", "score"]);
    for (t, v) in lexicon.iter() {
        out.row([t, &v.to_string()]);
    }
    s.push_str(&out.finish());
    s
}

pub fn parse_lexicon(path: &Path, text: &str) -> Result<Lexicon> {
    let axis = comment_value(text, "axis").ok_or_else(|| Error::format(path, "missing '# axis: NAME' header"))?;
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &["token", "score"])?;
    let mut lex = Lexicon::new(axis);
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let score: f64 = parse_num(&r[1], "score").map_err(|m| at_line(path, line, m))?;
        lex.insert(&r[0], score).map_err(|e| at_line(path, line, e.to_string()))?;
    }
    Ok(lex)
}

pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    parse_lexicon(path, &read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFile {
    pub positive: SeedSet,
    pub negative: SeedSet,
}

pub fn parse_seeds(path: &Path, text: &str) -> Result<SeedFile> {
    let seeds: SeedFile = serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
    for (side, set) in [("positive", &seeds.positive), ("negative", &seeds.negative)] {
        if set.is_empty() {
            return Err(Error::format(path, format!("{side} seed set is empty")));
        }
        if set.weights().values().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::format(path, format!("{side} seed weights must be positive")));
        }
    }
    Ok(seeds)
}

pub fn write_seeds(seeds: &SeedFile) -> String {
    json_pretty(seeds)
}

/// The sentiment seed words shipped with the tool.
pub const DEFAULT_SENTIMENT_SEEDS: &str = include_str!("../data/seeds_sentiment.json");

pub fn default_sentiment_seeds() -> SeedFile {
    parse_seeds(Path::new("<builtin seeds>"), DEFAULT_SENTIMENT_SEEDS).expect("shipped seed file parses")
}

pub fn parse_rules(path: &Path, text: &str) -> Result<ScoringRules> {
    let rules: ScoringRules = serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
    rules.validate()?;
    Ok(rules)
}

pub fn write_rules(rules: &ScoringRules) -> String {
    json_pretty(rules)
}

// ---------------------------------------------------------------------------
// annotations and scored posts

fn condition_columns() -> Vec<String> {
    Variable::ALL.iter().flat_map(|v| [v.name().to_string(), format!("z_{}", v.name())]).collect()
}

fn condition_cells(a: &ConditionAnnotation) -> Vec<String> {
    a.conditions.iter().flat_map(|c| [opt(c.raw), opt(c.z)]).collect()
}

fn parse_conditions(fields: &[&str]) -> std::result::Result<ConditionAnnotation, String> {
    let mut a = ConditionAnnotation::default();
    for (k, c) in a.conditions.iter_mut().enumerate() {
        *c = Condition { raw: parse_opt(fields[2 * k])?, baseline: None, z: parse_opt(fields[2 * k + 1])? };
    }
    Ok(a)
}

fn annotation_header() -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend(condition_columns());
    h.push("region".into());
    h
}

pub fn scored_header() -> Vec<String> {
    let mut h = vec!["id".to_string(), "ts".into(), "sentiment".into()];
    h.extend(condition_columns());
    h.push("region".into());
    h
}

/// Per-post conditions and region, keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedRow {
    pub id: String,
    pub conditions: ConditionAnnotation,
    pub region: Option<String>,
}

pub fn write_annotations(rows: &[AnnotatedRow]) -> String {
    let header = annotation_header();
    let mut out = CsvOut::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for r in rows {
        let mut f = vec![r.id.clone()];
        f.extend(condition_cells(&r.conditions));
        f.push(r.region.clone().unwrap_or_default());
        out.row(f);
    }
    out.finish()
}

pub fn parse_annotations(path: &Path, text: &str) -> Result<Vec<AnnotatedRow>> {
    let header = annotation_header();
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &header.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let f: Vec<&str> = r.iter().collect();
        let conditions = parse_conditions(&f[1..11]).map_err(|m| at_line(path, line, m))?;
        let region = (!f[11].is_empty()).then(|| f[11].to_string());
        out.push(AnnotatedRow { id: f[0].to_string(), conditions, region });
    }
    Ok(out)
}

pub fn write_scored(tweets: &[ScoredTweet]) -> String {
    let header = scored_header();
    let mut out = CsvOut::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for t in tweets {
        let mut f = vec![t.id.clone(), format_timestamp(&t.timestamp), t.sentiment.to_string()];
        f.extend(condition_cells(&t.conditions));
        f.push(t.region.clone().unwrap_or_default());
        out.row(f);
    }
    out.finish()
}

pub fn parse_scored(path: &Path, text: &str) -> Result<Vec<ScoredTweet>> {
    let header = scored_header();
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &header.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let f: Vec<&str> = r.iter().collect();
        let parsed = (|| -> std::result::Result<_, String> {
            let timestamp = DateTime::parse_from_rfc3339(f[1]).map_err(|e| format!("bad ts {:?}: {e}", f[1]))?.with_timezone(&Utc);
            let sentiment: f64 = parse_num(f[2], "sentiment")?;
            Ok(ScoredTweet {
                id: f[0].to_string(),
                timestamp,
                sentiment,
                conditions: parse_conditions(&f[3..13])?,
                region: (!f[13].is_empty()).then(|| f[13].to_string()),
            })
        })();
        out.push(parsed.map_err(|m| at_line(path, line, m))?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// analytics outputs

pub const CURVE_HEADER: [&str; 4] = ["bin_center", "mean_sentiment", "count", "included"];

pub fn write_curve(curve: &ResponseCurve) -> String {
    let mut out = CsvOut::new(&CURVE_HEADER);
    for b in &curve.bins {
        out.row([b.center.to_string(), opt(b.mean_sentiment), b.count.to_string(), b.included.to_string()]);
    }
    out.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub bin_center: f64,
    pub mean_sentiment: Option<f64>,
    pub count: usize,
    pub included: bool,
}

pub fn parse_curve(path: &Path, text: &str) -> Result<Vec<CurveRow>> {
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &CURVE_HEADER)?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let parsed = (|| -> std::result::Result<_, String> {
            Ok(CurveRow {
                bin_center: parse_num(&r[0], "bin_center")?,
                mean_sentiment: parse_opt(&r[1])?,
                count: parse_num(&r[2], "count")?,
                included: parse_num(&r[3], "included")?,
            })
        })();
        out.push(parsed.map_err(|m| at_line(path, line, m))?);
    }
    Ok(out)
}

pub const PAIR_HEADER: [&str; 7] = ["hex_q", "hex_r", "center_a", "center_b", "mean_sentiment", "count", "suppressed"];

pub fn write_pair_grid(cells: &[PairCell]) -> String {
    let mut out = CsvOut::new(&PAIR_HEADER);
    for c in cells {
        out.row([
            c.q.to_string(),
            c.r.to_string(),
            c.center_a.to_string(),
            c.center_b.to_string(),
            c.mean_sentiment.to_string(),
            c.count.to_string(),
            c.suppressed.to_string(),
        ]);
    }
    out.finish()
}

pub fn parse_pair_grid(path: &Path, text: &str) -> Result<Vec<PairCell>> {
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &PAIR_HEADER)?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let parsed = (|| -> std::result::Result<_, String> {
            Ok(PairCell {
                q: parse_num(&r[0], "hex_q")?,
                r: parse_num(&r[1], "hex_r")?,
                center_a: parse_num(&r[2], "center_a")?,
                center_b: parse_num(&r[3], "center_b")?,
                mean_sentiment: parse_num(&r[4], "mean_sentiment")?,
                count: parse_num(&r[5], "count")?,
                suppressed: parse_num(&r[6], "suppressed")?,
            })
        })();
        out.push(parsed.map_err(|m| at_line(path, line, m))?);
    }
    Ok(out)
}

pub const SCATTER_HEADER: [&str; 4] = ["token", "sentiment", "weather", "freq"];

pub fn write_scatter(rows_in: &[ScatterRow]) -> String {
    let mut out = CsvOut::new(&SCATTER_HEADER);
    for r in rows_in {
        out.row([r.token.clone(), r.sentiment.to_string(), r.weather.to_string(), r.freq.to_string()]);
    }
    out.finish()
}

pub fn parse_scatter(path: &Path, text: &str) -> Result<Vec<ScatterRow>> {
    let mut rdr = csv_reader(text);
    check_header(path, &mut rdr, &SCATTER_HEADER)?;
    let mut out = Vec::new();
    for row in rows(path, &mut rdr) {
        let (line, r) = row?;
        let parsed = (|| -> std::result::Result<_, String> {
            Ok(ScatterRow {
                token: r[0].to_string(),
                sentiment: parse_num(&r[1], "sentiment")?,
                weather: parse_num(&r[2], "weather")?,
                freq: parse_num(&r[3], "freq")?,
            })
        })();
        out.push(parsed.map_err(|m| at_line(path, line, m))?);
    }
    Ok(out)
}

/// Regional comparison as written to disk. Undefined correlations are null
/// with the reason alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalReport {
    pub variable: Variable,
    pub groups: [String; 2],
    pub raw_r: Option<f64>,
    pub raw_p: Option<f64>,
    pub raw_undefined: Option<String>,
    pub norm_r: Option<f64>,
    pub norm_p: Option<f64>,
    pub norm_undefined: Option<String>,
    /// Bins included in both groups' normalized curves.
    pub shared_bins: usize,
    pub raw_shared_bins: usize,
    pub comparison: RegionalComparison,
}

impl RegionalReport {
    pub fn new(c: RegionalComparison) -> Self {
        let split = |r: &std::result::Result<weatherlex_core::stats::Correlation, weatherlex_core::stats::Undefined>| match r {
            Ok(c) => (Some(c.r), Some(c.p), None),
            Err(u) => (None, None, Some(u.to_string())),
        };
        let (raw_r, raw_p, raw_undefined) = split(&c.raw);
        let (norm_r, norm_p, norm_undefined) = split(&c.normalized);
        RegionalReport {
            variable: c.variable,
            groups: [c.groups[0].group.clone(), c.groups[1].group.clone()],
            raw_r,
            raw_p,
            raw_undefined,
            norm_r,
            norm_p,
            norm_undefined,
            shared_bins: c.norm_shared_bins,
            raw_shared_bins: c.raw_shared_bins,
            comparison: c,
        }
    }
}

pub fn write_regional(report: &RegionalReport) -> String {
    json_pretty(report)
}

pub fn parse_regional(path: &Path, text: &str) -> Result<RegionalReport> {
    serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    json_pretty(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"id":"1","ts":"2021-06-01T12:00:00Z","text":"hello","handle":"a","display":"A","geo":{"type":"point","coords":[-0.1,51.5]}}"#;

    fn parse(text: &str) -> ParsedCorpus {
        parse_corpus(text.as_bytes(), None).unwrap()
    }

    #[test]
    fn three_good_lines() {
        let text = [GOOD, &GOOD.replace("\"1\"", "\"2\""), &GOOD.replace("\"1\"", "\"3\"")].join("\n");
        let c = parse(&text);
        assert_eq!(c.records.len(), 3);
        assert!(c.rejections.is_empty());
    }

    #[test]
    fn missing_text_is_logged() {
        let bad = GOOD.replace("\"id\":\"1\"", "\"id\":\"2\"").replace("\"text\":\"hello\",", "");
        let c = parse(&format!("{GOOD}\n{bad}\n"));
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.rejections.len(), 1);
        assert_eq!(c.rejections[0].line, 2);
        assert_eq!(c.rejections[0].reason, RejectReason::MissingField);
        assert!(c.rejection_log().starts_with("line 2\tMISSING_FIELD"));
    }

    #[test]
    fn duplicate_id_keeps_first() {
        let second = GOOD.replace("hello", "second");
        let third = GOOD.replace("\"1\"", "\"42\"");
        let dup = third.replace("hello", "dup");
        let c = parse(&[GOOD, &second, &third, &dup].join("\n"));
        assert_eq!(c.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["1", "42"]);
        assert_eq!(c.records[0].text, "hello");
        assert_eq!(c.rejections.iter().filter(|r| r.reason == RejectReason::DuplicateId).count(), 2);
    }

    #[test]
    fn mostly_malformed_is_fatal() {
        let text = format!("{GOOD}\nnot json\n{{\"id\":\"x\"}}\n");
        assert!(matches!(parse_corpus(text.as_bytes(), None), Err(ParseError::TooManyMalformed { malformed: 2, lines: 3, .. })));
        // exactly half is tolerated
        let text = format!("{GOOD}\nnot json\n");
        assert_eq!(parse(&text).records.len(), 1);
    }

    #[test]
    fn window_and_geometry_checks() {
        let w = StudyWindow::new(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2021, 5, 31).unwrap()).unwrap();
        let c = parse_corpus(GOOD.as_bytes(), Some(&w)).unwrap();
        assert_eq!(c.rejections[0].reason, RejectReason::OutsideWindow);
        let bbox = GOOD.replace(r#""type":"point","coords":[-0.1,51.5]"#, r#""type":"bbox","coords":[1,2,0,3]"#);
        let text = format!("{GOOD}\n{}\n", bbox.replace("\"1\"", "\"2\""));
        assert_eq!(parse(&text).rejections[0].reason, RejectReason::BadGeometry);
    }

    #[test]
    fn corpus_round_trip() {
        let c = parse(GOOD);
        let text = write_corpus(&c.records);
        assert_eq!(parse(&text).records, c.records);
        assert_eq!(text.trim_end(), GOOD);
    }

    #[test]
    fn lexicon_round_trip() {
        let lex = Lexicon::from_scores("tmax", [("a,b".to_string(), 0.25), ("sun".to_string(), -1.0)]).unwrap();
        let text = write_lexicon(&lex);
        assert!(text.starts_with("# axis: tmax\ntoken,score\n"));
        assert_eq!(parse_lexicon(Path::new("x"), &text).unwrap(), lex);
    }

    #[test]
    fn shipped_seeds() {
        let s = default_sentiment_seeds();
        assert_eq!(s.positive.len(), 18);
        assert_eq!(s.negative.len(), 20);
        assert!(s.positive.contains("lovely") && s.negative.contains("hates"));
    }
}
