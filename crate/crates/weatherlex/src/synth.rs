//! Seeded synthetic corpus, weather grid and region set with a known
//! sentiment response, for demos and end-to-end checks.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use weatherlex_core::corpus::{Geometry, TweetRecord};
use weatherlex_core::grid::{annotate, compute_climatology, DailyField, GridDataset, GridSpec, Variable, YearWindow};
use weatherlex_core::region::{Region, RegionSet};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Response {
    /// z of maximum sentiment.
    pub peak: f64,
    pub width: f64,
    /// Scales the expected valence; 0 plants no response at all.
    pub amplitude: f64,
}

impl Default for Response {
    fn default() -> Self {
        Self { peak: 1.5, width: 1.0, amplitude: 0.6 }
    }
}

impl Response {
    /// Expected valence 2 p - 1 at temperature z-score `z` for unit intensity.
    pub fn valence(&self, z: f64) -> f64 {
        let bell = (-(z - self.peak).powi(2) / (2.0 * self.width * self.width)).exp();
        (self.amplitude * (2.0 * bell - 1.0)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    /// Added to the group's daily maximum temperatures.
    pub tmax_shift: f64,
    /// Multiplies the planted valence.
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_tweets: usize,
    pub study_year: i32,
    pub climatology_years: i32,
    /// Grid rows; the northern half belongs to the first group.
    pub n_lat: usize,
    pub n_lon: usize,
    pub response: Response,
    /// North then South.
    pub groups: [GroupSpec; 2],
    pub polarity_words: [usize; 2],
    pub filler_words: [usize; 2],
    pub bbox_fraction: f64,
    pub missing_fraction: f64,
    /// Share of posts from filter-violating sources (removed at ingest).
    pub noise_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_tweets: 20_000,
            study_year: 2021,
            climatology_years: 10,
            n_lat: 6,
            n_lon: 4,
            response: Response::default(),
            groups: [
                GroupSpec { name: "North".into(), tmax_shift: 0.0, intensity: 1.0 },
                GroupSpec { name: "South".into(), tmax_shift: 3.0, intensity: 1.5 },
            ],
            polarity_words: [2, 3],
            filler_words: [3, 6],
            bbox_fraction: 0.2,
            missing_fraction: 0.001,
            noise_fraction: 0.03,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.n_tweets < 1000 {
            return bad("n_tweets must be at least 1000");
        }
        if self.n_lat < 2 || !self.n_lat.is_multiple_of(2) || self.n_lon == 0 {
            return bad("n_lat must be even and at least 2; n_lon positive");
        }
        if self.climatology_years < 1 {
            return bad("climatology_years must be positive");
        }
        if !(self.response.width > 0.0) || !(0.0..=1.0).contains(&self.response.amplitude) {
            return bad("response needs width > 0 and amplitude in [0, 1]");
        }
        if self.groups.iter().any(|g| !(g.intensity >= 0.0) || !g.tmax_shift.is_finite()) || self.groups[0].name == self.groups[1].name {
            return bad("groups need distinct names, finite shifts and non-negative intensities");
        }
        if self.polarity_words[0] > self.polarity_words[1] || self.filler_words[0] > self.filler_words[1] || self.polarity_words[1] == 0 {
            return bad("word count ranges must be ordered and allow polarity words");
        }
        for (name, f) in [("bbox_fraction", self.bbox_fraction), ("missing_fraction", self.missing_fraction), ("noise_fraction", self.noise_fraction)] {
            if !(0.0..0.5).contains(&f) {
                return bad(&format!("{name} must lie in [0, 0.5)"));
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { lat_origin: 50.5, lon_origin: -4.5, dlat: 1.0, dlon: 1.0, n_lat: self.n_lat, n_lon: self.n_lon }
    }

    /// Latitude splitting the two groups.
    pub fn divide_lat(&self) -> f64 {
        50.0 + (self.n_lat / 2) as f64
    }

    fn extent(&self) -> (f64, f64, f64, f64) {
        (-5.0, 50.0, -5.0 + self.n_lon as f64, 50.0 + self.n_lat as f64)
    }
}

pub const PLANTED_POSITIVE: [&str; 20] = [
    "wonderful", "brilliant", "fantastic", "cheerful", "glorious", "splendid", "smashing", "chuffed", "lush", "cracking",
    "joyful", "superb", "blissful", "marvellous", "happy", "grateful", "stunning", "fab", "ace", "delighted",
];

pub const PLANTED_NEGATIVE: [&str; 20] = [
    "miserable", "dreadful", "gloomy", "grim", "rubbish", "gutted", "annoyed", "vile", "depressing", "hideous",
    "dire", "bleak", "pathetic", "disgusting", "fuming", "wretched", "horrid", "ugh", "moody", "dismal",
];

pub const HOT_WORDS: [&str; 4] = ["sweating", "sunburn", "heatwave", "icecream"];
pub const COLD_WORDS: [&str; 4] = ["freezing", "baltic", "frosty", "shivering"];
pub const WET_WORDS: [&str; 3] = ["soaked", "drenched", "umbrella"];
pub const WINDY_WORDS: [&str; 2] = ["gusty", "blustery"];
pub const HUMID_WORDS: [&str; 2] = ["muggy", "sticky"];
/// Appears only in posts ranked in the top 1% of temperature z-scores.
pub const TOP_ONLY_TOKEN: &str = "scorchio";
/// Appears in a fixed share of all posts regardless of weather.
pub const UNIFORM_TOKEN: &str = "meanwhile";

const FILLER: &[&str] = &[
    "the", "a", "and", "to", "of", "in", "is", "it", "for", "on", "at", "with", "this", "that", "today", "day", "out",
    "just", "my", "me", "we", "you", "they", "our", "going", "got", "get", "go", "walk", "work", "home", "town", "park",
    "dog", "cat", "kids", "lunch", "dinner", "tea", "coffee", "morning", "evening", "afternoon", "night", "weekend",
    "week", "now", "still", "again", "back", "off", "up", "down", "over", "round", "road", "bus", "train", "car",
    "shop", "garden", "window", "outside", "inside", "sky", "weather", "looking", "feels", "like", "bit", "lot",
    "little", "some", "more", "all", "everyone", "people", "friends", "mum", "dad", "football", "match", "beach",
    "hill", "river", "city", "street", "office", "school", "holiday", "plans", "later", "tomorrow", "yesterday",
    "hour", "time", "started", "finished", "watching", "reading", "cooking", "running", "cycling", "driving",
    "sitting", "waiting", "heading", "staying", "went", "came", "made", "had", "saw", "said", "think", "know", "see",
    "then", "there",
];

/// Everything the acceptance checks need to know about what was planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub n_tweets: usize,
    pub clean_tweets: usize,
    pub response: Response,
    pub groups: [GroupSpec; 2],
    pub divide_lat: f64,
    pub positive_seeds: Vec<String>,
    pub negative_seeds: Vec<String>,
    pub planted_positive: Vec<String>,
    pub planted_negative: Vec<String>,
    pub hot_words: Vec<String>,
    pub cold_words: Vec<String>,
    pub top_only_token: String,
    pub top_only_posts: usize,
    pub uniform_token: String,
    pub uniform_posts: usize,
    pub noise: NoiseCounts,
}

impl Truth {
    /// Expected valence of a post at temperature z-score `z` in `group`.
    pub fn planted_valence(&self, z: f64, group: usize) -> f64 {
        (self.groups[group].intensity * self.response.valence(z)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseCounts {
    pub bot_posts: usize,
    pub weather_account_posts: usize,
    pub mph_posts: usize,
    pub phrase_posts: usize,
}

pub struct SynthOutput {
    pub records: Vec<TweetRecord>,
    pub dataset: GridDataset,
    pub regions: RegionSet,
    pub truth: Truth,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn day_of_year_angle(d: NaiveDate) -> f64 {
    2.0 * std::f64::consts::PI * (d.ordinal0() as f64 - 15.0) / 365.25
}

fn generate_grid(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<GridDataset> {
    let spec = cfg.grid_spec();
    let start = NaiveDate::from_ymd_opt(cfg.study_year - cfg.climatology_years, 1, 1).expect("valid year");
    let end = NaiveDate::from_ymd_opt(cfg.study_year, 12, 31).expect("valid year");
    let divide = cfg.divide_lat();
    let n01 = Normal::new(0.0, 1.0).expect("unit normal");
    let mut fields = Vec::new();
    let mut d = start;
    while d <= end {
        let season = -day_of_year_angle(d).cos();
        let national = [2.5, 2.0, 3.0, 6.0, 7.0].map(|s| s * n01.sample(rng));
        let mut values = vec![[None; 5]; spec.cells()];
        for (cell, slot) in values.iter_mut().enumerate() {
            let (i, _) = spec.unflat(cell);
            let (_, lat) = spec.node(i, 0);
            let shift = if lat >= divide { cfg.groups[0].tmax_shift } else { cfg.groups[1].tmax_shift };
            let tmax = 12.0 + shift - 0.3 * (lat - divide) + 7.0 * season + national[0] + 1.5 * n01.sample(rng);
            let precip = (1.0 + national[1] + 2.0 * n01.sample(rng) - 0.5 * season).max(0.0);
            let wind = (14.0 + national[2] + 3.0 * n01.sample(rng) - 2.0 * season).abs();
            let humidity = (78.0 + national[3] - 0.8 * (national[0]) + 5.0 * n01.sample(rng)).clamp(0.0, 100.0);
            let pressure = 1013.0 + national[4] + 2.0 * n01.sample(rng);
            for (k, v) in [tmax, precip, wind, humidity, pressure].into_iter().enumerate() {
                if !rng.random_bool(cfg.missing_fraction) {
                    slot[k] = Some(round2(v));
                }
            }
        }
        for var in Variable::ALL {
            fields.push(DailyField { date: d, variable: var, values: values.iter().map(|v| v[var.index()]).collect() });
        }
        d += Duration::days(1);
    }
    Ok(GridDataset::from_fields(spec, fields)?)
}

fn generate_regions(cfg: &SynthConfig) -> Result<RegionSet> {
    let (lon0, lat0, lon1, lat1) = cfg.extent();
    let mid_lon = (lon0 + lon1) / 2.0;
    let div = cfg.divide_lat();
    let rect = |name: &str, group: &str, a: f64, b: f64, c: f64, d: f64| Region::new(name, group, vec![(a, b), (c, b), (c, d), (a, d)]);
    let (north, south) = (cfg.groups[0].name.as_str(), cfg.groups[1].name.as_str());
    Ok(RegionSet::new(vec![
        rect("North West", north, lon0, div, mid_lon, lat1)?,
        rect("North East", north, mid_lon, div, lon1, lat1)?,
        rect("South West", south, lon0, lat0, mid_lon, div)?,
        rect("South East", south, mid_lon, lat0, lon1, div)?,
    ])?)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Draft {
    timestamp: chrono::DateTime<Utc>,
    geometry: Geometry,
    group: usize,
    z: [Option<f64>; 5],
}

/// Generates the full synthetic bundle in memory.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dataset = generate_grid(cfg, &mut rng)?;
    let regions = generate_regions(cfg)?;
    let window = YearWindow::preceding(cfg.study_year, cfg.climatology_years)?;
    let clim = compute_climatology(&dataset, window, weatherlex_core::grid::DEFAULT_MIN_OBS)?;

    let n_noise = (cfg.n_tweets as f64 * cfg.noise_fraction).round() as usize;
    let n_clean = cfg.n_tweets - n_noise;
    let (lon0, lat0, lon1, lat1) = cfg.extent();
    let year_start = Utc.with_ymd_and_hms(cfg.study_year, 1, 1, 0, 0, 0).single().expect("valid start");
    let days = NaiveDate::from_ymd_opt(cfg.study_year, 12, 31).expect("valid").ordinal() as i64;

    let place = |rng: &mut ChaCha8Rng| -> (chrono::DateTime<Utc>, Geometry) {
        let ts = year_start + Duration::seconds(rng.random_range(0..days * 86_400));
        let g = if rng.random_bool(cfg.bbox_fraction) {
            let (w, h) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
            let lon = rng.random_range(lon0..lon1 - w);
            let lat = rng.random_range(lat0..lat1 - h);
            Geometry::BBox { lon_min: round2(lon), lat_min: round2(lat), lon_max: round2(lon + w), lat_max: round2(lat + h) }
        } else {
            Geometry::Point { lon: round2(rng.random_range(lon0..lon1)), lat: round2(rng.random_range(lat0..lat1)) }
        };
        (ts, g)
    };

    let divide = cfg.divide_lat();
    let drafts: Vec<Draft> = (0..n_clean)
        .map(|_| {
            let (timestamp, geometry) = place(&mut rng);
            let a = annotate(&geometry, timestamp.date_naive(), &dataset, &clim);
            let z = Variable::ALL.map(|v| a.get(v).is_valid().then(|| a.get(v).z.expect("valid")));
            let group = if geometry.center().1 >= divide { 0 } else { 1 };
            Draft { timestamp, geometry, group, z }
        })
        .collect();

    // top band of the temperature ranking, matching the tagger's ordering
    let ids: Vec<String> = (0..n_clean).map(|i| format!("t{:07}", i + 1)).collect();
    let mut ranked: Vec<(usize, f64)> = drafts.iter().enumerate().filter_map(|(i, d)| d.z[0].map(|z| (i, z))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| ids[a.0].cmp(&ids[b.0])));
    let band = (ranked.len() as f64 * 0.01 + 1e-9).floor() as usize;
    let mut top_band = vec![false; n_clean];
    for &(i, _) in &ranked[..band] {
        top_band[i] = true;
    }

    let seeds = formats::default_sentiment_seeds();
    let pos_vocab: Vec<&str> = seeds.positive.weights().keys().map(String::as_str).chain(PLANTED_POSITIVE).collect();
    let neg_vocab: Vec<&str> = seeds.negative.weights().keys().map(String::as_str).chain(PLANTED_NEGATIVE).collect();
    let n_authors = (n_clean / 10).max(100);
    let mut top_only_posts = 0;
    let mut uniform_posts = 0;
    let mut records = Vec::with_capacity(cfg.n_tweets);
    for (i, d) in drafts.iter().enumerate() {
        let zt = d.z[0].unwrap_or(0.0);
        let p_pos = 0.5 + 0.5 * cfg.groups[d.group].intensity * cfg.response.valence(zt);
        let vocab = if rng.random_bool(p_pos.clamp(0.0, 1.0)) { &pos_vocab } else { &neg_vocab };
        let mut words: Vec<String> = Vec::new();
        for _ in 0..rng.random_range(cfg.polarity_words[0]..=cfg.polarity_words[1]) {
            words.push(vocab.choose(&mut rng).expect("non-empty").to_string());
        }
        for _ in 0..rng.random_range(cfg.filler_words[0]..=cfg.filler_words[1]) {
            words.push(FILLER.choose(&mut rng).expect("non-empty").to_string());
        }
        let tied: [(&[&str], Option<f64>); 5] = [
            (&HOT_WORDS, d.z[0]),
            (&COLD_WORDS, d.z[0].map(|z| -z)),
            (&WET_WORDS, d.z[1]),
            (&WINDY_WORDS, d.z[2]),
            (&HUMID_WORDS, d.z[3]),
        ];
        for (list, z) in tied {
            if let Some(z) = z {
                if rng.random_bool(0.3 * sigmoid(2.5 * (z - 1.0))) {
                    words.push(list.choose(&mut rng).expect("non-empty").to_string());
                }
            }
        }
        if top_band[i] && rng.random_bool(0.7) {
            words.push(TOP_ONLY_TOKEN.to_string());
            top_only_posts += 1;
        }
        if rng.random_bool(0.2) {
            words.push(UNIFORM_TOKEN.to_string());
            uniform_posts += 1;
        }
        words.shuffle(&mut rng);
        let mut text = words.join(" ");
        if rng.random_bool(0.1) {
            text.push('!');
        }
        let author = rng.random_range(0..n_authors);
        records.push(TweetRecord {
            id: ids[i].clone(),
            timestamp: d.timestamp,
            text,
            author_handle: format!("user{author:05}"),
            author_display: format!("User {author}"),
            geometry: d.geometry,
        });
    }

    // posts the ingest filters should remove
    let mut noise = NoiseCounts::default();
    let bot_share = (n_noise / 2).min((cfg.n_tweets as f64 * 0.02) as usize);
    for k in 0..n_noise {
        let (timestamp, geometry) = place(&mut rng);
        let (handle, display, text) = if k < bot_share {
            noise.bot_posts += 1;
            let t: f64 = rng.random_range(-2.0..28.0);
            ("autostation7".to_string(), "Station 7".to_string(), format!("Temp {t:.1}C, wind {} mph, pressure {} hPa", rng.random_range(0..40), rng.random_range(980..1040)))
        } else {
            let author = rng.random_range(0..n_authors);
            match k % 3 {
                0 => {
                    noise.weather_account_posts += 1;
                    (format!("town{}weather", k % 7), format!("Town {} Weather", k % 7), "lovely sunny spell this afternoon".to_string())
                }
                1 => {
                    noise.mph_posts += 1;
                    (format!("user{author:05}"), format!("User {author}"), format!("gusts of {}mph on the hill", rng.random_range(20..70)))
                }
                _ => {
                    noise.phrase_posts += 1;
                    (format!("user{author:05}"), format!("User {author}"), "feeling a bit under the weather today".to_string())
                }
            }
        };
        records.push(TweetRecord {
            id: format!("n{:07}", k + 1),
            timestamp,
            text,
            author_handle: handle,
            author_display: display,
            geometry,
        });
    }
    records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));

    let truth = Truth {
        seed: cfg.seed,
        n_tweets: cfg.n_tweets,
        clean_tweets: n_clean,
        response: cfg.response.clone(),
        groups: cfg.groups.clone(),
        divide_lat: divide,
        positive_seeds: seeds.positive.weights().keys().cloned().collect(),
        negative_seeds: seeds.negative.weights().keys().cloned().collect(),
        planted_positive: PLANTED_POSITIVE.map(String::from).to_vec(),
        planted_negative: PLANTED_NEGATIVE.map(String::from).to_vec(),
        hot_words: HOT_WORDS.map(String::from).to_vec(),
        cold_words: COLD_WORDS.map(String::from).to_vec(),
        top_only_token: TOP_ONLY_TOKEN.into(),
        top_only_posts,
        uniform_token: UNIFORM_TOKEN.into(),
        uniform_posts,
        noise,
    };
    Ok(SynthOutput { records, dataset, regions, truth })
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GRID_FILE: &str = "grid.csv";
pub const GRID_SPEC_FILE: &str = "grid.json";
pub const REGIONS_FILE: &str = "regions.geojson";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "config.toml";

/// The pipeline config matching a generated bundle, with paths relative to
/// the bundle directory.
pub fn pipeline_config(cfg: &SynthConfig, dir: &Path) -> Result<Config> {
    let text = format!(
        "[paths]\ncorpus = \"{CORPUS_FILE}\"\ngrid = \"{GRID_FILE}\"\ngrid_spec = \"{GRID_SPEC_FILE}\"\nregions = \"{REGIONS_FILE}\"\nout = \"out\"\n\n\
         [study]\nstart = {y}-01-01\nend = {y}-12-31\n\n\
         [climatology]\nyears = {n}\n\n\
         [regions]\ngroups = [\"{a}\", \"{b}\"]\n",
        y = cfg.study_year,
        n = cfg.climatology_years,
        a = cfg.groups[0].name,
        b = cfg.groups[1].name,
    );
    Config::parse(&text, dir)
}

/// Writes the corpus, grid, regions, ground truth and a ready-to-run config
/// into `dir`. Returns the config path.
pub fn write_bundle(cfg: &SynthConfig, dir: &Path) -> Result<PathBuf> {
    let out = generate(cfg)?;
    formats::write_file(&dir.join(CORPUS_FILE), formats::write_corpus(&out.records))?;
    formats::write_file(&dir.join(GRID_FILE), formats::write_grid(&out.dataset))?;
    formats::write_file(&dir.join(GRID_SPEC_FILE), formats::write_grid_spec(out.dataset.spec()))?;
    formats::write_file(&dir.join(REGIONS_FILE), formats::write_regions(&out.regions))?;
    formats::write_file(&dir.join(TRUTH_FILE), formats::to_json(&out.truth))?;
    let config = pipeline_config(cfg, dir)?;
    let path = dir.join(CONFIG_FILE);
    formats::write_file(&path, config.to_toml())?;
    Ok(path)
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    serde_json::from_str(&formats::read_to_string(path)?).map_err(|e| Error::format(path, e.to_string()))
}
