//! Stage runners. Each stage reads what it needs from the config and the
//! output directory and writes its artifacts there, so stages can run one at
//! a time or all together.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use weatherlex_core::analytics::{bin_response, pair_grid, regional_compare, Axis};
use weatherlex_core::corpus::{filter_high_volume_authors, filter_structured_reports, filter_weather_usernames, RemovedAuthor, TweetRecord};
use weatherlex_core::grid::{annotate_tweets, compute_climatology, Climatology, CoverageReport, GridDataset, Variable};
use weatherlex_core::lexicon::{build_graph, propagate, tokenize, Lexicon};
use weatherlex_core::region::RegionSet;
use weatherlex_core::scorer::{join_scored, score_corpus, ScoredTweet, ScoringRules};
use weatherlex_core::weather_scale::{build_weather_scale, emit_word_scatter, tag_percentiles, ScaleDoc, TagReport};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formats::{self, AnnotatedRow, RegionalReport};

pub const FILTERED_CORPUS: &str = "corpus.filtered.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const REJECTIONS: &str = "rejections.log";
pub const CLIMATOLOGY: &str = "climatology.csv";
pub const COVERAGE: &str = "grid_coverage.json";
pub const ANNOTATIONS: &str = "annotations.csv";
pub const ANNOTATE_REPORT: &str = "annotate_report.json";
pub const SENTIMENT_LEXICON: &str = "lexicon_sentiment.csv";
pub const SENTIMENT_REPORT: &str = "sentiment_report.json";
pub const SCORED: &str = "scored.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn scale_path(v: Variable) -> String {
    format!("scales/scale_{}.csv", v.name())
}

pub fn scatter_path(v: Variable) -> String {
    format!("scales/scatter_{}.csv", v.name())
}

pub fn tags_path(v: Variable) -> String {
    format!("scales/tags_{}.json", v.name())
}

pub fn curve_path(v: Variable, axis: Axis) -> String {
    format!("curves/curve_{}_{}.csv", v.name(), axis.name())
}

pub fn pair_path(a: Variable, b: Variable) -> String {
    format!("pairs/pair_{}_{}.csv", a.name(), b.name())
}

pub fn regional_path(v: Variable) -> String {
    format!("regional/regional_{}.json", v.name())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Climatology,
    Annotate,
    TrainSentiment,
    Score,
    TrainScales,
    Curves,
    Pairs,
    Regions,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Climatology,
        Stage::Annotate,
        Stage::TrainSentiment,
        Stage::Score,
        Stage::TrainScales,
        Stage::Curves,
        Stage::Pairs,
        Stage::Regions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Climatology => "climatology",
            Stage::Annotate => "annotate",
            Stage::TrainSentiment => "train-sentiment",
            Stage::Score => "score",
            Stage::TrainScales => "train-scales",
            Stage::Curves => "curves",
            Stage::Pairs => "pairs",
            Stage::Regions => "regions",
        }
    }
}

// ---------------------------------------------------------------------------
// ingest

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Record counts after parsing and after each filter, in order.
    pub cascade: Vec<StageCount>,
    pub removed_authors: Vec<RemovedAuthor>,
    pub rejected: BTreeMap<String, usize>,
}

impl IngestReport {
    pub fn counts(&self) -> Vec<usize> {
        self.cascade.iter().map(|s| s.count).collect()
    }
}

/// Applies the filters in order: high-volume authors, weather usernames,
/// structured reports and the "under the weather" phrase.
pub fn run_filters(records: Vec<TweetRecord>, high_volume_fraction: f64) -> Result<(Vec<TweetRecord>, IngestReport)> {
    let mut cascade = vec![StageCount { stage: "input".into(), count: records.len() }];
    let (records, removed_authors) = filter_high_volume_authors(records, high_volume_fraction)?;
    cascade.push(StageCount { stage: "high_volume_authors".into(), count: records.len() });
    let records = filter_weather_usernames(records);
    cascade.push(StageCount { stage: "weather_usernames".into(), count: records.len() });
    let records = filter_structured_reports(records);
    cascade.push(StageCount { stage: "structured_reports".into(), count: records.len() });
    Ok((records, IngestReport { cascade, removed_authors, rejected: BTreeMap::new() }))
}

// ---------------------------------------------------------------------------
// sentiment

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentReport {
    pub documents: usize,
    pub vocabulary: usize,
    pub edges: usize,
    pub dropped_seeds: Vec<String>,
    pub unreached: Vec<String>,
}

/// Induces the sentiment lexicon from the texts.
pub fn train_sentiment(texts: &[&str], config: &Config, seeds: &formats::SeedFile) -> Result<(Lexicon, SentimentReport)> {
    let docs: Vec<Vec<String>> = texts.par_iter().map(|t| tokenize(t)).collect();
    let graph = build_graph(&docs, &config.graph, &BTreeSet::new())?;
    let out = propagate(&graph, &seeds.positive, &seeds.negative, &config.propagation, "sentiment")?;
    let report = SentimentReport {
        documents: docs.len(),
        vocabulary: graph.node_count(),
        edges: graph.edge_count(),
        dropped_seeds: out.dropped_seeds,
        unreached: out.unreached,
    };
    Ok((out.lexicon, report))
}

// ---------------------------------------------------------------------------
// manifest

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactGroup {
    pub name: String,
    pub files: Vec<FileHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<FileHash>,
    /// All settings except output location.
    pub parameters: serde_json::Value,
    pub artifacts: Vec<ArtifactGroup>,
    pub intermediates: Vec<FileHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn hash_file(root: &Path, rel: &str) -> Result<FileHash> {
    let path = root.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FileHash { path: rel.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

// ---------------------------------------------------------------------------
// runner

pub struct Pipeline {
    pub config: Config,
    pub out: PathBuf,
}

impl Pipeline {
    pub fn new(config: Config) -> Self {
        let out = config.out_dir();
        Self { config, out }
    }

    pub fn with_out(config: Config, out: PathBuf) -> Self {
        Self { config, out }
    }

    fn out_file(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn write(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        formats::write_file(&self.out_file(rel), contents)
    }

    fn input(&self, p: &Path) -> PathBuf {
        self.config.resolve(p)
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        let r = match stage {
            Stage::Ingest => self.ingest().map(drop),
            Stage::Climatology => self.climatology(),
            Stage::Annotate => self.annotate(),
            Stage::TrainSentiment => self.train_sentiment(),
            Stage::Score => self.score(),
            Stage::TrainScales => self.train_scales(),
            Stage::Curves => self.curves(),
            Stage::Pairs => self.pairs(),
            Stage::Regions => self.regions(),
        };
        r.map_err(|e| e.in_stage(stage.name()))
    }

    /// Runs every stage in dependency order, then writes the manifest.
    pub fn run_all(&self) -> Result<Manifest> {
        for stage in Stage::ALL {
            self.run(stage)?;
        }
        self.write_manifest()
    }

    pub fn ingest(&self) -> Result<IngestReport> {
        let window = self.config.study_window()?;
        let parsed = formats::read_corpus(&self.input(&self.config.paths.corpus), Some(&window))?;
        let mut rejected = BTreeMap::new();
        for r in &parsed.rejections {
            *rejected.entry(r.reason.code().to_string()).or_insert(0) += 1;
        }
        let log = parsed.rejection_log();
        let (kept, mut report) = run_filters(parsed.records, self.config.filters.high_volume_fraction)?;
        report.rejected = rejected;
        self.write(FILTERED_CORPUS, formats::write_corpus(&kept))?;
        self.write(REJECTIONS, log)?;
        self.write(INGEST_REPORT, formats::to_json(&report))?;
        Ok(report)
    }

    fn filtered(&self) -> Result<Vec<TweetRecord>> {
        Ok(formats::read_corpus(&self.out_file(FILTERED_CORPUS), None)?.records)
    }

    fn grid(&self) -> Result<GridDataset> {
        let p = &self.config.paths;
        formats::read_grid(&self.input(&p.grid), &self.input(&p.grid_spec))
    }

    pub fn climatology(&self) -> Result<()> {
        let ds = self.grid()?;
        let clim = compute_climatology(&ds, self.config.climatology_window()?, self.config.climatology.min_obs)?;
        let coverage: CoverageReport = ds.coverage();
        self.write(CLIMATOLOGY, formats::write_climatology(&clim))?;
        self.write(COVERAGE, formats::to_json(&coverage))
    }

    fn load_climatology(&self, ds: &GridDataset) -> Result<Climatology> {
        let path = self.out_file(CLIMATOLOGY);
        formats::parse_climatology(&path, *ds.spec(), &formats::read_to_string(&path)?)
    }

    fn region_set(&self) -> Result<Option<RegionSet>> {
        self.config.paths.regions.as_ref().map(|p| formats::read_regions(&self.input(p))).transpose()
    }

    pub fn annotate(&self) -> Result<()> {
        let records = self.filtered()?;
        let ds = self.grid()?;
        let clim = self.load_climatology(&ds)?;
        let report = annotate_tweets(&records, &ds, &clim)?;
        let regions = self.region_set()?;
        let threshold = self.config.regions.overlap_threshold;
        let rows: Vec<AnnotatedRow> = records
            .par_iter()
            .zip(&report.annotations)
            .map(|(r, a)| AnnotatedRow {
                id: r.id.clone(),
                conditions: *a,
                region: regions.as_ref().and_then(|rs| rs.assign(&r.geometry, threshold)).map(|g| g.name.clone()),
            })
            .collect();
        let mut valid = BTreeMap::new();
        for v in Variable::ALL {
            valid.insert(v.name(), report.annotations.iter().filter(|a| a.get(v).is_valid()).count());
        }
        let summary = serde_json::json!({
            "records": records.len(),
            "excluded": report.excluded,
            "not_after_window": report.not_after_window,
            "valid": valid,
            "with_region": rows.iter().filter(|r| r.region.is_some()).count(),
        });
        self.write(ANNOTATIONS, formats::write_annotations(&rows))?;
        self.write(ANNOTATE_REPORT, formats::to_json(&summary))
    }

    fn annotations(&self, records: &[TweetRecord]) -> Result<Vec<AnnotatedRow>> {
        let path = self.out_file(ANNOTATIONS);
        let rows = formats::parse_annotations(&path, &formats::read_to_string(&path)?)?;
        if rows.len() != records.len() || rows.iter().zip(records).any(|(a, r)| a.id != r.id) {
            return Err(Error::format(path, "annotations do not match the filtered corpus; rerun annotate"));
        }
        Ok(rows)
    }

    fn seeds(&self) -> Result<formats::SeedFile> {
        match &self.config.paths.sentiment_seeds {
            Some(p) => {
                let p = self.input(p);
                formats::parse_seeds(&p, &formats::read_to_string(&p)?)
            }
            None => Ok(formats::default_sentiment_seeds()),
        }
    }

    fn rules(&self) -> Result<ScoringRules> {
        match &self.config.paths.rules {
            Some(p) => {
                let p = self.input(p);
                formats::parse_rules(&p, &formats::read_to_string(&p)?)
            }
            None => Ok(ScoringRules::default()),
        }
    }

    pub fn train_sentiment(&self) -> Result<()> {
        let records = self.filtered()?;
        let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
        let (lexicon, report) = train_sentiment(&texts, &self.config, &self.seeds()?)?;
        self.write(SENTIMENT_LEXICON, formats::write_lexicon(&lexicon))?;
        self.write(SENTIMENT_REPORT, formats::to_json(&report))
    }

    fn sentiment_lexicon(&self) -> Result<Lexicon> {
        formats::read_lexicon(&self.out_file(SENTIMENT_LEXICON))
    }

    pub fn score(&self) -> Result<()> {
        let records = self.filtered()?;
        let rows = self.annotations(&records)?;
        let lexicon = self.sentiment_lexicon()?;
        let rules = self.rules()?;
        let sentiments: Vec<f64> = if records.len() > 4096 {
            records.par_iter().map(|r| weatherlex_core::scorer::score_text(&r.text, &lexicon, &rules)).collect()
        } else {
            score_corpus(&records, &lexicon, &rules)
        };
        let annotations: Vec<_> = rows.iter().map(|r| r.conditions).collect();
        let regions: Vec<_> = rows.into_iter().map(|r| r.region).collect();
        let scored = join_scored(&records, &sentiments, &annotations, &regions)?;
        self.write(SCORED, formats::write_scored(&scored))
    }

    pub fn scored(&self) -> Result<Vec<ScoredTweet>> {
        let path = self.out_file(SCORED);
        formats::parse_scored(&path, &formats::read_to_string(&path)?)
    }

    pub fn train_scales(&self) -> Result<()> {
        let records = self.filtered()?;
        let rows = self.annotations(&records)?;
        let sentiment = self.sentiment_lexicon()?;
        let params = self.config.scales.tag_params();
        let built: Vec<(Variable, Result<(String, String, TagReport)>)> = Variable::ALL
            .par_iter()
            .map(|&v| {
                let r = (|| {
                    let docs: Vec<ScaleDoc> = records
                        .iter()
                        .zip(&rows)
                        .map(|(r, a)| ScaleDoc { id: &r.id, text: &r.text, z: a.conditions.get(v).z })
                        .collect();
                    let tagged = tag_percentiles(&docs, v, &params)?;
                    let scale = build_weather_scale(&tagged, &self.config.graph, &self.config.propagation)?;
                    let scatter = emit_word_scatter(&sentiment, &scale.lexicon, &scale.frequencies, self.config.scales.scatter_min_frequency)?;
                    Ok((formats::write_lexicon(&scale.lexicon), formats::write_scatter(&scatter), tagged.report))
                })();
                (v, r)
            })
            .collect();
        for (v, r) in built {
            let (scale, scatter, report) = r.map_err(|e: Error| e.context(format!("{v} scale")))?;
            self.write(&scale_path(v), scale)?;
            self.write(&scatter_path(v), scatter)?;
            self.write(&tags_path(v), formats::to_json(&report))?;
        }
        Ok(())
    }

    pub fn curves(&self) -> Result<()> {
        let scored = self.scored()?;
        let c = &self.config.curves;
        for v in Variable::ALL {
            for axis in [Axis::Raw, Axis::Z] {
                let curve = bin_response(&scored, v, axis, c.nbins, c.min_fraction)?;
                self.write(&curve_path(v, axis), formats::write_curve(&curve))?;
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> Result<()> {
        let scored = self.scored()?;
        let p = &self.config.pairs;
        for (a, b) in p.variable_pairs()? {
            let grid = pair_grid(&scored, a, b, p.axis, p.tiling(), p.min_count)?;
            self.write(&pair_path(a, b), formats::write_pair_grid(&grid.cells))?;
        }
        Ok(())
    }

    pub fn regions(&self) -> Result<()> {
        let Some(regions) = self.region_set()? else {
            return Err(Error::Config("paths.regions is not set".into()));
        };
        let scored = self.scored()?;
        let r = &self.config.regions;
        let groups = [r.groups[0].as_str(), r.groups[1].as_str()];
        let known = regions.groups();
        for g in groups {
            if !known.contains(g) {
                return Err(Error::Config(format!("no region belongs to group {g:?}")));
            }
        }
        let group_of = |t: &ScoredTweet| t.region.as_deref().and_then(|n| regions.group_of(n)).map(str::to_string);
        for v in r.variables()? {
            let cmp = regional_compare(&scored, group_of, groups, v, self.config.curves.nbins, self.config.curves.min_fraction)?;
            self.write(&regional_path(v), formats::write_regional(&RegionalReport::new(cmp)))?;
        }
        Ok(())
    }

    /// The seven artifact groups and the files each should hold.
    pub fn artifact_layout(&self) -> Result<Vec<(&'static str, Vec<String>)>> {
        let vars = Variable::ALL;
        let mut regional = Vec::new();
        if self.config.paths.regions.is_some() {
            regional = self.config.regions.variables()?.into_iter().map(regional_path).collect();
        }
        Ok(vec![
            ("climatology", vec![CLIMATOLOGY.to_string(), COVERAGE.to_string()]),
            ("lexicons", vec![SENTIMENT_LEXICON.to_string(), SENTIMENT_REPORT.to_string()]),
            ("scales", vars.iter().flat_map(|&v| [scale_path(v), scatter_path(v), tags_path(v)]).collect()),
            ("scored", vec![SCORED.to_string()]),
            ("curves", vars.iter().flat_map(|&v| [curve_path(v, Axis::Raw), curve_path(v, Axis::Z)]).collect()),
            ("grids", self.config.pairs.variable_pairs()?.into_iter().map(|(a, b)| pair_path(a, b)).collect()),
            ("regional", regional),
        ])
    }

    pub fn write_manifest(&self) -> Result<Manifest> {
        let c = &self.config;
        let mut input_paths: Vec<&PathBuf> = vec![&c.paths.corpus, &c.paths.grid, &c.paths.grid_spec];
        input_paths.extend(c.paths.regions.iter());
        input_paths.extend(c.paths.sentiment_seeds.iter());
        input_paths.extend(c.paths.rules.iter());
        let inputs = input_paths
            .into_iter()
            .map(|p| {
                let full = self.input(p);
                let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
                Ok(FileHash { path: p.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut parameters = serde_json::to_value(c).expect("config serializes");
        if let Some(paths) = parameters.get_mut("paths").and_then(|p| p.as_object_mut()) {
            paths.remove("out");
        }
        let artifacts = self
            .artifact_layout()?
            .into_iter()
            .map(|(name, files)| {
                let files = files.iter().map(|f| hash_file(&self.out, f)).collect::<Result<Vec<_>>>()?;
                Ok(ArtifactGroup { name: name.to_string(), files })
            })
            .collect::<Result<Vec<_>>>()?;
        let intermediates = [FILTERED_CORPUS, INGEST_REPORT, REJECTIONS, ANNOTATIONS, ANNOTATE_REPORT]
            .iter()
            .map(|f| hash_file(&self.out, f))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            parameters,
            artifacts,
            intermediates,
        };
        self.write(MANIFEST, formats::to_json(&manifest))?;
        Ok(manifest)
    }
}
