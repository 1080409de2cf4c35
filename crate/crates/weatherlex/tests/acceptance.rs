//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line even when the run succeeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weatherlex::core::analytics::{hex_center, pair_grid, Axis, Tiling};
use weatherlex::core::corpus::{Geometry, TweetRecord};
use weatherlex::core::grid::{
    annotate_tweets, compute_climatology, Condition, ConditionAnnotation, DailyField, GridDataset, GridSpec, Variable,
    YearWindow,
};
use weatherlex::core::lexicon::Lexicon;
use weatherlex::core::scorer::{score_text, ScoredTweet, ScoringRules};
use weatherlex::core::stats::{pearson_r_p, spearman, Undefined};
use weatherlex::pipeline::{self, Pipeline};
use weatherlex::synth::{self, SynthConfig};
use weatherlex::{formats, Config};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// 1. filter cascade

fn record(id: usize, handle: &str, display: &str, text: &str) -> TweetRecord {
    TweetRecord {
        id: format!("r{id:03}"),
        timestamp: Utc.with_ymd_and_hms(2021, 7, 1, 9, 0, 0).unwrap() + chrono::Duration::minutes(id as i64),
        text: text.to_string(),
        author_handle: handle.to_string(),
        author_display: display.to_string(),
        geometry: Geometry::Point { lon: -1.5, lat: 53.8 },
    }
}

/// 100 posts: a bot with 5 posts, 3 single-post weather-named accounts,
/// 4 wind-speed reports and 1 "under the weather" post, all disjoint.
fn cascade_fixture() -> Vec<TweetRecord> {
    let mut out = Vec::new();
    let mut id = 0;
    let mut push = |h: &str, d: &str, t: &str| {
        id += 1;
        out.push(record(id, h, d, t));
    };
    for _ in 0..5 {
        push("autostation", "Auto Station", "lovely sunny morning out there");
    }
    push("leedsweather", "Leeds", "rain again");
    push("skywatcher", "Garden Weather Diary", "frost on the lawn");
    push("WeatherNerd", "Tom", "what a storm");
    for (k, t) in ["gusts of 45mph expected", "wind 12mph SW", "30 MPH gusts by the coast", "steady 20mph breeze"]
        .into_iter()
        .enumerate()
    {
        push(&format!("report{k}"), "", t);
    }
    push("poorly", "", "feeling under the weather today");
    for k in 0..87 {
        push(&format!("user{k:02}"), &format!("User {k}"), "nice day in the park, humph");
    }
    out
}

fn criterion_1(dir: &Path) -> Check {
    let records = cascade_fixture();
    let corpus = dir.join("cascade.jsonl");
    formats::write_file(&corpus, formats::write_corpus(&records)).map_err(fail)?;
    let config = Config::parse(
        "[paths]\ncorpus = \"cascade.jsonl\"\ngrid = \"unused.csv\"\ngrid_spec = \"unused.json\"\nout = \"cascade_out\"\n\n\
         [study]\nstart = 2021-01-01\nend = 2021-12-31\n",
        dir,
    )
    .map_err(fail)?;
    let report = Pipeline::new(config).ingest().map_err(fail)?;
    let counts = report.counts();
    ensure(counts == [100, 95, 92, 87], format!("cascade {counts:?}"))?;
    Ok(format!("cascade {counts:?}"))
}

// ---------------------------------------------------------------------------
// 2. z-score oracle

fn criterion_2(dir: &Path) -> Check {
    let spec = GridSpec { lat_origin: 50.0, lon_origin: -4.0, dlat: 0.5, dlon: 0.5, n_lat: 4, n_lon: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let dates: Vec<NaiveDate> = (0..365).map(|d| start + chrono::Duration::days(d)).collect();
    let ranges = [(-5.0, 30.0), (0.0, 40.0), (0.0, 25.0), (40.0, 100.0), (960.0, 1045.0)];
    let mut fields = Vec::new();
    for &date in &dates {
        for v in Variable::ALL {
            let (lo, hi) = ranges[v.index()];
            let values = (0..spec.cells()).map(|_| Some((rng.random_range(lo..hi) * 100.0f64).round() / 100.0)).collect();
            fields.push(DailyField { date, variable: v, values });
        }
    }
    let dataset = GridDataset::from_fields(spec, fields).map_err(fail)?;

    // through the on-disk format and back
    let (csv, json) = (dir.join("zgrid.csv"), dir.join("zgrid.json"));
    formats::write_file(&csv, formats::write_grid(&dataset)).map_err(fail)?;
    formats::write_file(&json, formats::write_grid_spec(&spec)).map_err(fail)?;
    let dataset = formats::read_grid(&csv, &json).map_err(fail)?;

    let window = YearWindow::new(2019, 2019).map_err(fail)?;
    let clim = compute_climatology(&dataset, window, 100).map_err(fail)?;
    let mut records = Vec::new();
    for &date in &dates {
        for cell in 0..spec.cells() {
            let (i, j) = spec.unflat(cell);
            let (lon, lat) = spec.node(i, j);
            records.push(TweetRecord {
                id: format!("{date}-{cell}"),
                timestamp: Utc.from_utc_datetime(&date.and_hms_opt(12, 0, 0).unwrap()),
                text: String::new(),
                author_handle: "a".into(),
                author_display: String::new(),
                geometry: Geometry::Point { lon, lat },
            });
        }
    }
    let report = annotate_tweets(&records, &dataset, &clim).map_err(fail)?;

    // brute force: population mean and sd per (cell, variable) straight from the values
    let mut checked = 0;
    let mut worst = 0.0f64;
    for v in Variable::ALL {
        for cell in 0..spec.cells() {
            let xs: Vec<f64> = dates.iter().map(|&d| dataset.value(d, v, cell).unwrap()).collect();
            let n = xs.len() as f64;
            let mu = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
            for (k, x) in xs.iter().enumerate() {
                let got = report.annotations[k * spec.cells() + cell].get(v).z.ok_or("missing z")?;
                worst = worst.max((got - (x - mu) / sd).abs());
                checked += 1;
            }
        }
    }
    ensure(checked == 4 * 4 * 365 * 5, format!("checked {checked}"))?;
    ensure(worst <= 1e-9, format!("max |dz| = {worst:e}"))?;
    Ok(format!("{checked} z-scores, max |dz| = {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 3-6 share one synthetic run

struct SynthRun {
    bundle: PathBuf,
    out: PathBuf,
    truth: synth::Truth,
    elapsed: Duration,
}

fn synth_run(dir: &Path, name: &str) -> std::result::Result<SynthRun, String> {
    let bundle = dir.join(name);
    let t = Instant::now();
    let config_path = synth::write_bundle(&SynthConfig::default(), &bundle).map_err(fail)?;
    let config = Config::load(&config_path).map_err(fail)?;
    let p = Pipeline::new(config);
    p.run_all().map_err(fail)?;
    let truth = synth::read_truth(&bundle.join(synth::TRUTH_FILE)).map_err(fail)?;
    Ok(SynthRun { out: p.out.clone(), bundle, truth, elapsed: t.elapsed() })
}

fn lexicon(path: &Path) -> std::result::Result<Lexicon, String> {
    formats::read_lexicon(path).map_err(fail)
}

fn criterion_3(run: &SynthRun) -> Check {
    let lex = lexicon(&run.out.join(pipeline::SENTIMENT_LEXICON))?;
    let share = |words: &[String], sign: f64| {
        let known: Vec<&String> = words.iter().filter(|w| lex.get(w).is_some()).collect();
        let right = known.iter().filter(|w| lex.score(w) * sign > 0.0).count();
        (right, known.len())
    };
    let (sp, np) = share(&run.truth.positive_seeds, 1.0);
    let (sn, nn) = share(&run.truth.negative_seeds, -1.0);
    let (pp, npp) = share(&run.truth.planted_positive, 1.0);
    let (pn, npn) = share(&run.truth.planted_negative, -1.0);
    let seeds = (sp + sn) as f64 / (np + nn).max(1) as f64;
    let planted = (pp + pn) as f64 / (npp + npn).max(1) as f64;
    let msg = format!("seeds {}/{} ({seeds:.3}), planted {}/{} ({planted:.3})", sp + sn, np + nn, pp + pn, npp + npn);
    ensure(np + nn > 0 && npp + npn > 0, "no seeds or planted words in vocabulary")?;
    ensure(seeds >= 0.90 && planted >= 0.85, msg.clone())?;
    Ok(msg)
}

fn criterion_4(run: &SynthRun) -> Check {
    let lex = lexicon(&run.out.join(pipeline::scale_path(Variable::Tmax)))?;
    let top = &run.truth.top_only_token;
    let uniform = &run.truth.uniform_token;
    let s_top = lex.get(top).ok_or(format!("{top} not in scale"))?;
    let s_uni = lex.get(uniform).ok_or(format!("{uniform} not in scale"))?;
    let above = lex.iter().filter(|(_, s)| *s > s_top).count();
    let frac = above as f64 / lex.len() as f64;
    let msg = format!("{top} = {s_top:.3} ({above}/{} tokens above), {uniform} = {s_uni:.3}", lex.len());
    ensure(frac <= 0.10, format!("{msg}: not in top decile"))?;
    ensure(s_uni.abs() <= 0.1, format!("{msg}: uniform token off zero"))?;
    Ok(msg)
}

fn criterion_5(run: &SynthRun) -> Check {
    let path = run.out.join(pipeline::curve_path(Variable::Tmax, Axis::Z));
    let rows = formats::parse_curve(&path, &formats::read_to_string(&path).map_err(fail)?).map_err(fail)?;
    ensure(rows.len() == 30, format!("{} bins", rows.len()))?;
    let width = rows[1].bin_center - rows[0].bin_center;
    let included: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.included).filter_map(|r| Some((r.bin_center, r.mean_sentiment?))).collect();
    let (peak_center, _) = included.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).ok_or("no included bins")?;
    let peak = run.truth.response.peak;
    let centers: Vec<f64> = included.iter().map(|p| p.0).collect();
    let observed: Vec<f64> = included.iter().map(|p| p.1).collect();
    let planted: Vec<f64> = centers.iter().map(|&z| run.truth.response.valence(z)).collect();
    let rho = spearman(&observed, &planted).map_err(fail)?.r;
    // argmax bin [c - w/2, c + w/2] must reach into peak +- w
    let gap = (peak_center - peak).abs();
    let msg = format!("argmax bin center {peak_center:.3} (width {width:.3}), spearman {rho:.3}");
    ensure(gap <= 1.5 * width, format!("{msg}: peak missed"))?;
    ensure(rho >= 0.9, format!("{msg}: rank agreement too low"))?;
    Ok(msg)
}

fn criterion_6(run: &SynthRun) -> Check {
    let path = run.out.join(pipeline::regional_path(Variable::Tmax));
    let report = formats::parse_regional(&path, &formats::read_to_string(&path).map_err(fail)?).map_err(fail)?;
    let raw = report.raw_r.ok_or(format!("raw r undefined: {:?}", report.raw_undefined))?;
    let norm = report.norm_r.ok_or(format!("normalized r undefined: {:?}", report.norm_undefined))?;
    let msg = format!("raw r {raw:.3} over {} bins, normalized r {norm:.3} over {} bins", report.raw_shared_bins, report.shared_bins);
    ensure(raw < norm && norm >= 0.95, msg.clone())?;
    Ok(msg)
}

// ---------------------------------------------------------------------------
// 7. pair grid

fn scored(id: usize, a: f64, b: f64, sentiment: f64) -> ScoredTweet {
    let mut conditions = [Condition::default(); 5];
    for (v, x) in [(Variable::Tmax, a), (Variable::Wind, b)] {
        conditions[v.index()] = Condition { raw: Some(x), baseline: Some((0.0, 1.0)), z: Some(x) };
    }
    ScoredTweet {
        id: format!("p{id}"),
        timestamp: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
        sentiment,
        conditions: ConditionAnnotation { conditions },
        region: None,
    }
}

fn criterion_7() -> Check {
    let size = 0.25;
    let tiling = Tiling::Hex { size };
    // 4 posts at the center of hex (2, 0), 5 at the center of hex (-1, 3)
    let (ax, ay) = hex_center(2, 0, size);
    let (bx, by) = hex_center(-1, 3, size);
    let mut tweets: Vec<ScoredTweet> = (0..4).map(|k| scored(k, ax, ay, 0.1)).collect();
    tweets.extend((0..5).map(|k| scored(10 + k, bx, by, -0.2)));
    let grid = pair_grid(&tweets, Variable::Tmax, Variable::Wind, Axis::Z, tiling, 5).map_err(fail)?;
    ensure(grid.total() == tweets.len(), "fixture counts do not sum to N")?;
    let cell = |q, r| grid.cells.iter().find(|c| c.q == q && c.r == r).copied();
    let four = cell(2, 0).ok_or("4-post cell missing")?;
    let five = cell(-1, 3).ok_or("5-post cell missing")?;
    ensure(four.count == 4 && four.suppressed, "4-post cell not suppressed")?;
    ensure(five.count == 5 && !five.suppressed, "5-post cell suppressed")?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points: Vec<ScoredTweet> =
        (0..200).map(|k| scored(k, rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0))).collect();
    let grid = pair_grid(&points, Variable::Tmax, Variable::Wind, Axis::Z, tiling, 5).map_err(fail)?;
    ensure(grid.total() == 200, format!("counts sum to {}", grid.total()))?;

    // brute force: nearest center over a window of axial coordinates
    let mut expected: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for t in &points {
        let (x, y) = (t.value(Variable::Tmax, Axis::Z).unwrap(), t.value(Variable::Wind, Axis::Z).unwrap());
        let mut best = ((0, 0), f64::INFINITY);
        for q in -20..=20 {
            for r in -20..=20 {
                let (cx, cy) = hex_center(q, r, size);
                let d = (x - cx).powi(2) + (y - cy).powi(2);
                if d < best.1 {
                    best = ((q, r), d);
                }
            }
        }
        *expected.entry(best.0).or_default() += 1;
    }
    let got: BTreeMap<(i64, i64), usize> = grid.cells.iter().map(|c| ((c.q, c.r), c.count)).collect();
    ensure(got == expected, "hex assignment differs from nearest-center search")?;
    Ok(format!("4-count suppressed, 5-count kept, 200 points in {} cells match brute force", got.len()))
}

// ---------------------------------------------------------------------------
// 8. statistics oracle

/// P(|T| > |t|) for t = r sqrt(v / (1 - r^2)), by Simpson quadrature of
/// cos^(v-1) over theta = atan(|t| / sqrt(v)).
fn p_oracle(n: usize, r: f64) -> f64 {
    let v = (n - 2) as f64;
    let t = r.abs() * (v / (1.0 - r * r)).sqrt();
    let theta0 = (t / v.sqrt()).atan();
    let f = |x: f64| x.cos().powf(v - 1.0);
    let simpson = |a: f64, b: f64| {
        let m = 400_000;
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for k in 1..m {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    simpson(theta0, half) / simpson(0.0, half)
}

/// Two series of length n whose sample correlation is exactly r.
fn with_correlation(n: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
    let center = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let unit = |v: Vec<f64>| {
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let e1 = unit(center((0..n).map(|i| i as f64).collect()));
    let raw2 = center((0..n).map(|i| ((i * 7 + 3) % n) as f64 + (i as f64 * 0.37).sin()).collect());
    let dot: f64 = e1.iter().zip(&raw2).map(|(a, b)| a * b).sum();
    let e2 = unit(raw2.iter().zip(&e1).map(|(b, a)| b - dot * a).collect());
    let y = e1.iter().zip(&e2).map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b).collect();
    (e1, y)
}

fn criterion_8() -> Check {
    let fixtures = [(3, 0.3), (4, -0.9), (5, 0.1), (10, 0.7), (20, 0.5), (30, -0.2), (50, 0.35), (100, 0.05), (200, -0.15), (1000, 0.08)];
    let mut worst = 0.0f64;
    for (n, r) in fixtures {
        let (x, y) = with_correlation(n, r);
        let c = pearson_r_p(&x, &y).map_err(fail)?;
        ensure((c.r - r).abs() < 1e-12, format!("n={n}: r = {}", c.r))?;
        let oracle = p_oracle(n, r);
        let d = (c.p - oracle).abs();
        worst = worst.max(d);
        ensure(d <= 1e-8, format!("n={n} r={r}: p {} vs oracle {oracle}", c.p))?;
    }
    let line: Vec<f64> = (0..10).map(f64::from).collect();
    let up = pearson_r_p(&line, &line).map_err(fail)?;
    let down = pearson_r_p(&line, &line.iter().map(|v| -v).collect::<Vec<_>>()).map_err(fail)?;
    ensure(up.r == 1.0 && up.p == 0.0 && down.r == -1.0 && down.p == 0.0, "r = +-1 must give p = 0")?;
    ensure(pearson_r_p(&line, &[2.0; 10]) == Err(Undefined::ZeroVariance), "constant input must be undefined")?;
    ensure(pearson_r_p(&[1.0, 2.0], &[1.0, 3.0]) == Err(Undefined::TooFew(2)), "n = 2 must be undefined")?;
    Ok(format!("10 fixtures, max |dp| = {worst:.1e}; perfect and degenerate cases per contract"))
}

// ---------------------------------------------------------------------------
// 9. scorer rules

fn criterion_9() -> Check {
    let rules = ScoringRules::default();
    let lex = Lexicon::from_scores(
        "sentiment",
        [("love", 0.8), ("horrid", -0.75), ("good", 0.5), ("bad", -0.5), ("sunny", 0.3)].map(|(w, s)| (w.to_string(), s)),
    )
    .map_err(fail)?;
    let s = |t: &str| score_text(t, &lex, &rules);
    ensure(s("I love the weather") > 0.0, "love sentence not positive")?;
    ensure(s("This weather is horrid") < 0.0, "horrid sentence not negative")?;
    ensure(s("good") > 0.0 && s("not good") < 0.0, "negation does not flip good")?;
    ensure(s("bad") < 0.0 && s("not bad") > 0.0, "negation does not flip bad")?;
    ensure(s("very good") > s("good") && s("extremely bad") < s("bad"), "booster does not raise magnitude")?;

    let words = ["love", "horrid", "good", "bad", "sunny", "not", "very", "slightly", "never", "the", "weather", "!", "GOOD", "LOVE", "Horrid", "!!!", "so", "rain"];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let n = rng.random_range(0..40);
        let text: Vec<&str> = (0..n).map(|_| words[rng.random_range(0..words.len())]).collect();
        let text = text.join(if rng.random_bool(0.2) { "" } else { " " });
        let v = s(&text);
        ensure(v.is_finite() && (-1.0..=1.0).contains(&v), format!("{text:?} scored {v}"))?;
    }
    Ok("example signs, negation flip, booster increase, 10000 fuzzed inputs in [-1, 1]".into())
}

// ---------------------------------------------------------------------------
// 10. determinism

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_10(first: &SynthRun, dir: &Path) -> Check {
    let second = synth_run(dir, "synth_again")?;
    let a = files_under(&first.bundle);
    let b = files_under(&second.bundle);
    ensure(a == b, "runs produced different file sets")?;
    for rel in &a {
        let x = std::fs::read(first.bundle.join(rel)).map_err(fail)?;
        let y = std::fs::read(second.bundle.join(rel)).map_err(fail)?;
        ensure(x == y, format!("{} differs", rel.display()))?;
    }
    Ok(format!("{} files byte-identical", a.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut report = |n: usize, budget: Duration, started: Instant, result: Check| {
        let took = started.elapsed();
        let result = result.and_then(|m| {
            if took <= budget {
                Ok(m)
            } else {
                Err(format!("{m}; took {took:.2?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(m) => println!("criterion {n:>2}: PASS  {m} [{took:.2?}]"),
            Err(m) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {m} [{took:.2?}]");
            }
        }
    };
    let secs = Duration::from_secs;

    let t = Instant::now();
    report(1, secs(1), t, criterion_1(dir.path()));
    let t = Instant::now();
    report(2, secs(5), t, criterion_2(dir.path()));

    match synth_run(dir.path(), "synth") {
        Ok(run) => {
            // the shared pipeline run counts against each budget
            let t = Instant::now() - run.elapsed;
            report(3, secs(120), t, criterion_3(&run));
            let t = Instant::now() - run.elapsed;
            report(4, secs(120), t, criterion_4(&run));
            let t = Instant::now() - run.elapsed;
            report(5, secs(60), t, criterion_5(&run));
            let t = Instant::now() - run.elapsed;
            report(6, secs(60), t, criterion_6(&run));
            let t = Instant::now();
            let r7 = criterion_7();
            report(7, secs(5), t, r7);
            let t = Instant::now();
            report(8, secs(1), t, criterion_8());
            let t = Instant::now();
            report(9, secs(10), t, criterion_9());
            let t = Instant::now() - run.elapsed;
            report(10, secs(300), t, criterion_10(&run, dir.path()));
        }
        Err(e) => {
            for n in [3, 4, 5, 6, 10] {
                report(n, secs(300), Instant::now(), Err(format!("synthetic pipeline failed: {e}")));
            }
            for (n, budget, f) in [(7, 5, criterion_7 as fn() -> Check), (8, 1, criterion_8), (9, 10, criterion_9)] {
                let t = Instant::now();
                report(n, secs(budget), t, f());
            }
        }
    }

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
