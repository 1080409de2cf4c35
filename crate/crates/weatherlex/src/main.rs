use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weatherlex::synth::{self, SynthConfig};
use weatherlex::{formats, Config, Error, Pipeline, Result, Stage};

#[derive(Parser)]
#[command(name = "weatherlex", version, about = "Weather-sentiment corpus analytics")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the synthetic generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides paths.out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and filter the corpus.
    Ingest,
    /// Compute per-cell baselines from the grid.
    Climatology,
    /// Join posts to weather conditions and regions.
    Annotate,
    /// Induce the sentiment lexicon.
    TrainSentiment,
    /// Induce the five weather-intensity scales and word scatter tables.
    TrainScales,
    /// Score every post.
    Score,
    /// Binned sentiment response curves.
    Curves,
    /// Pairwise condition grids.
    Pairs,
    /// Regional comparison with dual normalization.
    Regions,
    /// Write a synthetic corpus, grid, regions and config.
    Synth {
        /// Number of posts (overrides the synth config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run every stage in order and write a manifest.
    Pipeline,
}

fn stage(cmd: &Command) -> Option<Stage> {
    Some(match cmd {
        Command::Ingest => Stage::Ingest,
        Command::Climatology => Stage::Climatology,
        Command::Annotate => Stage::Annotate,
        Command::TrainSentiment => Stage::TrainSentiment,
        Command::TrainScales => Stage::TrainScales,
        Command::Score => Stage::Score,
        Command::Curves => Stage::Curves,
        Command::Pairs => Stage::Pairs,
        Command::Regions => Stage::Regions,
        Command::Synth { .. } | Command::Pipeline => return None,
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    if let Command::Synth { n } = cli.command {
        let mut cfg = match &cli.config {
            Some(p) => toml::from_str::<SynthConfig>(&formats::read_to_string(p)?).map_err(|e| Error::Config(e.to_string()))?,
            None => SynthConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(n) = n {
            cfg.n_tweets = n;
        }
        let dir = cli.out.ok_or_else(|| Error::Config("synth needs --out DIR".into()))?;
        let path = synth::write_bundle(&cfg, &dir)?;
        eprintln!("wrote synthetic bundle; run: weatherlex pipeline --config {}", path.display());
        return Ok(());
    }
    let path = cli.config.ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let config = Config::load(&path)?;
    let pipeline = match cli.out {
        Some(out) => Pipeline::with_out(config, out),
        None => Pipeline::new(config),
    };
    match stage(&cli.command) {
        Some(s) => pipeline.run(s),
        None => {
            let m = pipeline.run_all()?;
            let files: usize = m.artifacts.iter().map(|a| a.files.len()).sum();
            eprintln!("{} artifact groups ({files} files) in {}", m.artifacts.len(), pipeline.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
