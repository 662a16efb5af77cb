//! `revdict`: command-line front end of the reverse dictionary pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use revdict::model::Architecture;

mod artifacts;
mod config;
mod corpus_cmd;
mod eval_cmd;
mod mos_cmd;
mod prepare;
mod query;
mod train_cmd;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "revdict", version, about = "Persian neural reverse dictionary")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured architecture.
    #[arg(long, global = true, value_parser = parse_arch)]
    arch: Option<Architecture>,
    /// Overrides the number of recognised output words.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Overrides the number of suggestions printed.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Overrides the stratified sample size.
    #[arg(long, global = true)]
    s: Option<usize>,
    /// Checkpoint file (default: `<output>/<arch>.ckpt`).
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Log verbosity; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalise, clean, split and restrict the lexical entries.
    Prepare,
    /// Build the pruned word frequency ranking.
    Rank,
    /// Corpus coverage of the top-n ranked words.
    Coverage,
    /// Train the configured architecture.
    Train {
        /// Continue from the checkpoint instead of a fresh initialisation.
        #[arg(long)]
        resume: bool,
    },
    /// Accuracy and cosine loss on stratified samples.
    Eval {
        /// Print JSON lines instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Suggest words for a phrase, or for each stdin line when no phrase is given.
    Query {
        #[arg(long)]
        phrase: Option<String>,
    },
    /// Mean opinion scores from human ratings.
    Mos {
        /// CSV with header `rater_id,item_id,score`.
        #[arg(long)]
        ratings: PathBuf,
        /// JSON Lines item manifest.
        #[arg(long)]
        manifest: PathBuf,
        /// Minimum mean kappa for a rater to count.
        #[arg(long, default_value_t = revdict::eval::VALID_RATER_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        json: bool,
    },
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    s.parse()
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(arch) = self.arch {
            cfg.model.architecture = arch;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(s) = self.s {
            cfg.s = s;
        }
        if let Some(out) = &self.output {
            cfg.paths.output = out.clone();
        }
        Ok(cfg)
    }

    fn checkpoint(&self, cfg: &RunConfig) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| artifacts::default_checkpoint(cfg, cfg.model.architecture))
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Command::Mos {
        ratings,
        manifest,
        threshold,
        json,
    } = &cli.command
    {
        mos_cmd::run(ratings, manifest, *threshold, *json)?;
        return Ok(true);
    }
    let cfg = cli.run_config()?;
    match &cli.command {
        Command::Prepare => prepare::run(&cfg)?,
        Command::Rank => corpus_cmd::rank(&cfg)?,
        Command::Coverage => corpus_cmd::coverage(&cfg)?,
        Command::Train { resume } => train_cmd::run(&cfg, &cli.checkpoint(&cfg), *resume)?,
        Command::Eval { json } => eval_cmd::run(&cfg, &cli.checkpoint(&cfg), *json)?,
        Command::Query { phrase } => return query::run(&cfg, &cli.checkpoint(&cfg), phrase.as_deref()),
        Command::Mos { .. } => unreachable!("handled above"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        // Errors were already reported (query REPL).
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
