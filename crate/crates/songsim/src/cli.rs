//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use songsim_core::FeatureScheme;

use crate::config::{Overrides, RunConfig};
use crate::error::{AppError, AppResult};
use crate::eval::{threshold_label, EvalReport};
use crate::pipeline::{StageRun, Workspace, REPORTS, TABLES};
use crate::synth::{generate, write_corpus, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "songsim", version, about = "Learn song-to-song similarity from tags and listening histories")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Similarity threshold; repeatable.
    #[arg(long = "threshold", global = true)]
    pub thresholds: Vec<f64>,
    /// Feature scheme (`tfidf` or `embed`); repeatable.
    #[arg(long = "scheme", global = true, value_parser = parse_scheme)]
    pub schemes: Vec<FeatureScheme>,
    /// Maximum number of pairs per dataset.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    /// Recompute even when the cache is fresh.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic songs.jsonl and histories.csv into the workdir.
    Synth(SynthArgs),
    /// Normalize song documents and listening histories.
    Ingest,
    /// Build the co-occurrence similarity graph.
    Groundtruth,
    /// Compute song feature vectors for the selected schemes.
    Features,
    /// Select pairs and build train/test datasets.
    Pairs,
    /// Grid-search every model entry on every dataset.
    Train {
        /// Restrict to one model entry.
        #[arg(long)]
        model: Option<String>,
    },
    /// Score trained models and write reports.csv and tables.txt.
    Evaluate,
    /// Run every stage in order.
    Pipeline,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = SynthSpec::default().n_songs)]
    pub songs: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_users)]
    pub users: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_genres)]
    pub genres: usize,
    #[arg(long, default_value_t = SynthSpec::default().tags_per_genre)]
    pub tags_per_genre: usize,
    #[arg(long, default_value_t = SynthSpec::default().noise)]
    pub noise: f64,
}

fn parse_scheme(s: &str) -> Result<FeatureScheme, String> {
    s.parse().map_err(|_| format!("unknown scheme `{s}` (expected tfidf or embed)"))
}

impl Common {
    pub fn resolve(&self) -> AppResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            workdir: self.workdir.clone(),
            seed: self.seed,
            thresholds: self.thresholds.clone(),
            schemes: self.schemes.clone(),
            limit: self.limit,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_runs(runs: &[StageRun]) {
    for r in runs {
        let what = if r.computed { "computed" } else { "cached" };
        println!("{:<40} {what:<8} {:>8.2}s", r.name, r.seconds);
    }
}

fn print_summary(reports: &[EvalReport], ws: &Workspace) {
    let failed = reports.iter().filter(|r| !r.is_ok()).count();
    println!("{} cells, {failed} failed; see {} and {}", reports.len(), ws.path(REPORTS).display(), ws.path(TABLES).display());
}

pub fn run(cli: Cli) -> AppResult<()> {
    let cfg = cli.common.resolve()?;
    if let Command::Synth(a) = &cli.command {
        let spec = SynthSpec {
            n_songs: a.songs,
            n_users: a.users,
            n_genres: a.genres,
            tags_per_genre: a.tags_per_genre,
            noise: a.noise,
            seed: cfg.seed,
        };
        let corpus = generate(&spec)?;
        let (songs, histories) = write_corpus(&corpus, &cfg.workdir)?;
        println!("wrote {} songs to {} and {} listens to {}", corpus.songs.len(), songs.display(), corpus.listens.len(), histories.display());
        return Ok(());
    }

    let mut ws = Workspace::open(cfg, cli.common.force)?;
    match &cli.command {
        Command::Synth(_) => unreachable!(),
        Command::Ingest => {
            ws.ingest()?;
        }
        Command::Groundtruth => {
            ws.groundtruth()?;
        }
        Command::Features => {
            for s in ws.cfg.schemes.clone() {
                ws.features(s)?;
            }
        }
        Command::Pairs => {
            for s in ws.cfg.schemes.clone() {
                for t in ws.cfg.thresholds.clone() {
                    ws.pairs(s, t)?;
                }
            }
        }
        Command::Train { model } => {
            let entries: Vec<_> = ws.cfg.models.iter().filter(|e| model.as_ref().is_none_or(|m| *m == e.name)).cloned().collect();
            if entries.is_empty() {
                return Err(AppError::Usage(format!("no model entry named `{}`", model.as_deref().unwrap_or(""))));
            }
            for s in ws.cfg.schemes.clone() {
                for t in ws.cfg.thresholds.clone() {
                    for e in &entries {
                        ws.train(s, t, e).inspect_err(|_| {
                            log::error!("train[{s},{},{}] failed", threshold_label(t), e.name);
                        })?;
                    }
                }
            }
        }
        Command::Evaluate => {
            let reports = ws.evaluate()?;
            print_runs(ws.runs());
            print_summary(&reports, &ws);
            return Ok(());
        }
        Command::Pipeline => {
            let reports = ws.run_all()?;
            print_runs(ws.runs());
            print_summary(&reports, &ws);
            return Ok(());
        }
    }
    print_runs(ws.runs());
    Ok(())
}
