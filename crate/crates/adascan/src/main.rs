use std::path::PathBuf;

use adascan::commands::{self, EvalMode};
use adascan::{Preset, RunConfig};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

/// Adaptive sparse scan paths for partial-scan completion.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic WEM1 dataset.
    Synth {
        #[arg(long, default_value_t = 2048)]
        count: usize,
        #[arg(long, default_value_t = 96)]
        height: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train, or resume from --checkpoint.
    Train(Common),
    /// Report test-set completion errors of a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "adaptive")]
        mode: EvalMode,
    },
    /// Render the scan, completion and target of one test image as PGM.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "adaptive")]
        mode: EvalMode,
        #[arg(long, default_value_t = 0)]
        image_index: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        let origin = self.config.as_ref().map(|p| p.display().to_string()).unwrap_or("defaults".into());
        let mut cfg = RunConfig::parse(&text, self.preset).with_context(|| format!("in {origin}"))?;
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(c) = &self.checkpoint {
            cfg.checkpoint = Some(c.clone());
        }
        Ok(cfg)
    }

    fn checkpoint(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
        cfg.checkpoint.clone().context("a checkpoint is required (--checkpoint PATH)")
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth {
            count,
            height,
            width,
            seed,
            out,
        } => commands::synth(count, height, width, seed, &out)?,
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let summary = commands::train(&cfg, |_| {})?;
            println!("trained to iteration {}", summary.iteration);
            if let Some(last) = summary.checkpoints.last() {
                println!("checkpoint {}", last.display());
            }
        }
        Command::Eval { common, mode } => {
            let cfg = common.resolve()?;
            let r = commands::eval(&cfg, &Common::checkpoint(&cfg)?, &mode)?;
            println!("mean,std,count");
            println!("{},{},{}", r.mean, r.std, r.count);
        }
        Command::Render {
            common,
            mode,
            image_index,
        } => {
            let cfg = common.resolve()?;
            commands::render(&cfg, &Common::checkpoint(&cfg)?, image_index, &mode)?;
            println!("rendered test image {image_index} to {}", cfg.out.display());
        }
    }
    Ok(())
}
