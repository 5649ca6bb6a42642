use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use magwave::harness::{cmd_go_decay, cmd_recover, cmd_stability, cmd_verify, ExperimentConfig, Outcome};
use magwave::Error;

#[derive(Parser)]
#[command(name = "magwave", version, about = "Magnetic waveguide DN-map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suites and write verify.csv
    Verify(Common),
    /// Remainder norms of GO solutions over the sigma list
    GoDecay(Common),
    /// Sample, reconstruct and score beta23 of A2 - A1
    Recover(Common),
    /// Perturbation-family stability table
    Stability(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (key = value); built-in defaults when absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overrides run.workers
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for randomized checks, overrides run.seed
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> magwave::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                Error::Io(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg = cfg.with("output.dir", &out.to_string_lossy())?;
        }
        if let Some(w) = self.workers {
            cfg = cfg.with("run.workers", &w.to_string())?;
        }
        if let Some(s) = self.seed {
            cfg = cfg.with("run.seed", &s.to_string())?;
        }
        Ok(cfg)
    }
}

type CommandFn = fn(&ExperimentConfig) -> magwave::Result<Outcome>;

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (name, common, cmd): (&str, &Common, CommandFn) = match &cli.command {
        Command::Verify(c) => ("verify", c, cmd_verify),
        Command::GoDecay(c) => ("go-decay", c, cmd_go_decay),
        Command::Recover(c) => ("recover", c, cmd_recover),
        Command::Stability(c) => ("stability", c, cmd_stability),
    };
    let cfg = common.load()?;
    cmd(&cfg).with_context(|| format!("{name} failed"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            for (name, sum) in &out.manifest.files {
                println!("{sum}  {}", out.dir.join(name).display());
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more checks failed; see {}", out.dir.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
