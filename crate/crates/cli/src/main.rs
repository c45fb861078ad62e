//! `krylov`: run CG, CR, MINRES and the pseudo-inverse variants on
//! synthetic, Poisson or Matrix Market problems and write traces.

mod commands;
mod config;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::Status;
use config::{ExperimentConfig, MethodName, ProblemSpec};

#[derive(Parser)]
#[command(
    name = "krylov",
    version,
    about = "Krylov solvers for singular symmetric systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run each method and write trace CSVs plus summary.json.
    Solve(Overrides),
    /// Compare CR and MINRES iterates and write compare.csv.
    Compare(Overrides),
    /// Run CG up to the grade and write instability.csv/json.
    Instability(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synth:d=..,m=..,family=..`, `poisson:n=..[,domain=..]` or `file:PATH[,rhs=PATH]`.
    #[arg(long)]
    problem: Option<ProblemSpec>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodName>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_vectors: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            cfg.problem = Some(p);
        }
        if let Some(m) = self.methods {
            cfg.methods = m;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if self.max_iter.is_some() {
            cfg.max_iter = self.max_iter;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.record_vectors |= self.record_vectors;
        if let Some(o) = self.out {
            cfg.output_dir = o;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Solve(o) => commands::cmd_solve(&o.resolve()?),
        Command::Compare(o) => commands::cmd_compare(&o.resolve()?),
        Command::Instability(o) => commands::cmd_instability(&o.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::ZeroCurvature) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
