use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conefo::solvers::Variant;
use conefo_cli::{cmd_bench, cmd_reproduce, cmd_solve, cmd_testgen, CliError, RunConfig};

/// Smoothed conic dual solvers for sparse recovery.
#[derive(Parser)]
#[command(name = "conefo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write the solution, traces and a summary.
    Solve(Overrides),
    /// Run several variants on one problem and write a comparison table.
    Bench(Overrides),
    /// Generate a problem with a certified exact solution.
    Testgen(Overrides),
    /// Regenerate the data behind an experiment (fig2 ... fig7, mc_small).
    Reproduce {
        figure: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Flags take precedence over the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.variant {
            cfg.solver.variant = v;
            cfg.variants = vec![v];
        }
        if let Some(mu) = self.mu {
            cfg.mu = Some(mu);
        }
        if let Some(tol) = self.tol {
            cfg.solver.tol = tol;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => o.load().and_then(|c| cmd_solve(&c)),
        Command::Bench(o) => o.load().and_then(|c| cmd_bench(&c)),
        Command::Testgen(o) => o.load().and_then(|c| cmd_testgen(&c)),
        Command::Reproduce { figure, seed, out } => cmd_reproduce(figure, out, *seed),
    };
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
