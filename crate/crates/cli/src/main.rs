use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ssc_cli::bench::timing_bench;
use ssc_cli::report::{emit_report, write_atomic};
use ssc_cli::verify::{render, verify, Tolerances};
use ssc_cli::{run_sweep, RunConfig};
use ssc_core::ldssc::{Algorithm, SolverConfig};

#[derive(Parser)]
#[command(
    name = "ssc",
    version,
    about = "Semidefinite spectral clustering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    LdSsc1,
    LdSsc2,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::LdSsc1 => Algorithm::LdSsc1,
            Algo::LdSsc2 => Algorithm::LdSsc2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a kernel-parameter sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time LD-SSC1 and LD-SSC2 on two-Gaussian data of growing size.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::LdSsc2])]
        algorithms: Vec<Algo>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the table as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compare both solvers with the Dykstra projection on random matrices.
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = [10])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let report = run_sweep(&cfg)?;
            let files = emit_report(&report, &cfg.output_dir)?;
            print!("{}", ssc_cli::report::render_table(&report));
            println!("\nresults: {}", files.results.display());
            if !files.traces.is_empty() {
                println!(
                    "traces:  {} files in {}",
                    files.traces.len(),
                    cfg.output_dir.join("traces").display()
                );
            }
            Ok(report.cells.iter().all(|c| c.failure.is_none()))
        }
        Command::Bench {
            sizes,
            trials,
            algorithms,
            seed,
            json,
        } => {
            let algos: Vec<Algorithm> = algorithms.into_iter().map(Into::into).collect();
            let table = timing_bench(&sizes, trials, &algos, &SolverConfig::default(), seed)?;
            print!("{}", table.render());
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&table)?;
                write_atomic(&p, text.as_bytes())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(true)
        }
        Command::Verify { n, count, seed } => {
            let t = Tolerances::default();
            let checks = verify(&n, count, &SolverConfig::default(), seed)?;
            print!("{}", render(&checks, &t));
            Ok(checks.iter().all(|c| c.passes(&t)))
        }
    }
}
