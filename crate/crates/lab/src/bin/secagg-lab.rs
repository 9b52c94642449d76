use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use lightsecagg_lab::cli;
use lightsecagg_lab::verify::render;

#[derive(Parser)]
#[command(name = "secagg-lab", about = "Secure-aggregation protocol lab", version)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every cell of an experiment spec and write costs.csv.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, env = "SECAGG_LAB_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "SECAGG_LAB_SEED")]
        seed: Option<u64>,
    },
    /// Print a comparison table for one or more cost CSVs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        csv: Vec<PathBuf>,
        /// Where to write plot data; nothing is written when omitted.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Check a round transcript.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    match Args::parse().cmd {
        Cmd::Run { spec, out, seed } => {
            let spec = cli::load_spec(&spec, seed, out).with_context(|| format!("loading {}", spec.display()))?;
            let s = cli::cmd_run(&spec)?;
            println!("{} rounds, costs in {}", s.rounds, s.csv.display());
            for f in &s.recovery_failures {
                println!("recovery failed: {f}");
            }
            for e in &s.errors {
                eprintln!("round error: {e}");
            }
            Ok(if s.success() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Report { csv, plot_dir } => {
            print!("{}", cli::cmd_report(&csv, plot_dir.as_deref())?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { transcript } => {
            let v = cli::cmd_verify(&transcript)?;
            print!("{}", render(&v));
            Ok(if v.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
