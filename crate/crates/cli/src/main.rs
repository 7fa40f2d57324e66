use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dsebo::harness::{self, SweepParam, THREADS_ENV};
use dsebo::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dsebo", version, about = "Run and summarize dsebo experiments")]
struct Cli {
    /// Worker threads for parallel repetitions (0: one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repetition of one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat an experiment for several values of a controller parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `beta` or `d_h`.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `4,12,24`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute summary statistics from the trace files of a run directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf, Error> {
    cli_out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))
}

fn execute(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        // Read back by the harness when it sizes its thread pool.
        std::env::set_var(THREADS_ENV, n.to_string());
    }
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = output_dir(out, &cfg)?;
            let outcome = harness::run_experiment(&cfg, &out)?;
            print!("{}", outcome.summary.to_csv());
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let param: SweepParam = param.parse()?;
            let out = output_dir(out, &cfg)?;
            let rows = harness::sweep(&cfg, param, &values, &out)?;
            print!("{}", std::fs::read_to_string(out.join(harness::SWEEP_FILE)).unwrap_or_default());
            eprintln!("{} sweep values written to {}", rows.len(), out.display());
        }
        Command::Summarize { input } => {
            let summary = harness::summarize(&input)?;
            print!("{}", summary.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
