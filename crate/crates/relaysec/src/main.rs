//! Experiment driver: evaluates, optimizes, sweeps, and averages the
//! secrecy sum rates of the three transmission schemes, writing CSV.

use clap::{Parser, Subcommand};
use relaysec::channels::{paper_fixture, save_channels, Dims};
use relaysec::experiment::{
    run_asymptote, run_eval, run_montecarlo, run_optimize, run_sweep, write_mc, write_rows,
    write_sweep, write_trace, ExperimentConfig, ExperimentError,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relaysec", version, about = "secrecy-rate experiments for two-way relaying")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// master seed for channel sampling and optimizer restarts
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// also write per-iteration convergence traces (optimize)
    #[arg(long, global = true)]
    trace: bool,
    /// worker threads for parallel sections (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// rates of closed-form / default beamformers on the power grid
    Eval,
    /// full alternating-optimization runs per grid point
    Optimize,
    /// power sweep with per-scheme curves and asymptote columns
    Sweep,
    /// averages over freshly sampled channels per grid point
    Montecarlo,
    /// closed-form high/low power limit table
    Asymptote,
    /// dump the built-in reference channel matrices as JSON
    Fixture,
}

fn write_output(out: &Option<PathBuf>, data: &str) -> Result<(), ExperimentError> {
    match out {
        Some(path) => std::fs::write(path, data).map_err(ExperimentError::Io),
        None => {
            std::io::stdout()
                .write_all(data.as_bytes())
                .map_err(ExperimentError::Io)?;
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        ExperimentError::Config("--config is required for this subcommand".into())
    })?;
    ExperimentConfig::from_path(path)
}

fn trace_path(out: &Option<PathBuf>) -> PathBuf {
    match out {
        Some(p) => {
            let mut name = p.file_name().unwrap_or_default().to_os_string();
            name.push(".trace.csv");
            p.with_file_name(name)
        }
        None => PathBuf::from("trace.csv"),
    }
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Eval => {
            let cfg = load_config(cli)?;
            let rows = run_eval(&cfg, cli.seed)?;
            let mut buf = Vec::new();
            write_rows(&rows, &mut buf)?;
            write_output(&cli.out, &String::from_utf8(buf).expect("utf8 csv"))
        }
        Command::Optimize => {
            let cfg = load_config(cli)?;
            let (rows, traces) = run_optimize(&cfg, cli.seed)?;
            let mut buf = Vec::new();
            write_rows(&rows, &mut buf)?;
            write_output(&cli.out, &String::from_utf8(buf).expect("utf8 csv"))?;
            if cli.trace {
                let mut tbuf = Vec::new();
                write_trace(&traces, &mut tbuf)?;
                std::fs::write(trace_path(&cli.out), tbuf)?;
            }
            Ok(())
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let table = run_sweep(&cfg, cli.seed)?;
            let mut buf = Vec::new();
            write_sweep(&table, &mut buf)?;
            write_output(&cli.out, &String::from_utf8(buf).expect("utf8 csv"))
        }
        Command::Montecarlo => {
            let cfg = load_config(cli)?;
            let rows = run_montecarlo(&cfg, cli.seed)?;
            let mut buf = Vec::new();
            write_mc(&rows, &mut buf)?;
            write_output(&cli.out, &String::from_utf8(buf).expect("utf8 csv"))
        }
        Command::Asymptote => {
            let cfg = load_config(cli)?;
            let table = run_asymptote(&cfg, cli.seed)?;
            write_output(&cli.out, &table)
        }
        Command::Fixture => {
            let dims = match &cli.config {
                Some(path) => ExperimentConfig::from_path(path)?.dims,
                None => Dims::new(2, 2, 3).expect("static dims"),
            };
            let set = paper_fixture(dims)?;
            let path = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("fixture.json"));
            save_channels(&set, Path::new(&path))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
