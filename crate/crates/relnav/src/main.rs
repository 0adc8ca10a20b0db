//! Command-line front end: seeded runs, Monte Carlo batches, and the
//! observability audits, all backed by the library crate.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use relnav::harness::{
    gramian_from_trajectory, pe_from_trajectory, run_montecarlo, run_single, self_test,
    write_run_outputs, GramianPair, PeSignal, RunConfig, TrajectoryTrace,
};

#[derive(Parser)]
#[command(name = "relnav", version, about = "Relative-navigation observer benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded simulation and write its error trace.
    Simulate {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Seed override; defaults to the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; `.csv` writes the trace, `.json` the trace plus metadata.
        #[arg(long)]
        out: PathBuf,
        /// Also write the full-rate truth trajectory (CSV) for the audits.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run a Monte Carlo batch and write percentile bands and terminals.
    Montecarlo {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Number of runs; seeds are seed, seed+1, ...
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// Output directory for bands.csv, runs.csv, and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Base-seed override; defaults to the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate an observability Gramian over one window of a trajectory trace.
    Gramian {
        /// Trajectory trace CSV (written by `simulate --trajectory`).
        #[arg(long)]
        trace: PathBuf,
        /// State pair: the 6-state cascade or the 7-state coupled observer.
        #[arg(long, value_enum)]
        pair: PairArg,
        /// Window length in seconds.
        #[arg(long)]
        delta: f64,
        /// Window start; defaults to the start of the trace.
        #[arg(long)]
        t0: Option<f64>,
        /// Uniform-observability threshold on mu.
        #[arg(long, default_value_t = relnav::observability::DEFAULT_MU_THRESHOLD)]
        threshold: f64,
        /// Optional JSON report path (the report always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan persistence of excitation of a direction signal along a trajectory.
    CheckPe {
        /// Trajectory trace CSV (written by `simulate --trajectory`).
        #[arg(long)]
        trace: PathBuf,
        /// Direction signal: the platform normal or the bearing.
        #[arg(long, value_enum)]
        signal: SignalArg,
        /// Window length in seconds.
        #[arg(long)]
        delta: f64,
        /// PE level the worst window must reach.
        #[arg(long, default_value_t = relnav::observability::DEFAULT_MU_THRESHOLD)]
        threshold: f64,
        /// Optional JSON report path (the report always prints to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in consistency checks.
    SelfTest,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    #[value(name = "6state")]
    SixState,
    #[value(name = "7state")]
    SevenState,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalArg {
    Normal,
    Bearing,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> relnav::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, out, trajectory } => {
            let cfg = RunConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let result = run_single(&cfg, seed, trajectory.is_some())?;
            write_run_outputs(&cfg, &result, &out, trajectory.as_deref())?;
            println!(
                "simulate: scenario={} seed={} status={} samples={} -> {}",
                cfg.scenario,
                seed,
                result.status.label(),
                result.trace.samples.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Montecarlo { config, runs, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let summary = run_montecarlo(&cfg, runs)?;
            std::fs::create_dir_all(&out).map_err(|e| relnav::Error::io(&out, e))?;
            summary.write_bands_csv(&out.join("bands.csv"))?;
            summary.write_runs_csv(&out.join("runs.csv"))?;
            summary.write_json(&out.join("summary.json"))?;
            println!(
                "montecarlo: scenario={} runs={} excluded={} -> {}",
                cfg.scenario,
                runs,
                summary.n_excluded,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gramian { trace, pair, delta, t0, threshold, out } => {
            let trajectory = TrajectoryTrace::read_csv(&trace)?;
            let pair = match pair {
                PairArg::SixState => GramianPair::SixState,
                PairArg::SevenState => GramianPair::SevenState,
            };
            let report = gramian_from_trajectory(&trajectory, pair, t0, delta, threshold)?;
            emit_json(&report, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckPe { trace, signal, delta, threshold, out } => {
            let trajectory = TrajectoryTrace::read_csv(&trace)?;
            let signal = match signal {
                SignalArg::Normal => PeSignal::Normal,
                SignalArg::Bearing => PeSignal::Bearing,
            };
            let report = pe_from_trajectory(&trajectory, signal, delta, threshold)?;
            emit_json(&report, out.as_deref())?;
            // A failed PE scan is a reported fact, not a process failure.
            Ok(ExitCode::SUCCESS)
        }
        Command::SelfTest => {
            let report = self_test();
            for check in &report.checks {
                let tag = if check.passed { "pass" } else { "FAIL" };
                println!("{tag}  {:<28} {}", check.name, check.detail);
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn emit_json<T: serde::Serialize>(report: &T, out: Option<&std::path::Path>) -> relnav::Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| relnav::Error::Trace(format!("report serialization failed: {e}")))?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n")).map_err(|e| relnav::Error::io(path, e))?;
    }
    Ok(())
}
