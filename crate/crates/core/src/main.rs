use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geokin::scenario::{self, identity_suite, ScenarioConfig, Task};
use geokin::{Chart, ChartKind, GeoError};

#[derive(Parser)]
#[command(name = "geokin", version, about = "Geometric brackets, flows and kinetic solvers")]
struct Cli {
    /// Print artifact paths and summaries.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Replace the task named in the file.
        #[arg(long, value_parser = parse_task)]
        task: Option<Task>,
    },
    /// Parse and shape-check a scenario file without running it.
    Validate { config: PathBuf },
    /// Run the exact identity suite of a chart and print the JSON report.
    Identity {
        #[arg(long)]
        chart: ChartKind,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random inputs per law.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn base_dir(config: &Path) -> PathBuf {
    config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn execute(cli: Cli) -> Result<bool, GeoError> {
    match cli.command {
        Command::Run { config, task } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(t) = task {
                cfg.task = t;
            }
            let outcome = scenario::run(&cfg, &base_dir(&config))?;
            if cli.verbose {
                for f in &outcome.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            println!("{}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.summary);
            Ok(outcome.passed)
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            print!("{}", scenario::validate(&cfg)?);
            Ok(true)
        }
        Command::Identity {
            chart,
            n,
            seed,
            samples,
            out,
        } => {
            let report = identity_suite(Chart::new(chart, n)?, seed, samples)?;
            let mut text = serde_json::to_string_pretty(&report).map_err(|e| GeoError::Io(e.to_string()))?;
            text.push('\n');
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
                    let failed = report.laws.iter().filter(|l| l.status == scenario::Status::Fail).count();
                    println!("{}: {} laws, {failed} failed", if report.passed { "PASS" } else { "FAIL" }, report.laws.len());
                }
                None => print!("{text}"),
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
