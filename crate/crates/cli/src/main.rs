//! `bierstar` command-line entry point.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bierstar::simcore::{
    bitstring_experiment, check_conformance, dwell_experiment, reach_experiment, resilience_experiment, run,
    snapshot_rows, write_csv, CsvRow, ScenarioSpec, SimError,
};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bierstar", version, about = "LEO constellation simulator and geographic multicast experiments")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Override a scenario field, e.g. `--set seed=7` or `--set constellation.0.planes=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write satellite positions at one instant to snapshot.csv.
    Constellation {
        #[command(flatten)]
        common: Common,
        /// Seconds after epoch.
        #[arg(long, default_value_t = 0.0)]
        time_s: f64,
    },
    /// Header size per method as terminal count grows; writes bitstring.csv.
    Bitstring(Common),
    /// Reach rate per routing method; writes reach.csv.
    Reach(Common),
    /// Analytic and sampled dwelling time; writes dwell.csv.
    Dwell(Common),
    /// Link and satellite removal resilience; writes resilience.csv.
    Resilience(Common),
    /// Full epoch-by-epoch scenario; writes epochs.csv.
    Run(Common),
    /// Compare point indexing with reference vectors.
    Conformance {
        /// CSV with columns lat,lon,resolution,expected_cell_index.
        #[arg(long, value_name = "PATH")]
        fixtures: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BIERSTAR_LOG", "warn")).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Constellation { common, time_s } => {
            let (spec, path) = prepare(&common, "snapshot.csv")?;
            let snap = spec.build_constellation()?.propagate(time_s).map_err(SimError::from)?;
            emit(&path, &snapshot_rows(&snap))
        }
        Command::Bitstring(common) => {
            let (spec, path) = prepare(&common, "bitstring.csv")?;
            emit(&path, &bitstring_experiment(&spec)?)
        }
        Command::Reach(common) => {
            let (spec, path) = prepare(&common, "reach.csv")?;
            emit(&path, &reach_experiment(&spec)?.rows)
        }
        Command::Dwell(common) => {
            let (spec, path) = prepare(&common, "dwell.csv")?;
            emit(&path, &dwell_experiment(&spec)?)
        }
        Command::Resilience(common) => {
            let (spec, path) = prepare(&common, "resilience.csv")?;
            emit(&path, &resilience_experiment(&spec)?)
        }
        Command::Run(common) => {
            let (spec, path) = prepare(&common, "epochs.csv")?;
            let traces = run(&spec)?;
            let rows: Vec<_> = traces.into_iter().flat_map(|t| t.rows).collect();
            emit(&path, &rows)
        }
        Command::Conformance { fixtures } => {
            let f = File::open(&fixtures).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", fixtures.display())))?;
            let report = check_conformance(f)?;
            for m in &report.mismatches {
                println!(
                    "mismatch row {}: ({}, {}) r{} expected {} got {}",
                    m.row, m.lat, m.lon, m.resolution, m.expected, m.actual
                );
            }
            println!("{} vectors checked, {} mismatches", report.checked, report.mismatches.len());
            if report.mismatches.is_empty() {
                Ok(())
            } else {
                Err(Failure::Validation(format!("{} fixture mismatches", report.mismatches.len())))
            }
        }
    }
}

/// Loads and validates the scenario and claims the output path.
fn prepare(common: &Common, file: &str) -> Result<(ScenarioSpec, PathBuf), Failure> {
    let spec = ScenarioSpec::load(&common.scenario, &common.overrides)?;
    spec.validate()?;
    let path = common.out.join(file);
    if path.exists() && !common.force {
        return Err(Failure::Validation(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", common.out.display())))?;
    Ok((spec, path))
}

fn emit<T: CsvRow>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let f = File::create(path).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    write_csv(BufWriter::new(f), rows).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}
