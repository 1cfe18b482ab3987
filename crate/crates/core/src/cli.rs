//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on configuration
//! errors. Every error is printed to stderr as one line of JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::config::{apply_overrides, config_from_value, ConfigError, Scenario, SimConfig};
use crate::diagnostics::{observables, CSV_HEADER};
use crate::dynamics::{integrate_with, step_count, DynamicsError, SprayState};
use crate::experiments::{self, presets::Setup, ExperimentError};
use crate::measures::snapshot::{read_snapshot, write_snapshot, SnapshotError};
use crate::transport::{w1_pair, w1_signed, w2_signed, TransportError};

#[derive(Parser, Debug)]
#[command(
    name = "gyrospray",
    version,
    about = "Point vortices coupled to a gyroscopic spray"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Field override `key=value`; the value is parsed as JSON when it can be.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one run, writing snapshots and a diagnostics table.
    Simulate,
    Meanfield,
    Stability,
    Hydro,
    Conservation,
    Massless,
    /// Distances between two snapshot files.
    Distance {
        a: PathBuf,
        b: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 1,
        }
    }

    fn to_json(&self) -> String {
        let (kind, msg) = match self {
            Failure::Config(m) => ("config", m),
            Failure::Numerical(m) => ("numerical", m),
        };
        json!({"error": kind, "message": msg}).to_string()
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidParameter(m) => Failure::Config(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<TransportError> for Failure {
    fn from(e: TransportError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Degenerate(_) => {
                Failure::Config(e.to_string())
            }
            ExperimentError::Dynamics(d) => d.into(),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!(
                "{}",
                Failure::Config(first.trim_start_matches("error: ").to_string()).to_json()
            );
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.code()
        }
    }
}

fn load_config(cli: &Cli, scenario: Scenario) -> Result<SimConfig, Failure> {
    let mut obj = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => {
                    return Err(Failure::Config(
                        "configuration must be a JSON object".into(),
                    ))
                }
                Err(e) => return Err(Failure::Config(format!("invalid JSON: {e}"))),
            }
        }
        None => Map::new(),
    };
    apply_overrides(&mut obj, &cli.set)?;
    if let Some(seed) = cli.seed {
        obj.insert("seed".into(), json!(seed));
    }
    if let Some(out) = &cli.out {
        obj.insert("out".into(), json!(out.display().to_string()));
    }
    obj.insert("scenario".into(), json!(scenario.name()));
    Ok(config_from_value(Value::Object(obj))?)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let scenario = match &cli.command {
        Command::Simulate => Scenario::Simulate,
        Command::Meanfield => Scenario::Meanfield,
        Command::Stability => Scenario::Stability,
        Command::Hydro => Scenario::Hydro,
        Command::Conservation => Scenario::Conservation,
        Command::Massless => Scenario::Massless,
        Command::Distance { a, b } => return distance(a, b),
    };
    let cfg = load_config(&cli, scenario)?;
    let out = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
    if scenario == Scenario::Simulate {
        return simulate(&cfg, &out);
    }
    let report = experiments::run(&cfg)?;
    let paths = report.write(&out).map_err(|e| io_failure(&out, e))?;
    let summary = json!({
        "scenario": report.scenario,
        "config_hash": report.config_hash,
        "passed": report.passed(),
        "verdicts": report.verdicts,
        "files": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    println!("{summary}");
    Ok(())
}

fn read_snapshot_file(path: &Path) -> Result<SprayState, Failure> {
    let f = File::open(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let (v, s) = read_snapshot(BufReader::new(f))
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(SprayState::new(v, s))
}

fn distance(a: &Path, b: &Path) -> Result<(), Failure> {
    let x = read_snapshot_file(a)?;
    let y = read_snapshot_file(b)?;
    let w1 = w1_signed(&x.vortices, &y.vortices)?;
    let w2 = w2_signed(&x.vortices, &y.vortices)?;
    let pair = w1_pair((&x.vortices, &x.spray), (&y.vortices, &y.spray))?;
    println!(
        "{}",
        json!({"w1_signed": w1, "w2_signed": w2, "w1_pair": pair})
    );
    Ok(())
}

fn simulate(cfg: &SimConfig, out: &Path) -> Result<(), Failure> {
    let k = cfg.params();
    let s0 = match &cfg.initial {
        Some(p) => read_snapshot_file(Path::new(p))?,
        None => Setup::from_config(cfg)
            .build(&k, cfg.seed, 0)
            .map_err(|e| Failure::Config(e.to_string()))?,
    };
    let dir = out.join("snapshots");
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let csv_path = out.join("diagnostics.csv");
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(|e| io_failure(&csv_path, e))?);
    writeln!(csv, "{CSV_HEADER}").map_err(|e| io_failure(&csv_path, e))?;

    let steps = step_count(cfg.t_final, cfg.dt);
    let h = if steps == 0 {
        0.0
    } else {
        cfg.t_final / steps as f64
    };
    let cadence = cfg.cadence_for(steps);
    let mut io_error: Option<Failure> = None;
    let mut observe = |s: &SprayState| {
        if io_error.is_some() {
            return;
        }
        let step = if h == 0.0 {
            0
        } else {
            (s.time / h).round() as usize
        };
        let path = dir.join(format!("step_{step:06}.jsonl"));
        let res = File::create(&path)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                write_snapshot(&mut w, &s.vortices, &s.spray)?;
                w.flush()
            })
            .and_then(|_| writeln!(csv, "{}", observables(s, &k, None).to_csv()));
        if let Err(e) = res {
            io_error = Some(io_failure(&path, e));
        }
    };
    let result = integrate_with(
        &s0,
        &k,
        cfg.t_final,
        cfg.dt,
        cfg.scheme,
        cadence,
        &mut observe,
    );
    if let Some(f) = io_error {
        return Err(f);
    }
    csv.flush().map_err(|e| io_failure(&csv_path, e))?;
    let last = result?;
    println!(
        "{}",
        json!({
            "scenario": "simulate",
            "config_hash": cfg.hash(),
            "steps": steps,
            "final_time": last.time,
            "out": out.display().to_string(),
        })
    );
    Ok(())
}
