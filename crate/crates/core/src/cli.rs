//! `pointcouple` command-line front end.
//!
//! Exit codes: 0 on success, 2 when an input file or flag is invalid, 1 when
//! a run fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dde::{convergence_sweep, SweepSpec};
use crate::device::{coupling_from_scattering, DeviceDescriptor};
use crate::error::{Error, Result};
use crate::feedback::{self, FeedbackConfig};
use crate::fock::{scatter_state, FockStateJson};
use crate::normal_modes::{profile_sample, NormalModeBasis};
use crate::propagation::{propagate, PropagationWindow, WavepacketJson};

#[derive(Debug, Parser)]
#[command(name = "pointcouple", version, about = "Point-coupled linear-optical devices and mirror feedback")]
pub struct Cli {
    /// Only report errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a device between scattering- and coupling-matrix form.
    Device(DeviceArgs),
    /// Propagate a wavepacket through a device.
    Propagate(PropagateArgs),
    /// Scatter a Fock state through a device.
    Scatter(ScatterArgs),
    /// Tabulate normal-mode field profiles as CSV.
    NormalModes(NormalModesArgs),
    /// Emitter in front of a mirror (time-bin MPS); writes a CSV time series.
    Feedback(FeedbackArgs),
    /// Compare MPS runs against the delay-equation reference.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("direction").required(true).args(["to_coupling", "to_scattering"]))]
pub struct DeviceArgs {
    /// Device descriptor (JSON).
    #[arg(value_name = "DEVICE", required_unless_present = "device")]
    pub path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    pub device: Option<PathBuf>,
    #[arg(long)]
    pub to_coupling: bool,
    #[arg(long)]
    pub to_scattering: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(long)]
    pub device: PathBuf,
    /// Wavepacket (JSON).
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub device: PathBuf,
    /// Fock state (JSON).
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalModesArgs {
    #[arg(long)]
    pub device: PathBuf,
    /// Comma-separated frequencies.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    /// Comma-separated positions.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub positions: Vec<f64>,
    /// Comma-separated coupling points, one per optical mode (default: all at 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub offsets: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeedbackArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `{"dts": [...], "tols": [...]}`
    #[arg(long)]
    pub sweep: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_paths: Vec<PathBuf>,
    pub output_paths: Vec<PathBuf>,
    pub version: String,
    /// SHA-256 over the input files, in order.
    pub config_hash: String,
    pub duration_seconds: f64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Hex SHA-256 of the concatenated input files.
pub fn config_hash(paths: &[&Path]) -> Result<String> {
    let mut hasher = Sha256::new();
    for p in paths {
        let bytes = read_bytes(p)?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

struct Output {
    bytes: Vec<u8>,
    details: serde_json::Value,
}

impl Output {
    fn json(value: &impl Serialize) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        bytes.push(b'\n');
        Ok(Output {
            bytes,
            details: serde_json::Value::Null,
        })
    }
}

fn emit(subcommand: &str, inputs: &[&Path], out: Option<&Path>, output: Output, started: Instant) -> Result<()> {
    let Some(out) = out else {
        std::io::stdout()
            .write_all(&output.bytes)
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
        return Ok(());
    };
    write_atomic(out, &output.bytes)?;
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        config_paths: inputs.iter().map(|p| p.to_path_buf()).collect(),
        output_paths: vec![out.to_path_buf()],
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(inputs)?,
        duration_seconds: started.elapsed().as_secs_f64(),
        details: output.details,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&manifest_path(out), &bytes)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

fn load_device(path: &Path) -> Result<crate::device::Device> {
    read_json::<DeviceDescriptor>(path)?.parse()
}

fn run_device(args: &DeviceArgs) -> Result<Output> {
    let path = args.device.as_ref().or(args.path.as_ref()).expect("clap enforces a device path");
    let device = load_device(path)?;
    let descriptor = if args.to_coupling {
        DeviceDescriptor::from_coupling(&coupling_from_scattering(&device.scattering()?)?)
    } else {
        DeviceDescriptor::from_scattering(&device.scattering()?)
    };
    Output::json(&descriptor)
}

fn run_propagate(args: &PropagateArgs) -> Result<Output> {
    let s = load_device(&args.device)?.scattering()?;
    let w = read_json::<WavepacketJson>(&args.state)?.parse()?;
    let out = propagate(&w, &s, PropagationWindow::new(args.t0, args.tau)?)?;
    Output::json(&WavepacketJson::from(&out))
}

fn run_scatter(args: &ScatterArgs) -> Result<Output> {
    let s = load_device(&args.device)?.scattering()?;
    let state = read_json::<FockStateJson>(&args.state)?.parse(Some(s.n_modes()))?;
    let out = scatter_state(&state, &s)?;
    Output::json(&FockStateJson::from(&out))
}

fn run_normal_modes(args: &NormalModesArgs) -> Result<Output> {
    let s = load_device(&args.device)?.scattering()?;
    let n = s.n_modes();
    let basis = match &args.offsets {
        Some(offsets) => NormalModeBasis::new(s, offsets.clone())?,
        None => NormalModeBasis::centered(s),
    };
    let mut csv = String::from("normal_index,mode,x,omega,re,im\n");
    for normal in 0..n {
        for mode in 0..n {
            for &omega in &args.omega {
                for &x in &args.positions {
                    let p = profile_sample(&basis, normal, mode, x, omega)?;
                    csv.push_str(&format!(
                        "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        p.normal_index, p.mode, p.x, p.omega, p.amplitude.re, p.amplitude.im
                    ));
                }
            }
        }
    }
    Ok(Output {
        bytes: csv.into_bytes(),
        details: serde_json::Value::Null,
    })
}

fn load_feedback_config(path: &Path) -> Result<FeedbackConfig> {
    let config = read_json::<FeedbackConfig>(path)?.with_env_overrides()?;
    config.validate()?;
    Ok(config)
}

fn run_feedback(args: &FeedbackArgs) -> Result<Output> {
    let config = load_feedback_config(&args.config)?;
    log::info!(
        "feedback: {} steps, n_d = {}, delay residual {:.3e}",
        config.n_steps(),
        config.delay_bins(),
        config.delay_residual()
    );
    let run = feedback::run(&config)?;
    let mut bytes = Vec::new();
    run.write_csv(&mut bytes).map_err(|source| Error::Io {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    Ok(Output {
        bytes,
        details: serde_json::json!({
            "delay_bins": run.delay_bins,
            "delay_residual": run.delay_residual,
            "bond_cap": config.bond_cap,
            "max_norm_deficit": run.max_norm_deficit,
        }),
    })
}

fn run_benchmark(args: &BenchmarkArgs) -> Result<Output> {
    let config = load_feedback_config(&args.config)?;
    let sweep: SweepSpec = read_json(&args.sweep)?;
    let table = convergence_sweep(&config, &sweep.dts, &sweep.tols)?;
    for row in &table.rows {
        log::info!(
            "dt = {:.3}, tol = {:.3e}: max deviation {:.4e}",
            row.dt,
            row.schmidt_tol,
            row.max_deviation
        );
    }
    let mut bytes = Vec::new();
    table.write_csv(&mut bytes).map_err(|source| Error::Io {
        path: PathBuf::from("<buffer>"),
        source,
    })?;
    Ok(Output {
        bytes,
        details: serde_json::json!({
            "monotone_in_dt": table.monotone_in_dt,
            "monotone_in_tol": table.monotone_in_tol,
        }),
    })
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    match &cli.command {
        Command::Device(a) => {
            let path = a.device.as_deref().or(a.path.as_deref()).expect("clap enforces a device path");
            emit("device", &[path], a.out.as_deref(), run_device(a)?, started)
        }
        Command::Propagate(a) => emit(
            "propagate",
            &[&a.device, &a.state],
            a.out.as_deref(),
            run_propagate(a)?,
            started,
        ),
        Command::Scatter(a) => emit(
            "scatter",
            &[&a.device, &a.state],
            a.out.as_deref(),
            run_scatter(a)?,
            started,
        ),
        Command::NormalModes(a) => emit("normal-modes", &[&a.device], a.out.as_deref(), run_normal_modes(a)?, started),
        Command::Feedback(a) => emit("feedback", &[&a.config], a.out.as_deref(), run_feedback(a)?, started),
        Command::Benchmark(a) => emit(
            "benchmark",
            &[&a.config, &a.sweep],
            a.out.as_deref(),
            run_benchmark(a)?,
            started,
        ),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("out/run.csv")), PathBuf::from("out/run.csv.manifest.json"));
    }

    #[test]
    fn hash_depends_on_content_only() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        fs::write(&a, "{\"x\": 1}").unwrap();
        fs::write(&b, "{\"x\": 1}").unwrap();
        assert_eq!(config_hash(&[&a]).unwrap(), config_hash(&[&b]).unwrap());
        fs::write(&b, "{\"x\": 2}").unwrap();
        assert_ne!(config_hash(&[&a]).unwrap(), config_hash(&[&b]).unwrap());
        assert_eq!(config_hash(&[&a]).unwrap().len(), 64);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(dispatch(["pointcouple", "device", "--quiet", "x.json"]), 2);
        assert_eq!(dispatch(["pointcouple", "frobnicate"]), 2);
    }
}
