//! Command-line front end for the conjsync experiments.
//!
//! Every command that writes a CSV also writes a JSON manifest next to it
//! holding the resolved configuration and seed, enough to regenerate the
//! CSV byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use conjsync::analysis::{energy_loss_db, min_peak_bound, sensitivity_sweep, OffsetGrid};
use conjsync::sim::{run_sweep_with, run_trial, trial_rng, Scheme, SimConfig, SweepResult};
use serde::Serialize;

pub mod list;

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// Anything that went wrong while running; exit status 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "conjsync", version, about = "Conjugated-pair timing synchronization lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo timing error rate versus SNR (writes sweep.csv)
    Sweep(SweepArgs),
    /// Peak correlator output versus frequency offset per root (writes sensitivity.csv)
    Sensitivity(SensitivityArgs),
    /// Correlator output versus timing offset (writes profile.csv)
    Profile(ProfileArgs),
    /// Worst-case peak bound and energy loss
    Bound(BoundArgs),
    /// Run a single trial and dump it as JSON
    Trial(TrialArgs),
}

/// Simulation flags shared by `sweep` and `trial`. Unset flags fall back to
/// the config file, then to the built-in defaults.
#[derive(Debug, Args)]
pub struct SimFlags {
    /// Flat TOML file with SimConfig keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; a random one is chosen and printed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// SNR points in dB: `a,b,c` or `start..end:step`
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Largest carrier offset in Hz (offsets drawn uniformly in ±max)
    #[arg(long)]
    pub max_cfo_hz: Option<f64>,
    /// Use this carrier offset in every trial
    #[arg(long, allow_hyphen_values = true)]
    pub cfo_hz: Option<f64>,
    /// Schemes: conjugated_pair, direct_single, diff_single, diff_averaged_pair
    #[arg(long)]
    pub scheme: Option<String>,
    /// ZC length
    #[arg(long)]
    pub n: Option<usize>,
    /// ZC root
    #[arg(long)]
    pub root: Option<usize>,
    /// Differential correlator distance
    #[arg(long)]
    pub kd: Option<usize>,
    /// Samples per synchronization period
    #[arg(long)]
    pub period: Option<usize>,
    /// Fill non-PSS samples with random unit-modulus data
    #[arg(long)]
    pub data_fill: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimFlags,
    /// Trials per (SNR, scheme) point
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Roots, comma separated
    #[arg(long, default_value = "1,2,5,33,65,130")]
    pub roots: String,
    /// Normalized offsets: `a,b,c` or `start..end:step`
    #[arg(long, default_value = "0..32:0.5", allow_hyphen_values = true)]
    pub dlam: String,
    #[arg(long, default_value_t = 131)]
    pub n: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 1)]
    pub root: usize,
    /// Normalized offsets: `a,b,c` or `start..end:step`
    #[arg(long, default_value = "0,0.5,1,5.5,32", allow_hyphen_values = true)]
    pub dlam: String,
    /// Timing offsets: `a,b,c` or inclusive `start..end`
    #[arg(long, default_value = "-40..40", allow_hyphen_values = true)]
    pub dk: String,
    #[arg(long, default_value_t = 131)]
    pub n: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 131)]
    pub n: usize,
    /// Largest normalized offset |Δf|/Δf_s
    #[arg(long, allow_hyphen_values = true)]
    pub dlam_max: f64,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[command(flatten)]
    pub sim: SimFlags,
    /// Trial index within the stream
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Sensitivity(a) => cmd_sensitivity(&a),
        Command::Profile(a) => cmd_profile(&a),
        Command::Bound(a) => cmd_bound(&a),
        Command::Trial(a) => cmd_trial(&a),
    }
}

/// Defaults, then the config file, then explicit flags.
pub fn resolve_config(flags: &SimFlags, trials: Option<u64>) -> Result<SimConfig, CliError> {
    let (mut cfg, file_has_seed) = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let bad = |e: toml::de::Error| usage(format!("bad config {}: {e}", path.display()));
            let table: toml::Table = toml::from_str(&text).map_err(bad)?;
            let has_seed = table.contains_key("seed");
            (toml::from_str::<SimConfig>(&text).map_err(bad)?, has_seed)
        }
        None => (SimConfig::default(), false),
    };
    if let Some(s) = &flags.snr {
        cfg.snr_db_list = list::parse_f64_list(s).map_err(usage)?;
    }
    if let Some(v) = flags.max_cfo_hz {
        cfg.max_cfo_hz = v;
    }
    if let Some(v) = flags.cfo_hz {
        cfg.fixed_cfo_hz = Some(v);
    }
    if let Some(s) = &flags.scheme {
        cfg.schemes = s
            .split(',')
            .map(|p| p.trim().parse::<Scheme>())
            .collect::<Result<_, _>>()
            .map_err(usage)?;
    }
    if let Some(v) = flags.n {
        cfg.n_len = v;
    }
    if let Some(v) = flags.root {
        cfg.root = v;
    }
    if let Some(v) = flags.kd {
        cfg.kd = v;
    }
    if let Some(v) = flags.period {
        cfg.period_samples = Some(v);
    }
    if flags.data_fill {
        cfg.data_fill = true;
    }
    if let Some(v) = trials {
        cfg.n_trials = v;
    }
    match (flags.seed, file_has_seed) {
        (Some(seed), _) => cfg.seed = seed,
        (None, true) => {}
        (None, false) => {
            cfg.seed = rand::random();
            eprintln!("seed: {}", cfg.seed);
        }
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg.resolved())
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub timestamp_unix: u64,
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub config: &'a T,
}

impl<'a, T: Serialize> RunManifest<'a, T> {
    fn new(command: &'static str, seed: Option<u64>, artifact: &str, config: &'a T) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            artifacts: vec![artifact.to_string()],
            config,
        }
    }
}

/// Writes through a temporary file so a failed run leaves no partial file.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| runtime(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_outputs<T: Serialize>(
    dir: &Path,
    csv_name: &str,
    csv: &str,
    manifest: &RunManifest<'_, T>,
) -> Result<(), CliError> {
    let stem = csv_name.trim_end_matches(".csv");
    let json = serde_json::to_string_pretty(manifest).map_err(runtime)?;
    let csv_path = write_atomic(dir, csv_name, csv)?;
    write_atomic(dir, &format!("{stem}.manifest.json"), &(json + "\n"))?;
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("snr_db,scheme,error_rate,errors,trials,wilson_lo,wilson_hi\n");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db, r.scheme, r.error_rate, r.errors, r.trials, r.wilson_lo, r.wilson_hi
        );
    }
    out
}

/// Sweep configuration as recorded in the manifest.
#[derive(Debug, Serialize)]
struct SweepRecord<'a> {
    sim: &'a SimConfig,
    period_s: f64,
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&a.sim, a.trials)?;
    let total = cfg.snr_db_list.len() * cfg.schemes.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let progress = |row: &conjsync::sim::SweepRow| {
        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        eprintln!(
            "[{n}/{total}] snr {} dB {}: {}/{}",
            row.snr_db, row.scheme, row.errors, row.trials
        );
    };
    let result = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build()
            .map_err(runtime)?
            .install(|| run_sweep_with(&cfg, progress)),
        None => run_sweep_with(&cfg, progress),
    }
    .map_err(runtime)?;
    let record = SweepRecord { sim: &cfg, period_s: cfg.period() as f64 / cfg.sample_rate() };
    let manifest = RunManifest::new("sweep", Some(cfg.seed), "sweep.csv", &record);
    write_outputs(&a.out, "sweep.csv", &sweep_csv(&result), &manifest)
}

#[derive(Debug, Serialize)]
struct GridRecord<'a> {
    n_len: usize,
    roots: &'a [usize],
    dlam: &'a [f64],
    dk: Option<&'a [i64]>,
}

pub fn cmd_sensitivity(a: &SensitivityArgs) -> Result<(), CliError> {
    let roots = list::parse_usize_list(&a.roots).map_err(usage)?;
    let dlam = list::parse_f64_list(&a.dlam).map_err(usage)?;
    let curves = sensitivity_sweep(&roots, &dlam, a.n).map_err(usage)?;
    let mut csv = String::from("dlam,root,z_max\n");
    for c in &curves {
        for (d, z) in c.dlam.iter().zip(&c.z_max) {
            let _ = writeln!(csv, "{d},{},{z}", c.root);
        }
    }
    let record = GridRecord { n_len: a.n, roots: &roots, dlam: &dlam, dk: None };
    let manifest = RunManifest::new("sensitivity", None, "sensitivity.csv", &record);
    write_outputs(&a.out, "sensitivity.csv", &csv, &manifest)
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<(), CliError> {
    if a.n < 2 || a.root == 0 || a.root >= a.n {
        return Err(usage(format!("root {} outside [1, {})", a.root, a.n)));
    }
    let dlam = list::parse_f64_list(&a.dlam).map_err(usage)?;
    let dk = list::parse_i64_list(&a.dk).map_err(usage)?;
    // Δλ is taken relative to a unit subcarrier spacing here.
    let grid = OffsetGrid::new(dk.clone(), dlam.clone(), 1.0).map_err(usage)?;
    let mut csv = String::from("dlam,dk,z\n");
    for (d, k, z) in grid.profile(a.root as f64 / a.n as f64, a.n) {
        let _ = writeln!(csv, "{d},{k},{z}");
    }
    let roots = [a.root];
    let record = GridRecord { n_len: a.n, roots: &roots, dlam: &dlam, dk: Some(&dk) };
    let manifest = RunManifest::new("profile", None, "profile.csv", &record);
    write_outputs(&a.out, "profile.csv", &csv, &manifest)
}

#[derive(Debug, Serialize)]
pub struct BoundReport {
    pub n_len: usize,
    pub dlam_max: f64,
    pub min_peak_bound: f64,
    pub energy_loss_db: f64,
}

pub fn bound_report(n_len: usize, dlam_max: f64) -> Result<BoundReport, CliError> {
    if n_len < 2 {
        return Err(usage(format!("sequence length {n_len} < 2")));
    }
    if (dlam_max.ceil() as usize) >= n_len {
        return Err(usage(format!("maximum offset {dlam_max} must stay below N = {n_len}")));
    }
    Ok(BoundReport {
        n_len,
        dlam_max,
        min_peak_bound: min_peak_bound(dlam_max, n_len).map_err(usage)?,
        energy_loss_db: energy_loss_db(dlam_max, n_len).map_err(usage)?,
    })
}

pub fn cmd_bound(a: &BoundArgs) -> Result<(), CliError> {
    if !(a.dlam_max.is_finite() && a.dlam_max >= 0.0) {
        return Err(usage(format!("--dlam-max {} must be >= 0", a.dlam_max)));
    }
    let r = bound_report(a.n, a.dlam_max)?;
    if a.json {
        println!("{}", serde_json::to_string(&r).map_err(runtime)?);
    } else {
        println!("n = {}, dlam_max = {}", r.n_len, r.dlam_max);
        println!("min_peak_bound = {}", r.min_peak_bound);
        println!("energy_loss_db = {}", r.energy_loss_db);
    }
    Ok(())
}

pub fn cmd_trial(a: &TrialArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&a.sim, Some(1))?;
    #[derive(Serialize)]
    struct Dump<'a> {
        scheme: Scheme,
        snr_db: f64,
        seed: u64,
        index: u64,
        trial: conjsync::sim::TrialResult,
        config: &'a SimConfig,
    }
    for (si, &snr_db) in cfg.snr_db_list.iter().enumerate() {
        for &scheme in &cfg.schemes {
            let trial = run_trial(&cfg, scheme, snr_db, &mut trial_rng(cfg.seed, si, a.index))
                .map_err(runtime)?;
            let dump = Dump { scheme, snr_db, seed: cfg.seed, index: a.index, trial, config: &cfg };
            println!("{}", serde_json::to_string(&dump).map_err(runtime)?);
        }
    }
    Ok(())
}
