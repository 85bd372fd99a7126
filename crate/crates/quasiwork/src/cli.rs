//! Command-line front end: a key=value configuration document with
//! defaults, one subcommand per experiment, CSV emission with a fixed
//! float format, and a manifest describing every run.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 violation of a
//! numerical invariant (those are hard failures, never warnings).
//!
//! CSV conventions: all floats are written with `{:.17e}`; the `t` column
//! always carries the scaled time (drive amplitude times physical time),
//! so files are comparable across presets.

use crate::interferometer::CircuitVariant;
use crate::kdq::{
    char_function, correlation_report, kdq_table, tpm_table, work_distribution, work_moments,
    KdqError, QuasiprobTable,
};
use crate::nvmodel::{
    compile_sequence, duration_rule, export_pulses, run_pulse_readout, verify_decompositions,
    NvError, NvParams, Quadrature,
};
use crate::protocol::{
    make_initial_state, DriveParams, ProtocolError, StateLabel, WorkProtocol,
};
use crate::qmath::{Mat2, QmathError};
use crate::recon::{
    integrate_peaks, noise_study, sample_trace, transform_to_work, NoiseModel, ReconError,
    TraceSource, UGrid,
};
use clap::{Parser, Subcommand};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum ConfigError {
    /// Structural problem in the document itself.
    Parse { line: usize, message: String },
    /// A known structure with an unknown key or an out-of-range value.
    Validation { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => {
                write!(f, "config parse error on line {line}: {message}")
            }
            ConfigError::Validation { field, message } => {
                write!(f, "config validation error for {field}: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, message: String },
    /// A numerical invariant failed at run time; exit code 3.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Numerical(m) => write!(f, "numerical invariant violated: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<KdqError> for CliError {
    fn from(e: KdqError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<QmathError> for CliError {
    fn from(e: QmathError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<NvError> for CliError {
    fn from(e: NvError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ReconError> for CliError {
    fn from(e: ReconError) -> Self {
        match e {
            ReconError::Kdq(inner) => CliError::Numerical(inner.to_string()),
            ReconError::Nv(inner) => CliError::Numerical(inner.to_string()),
            other => CliError::Config(ConfigError::Validation {
                field: "u_grid".into(),
                message: other.to_string(),
            }),
        }
    }
}

/// Every key the configuration document accepts.
const KNOWN_KEYS: &[&str] = &[
    "preset",
    "omega_rabi",
    "delta",
    "state",
    "mixture_p",
    "t_list",
    "n_points",
    "u_max_scaled",
    "window",
    "seed",
    "trials",
    "amplitude_spread",
    "offset_spread",
    "shot_sigma",
    "source",
    "a_hyperfine",
    "rabi_n",
    "rabi_e",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Dimensionless,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Analytic,
    Circuit,
    CircuitSimplified,
    Pulse,
}

/// Fully resolved run configuration: defaults filled, everything validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: Preset,
    pub omega_rabi: f64,
    pub delta: f64,
    pub state: String,
    pub mixture_p: f64,
    /// Scaled times: drive amplitude times physical time.
    pub t_list: Vec<f64>,
    pub n_points: usize,
    /// Grid extent times the spectral gap omega.
    pub u_max_scaled: f64,
    pub window: usize,
    pub seed: u64,
    pub trials: usize,
    pub amplitude_spread: f64,
    pub offset_spread: f64,
    pub shot_sigma: f64,
    pub source: SourceKind,
    pub a_hyperfine: f64,
    pub rabi_n: f64,
    pub rabi_e: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn drive(&self) -> DriveParams {
        DriveParams::new(self.omega_rabi, self.delta)
    }

    pub fn state_label(&self) -> StateLabel {
        match self.state.as_str() {
            "plus" => StateLabel::Plus,
            "minus" => StateLabel::Minus,
            _ => StateLabel::Mixture(self.mixture_p),
        }
    }

    pub fn initial_rho(&self) -> Result<Mat2, CliError> {
        Ok(make_initial_state(&self.drive(), self.state_label())?.rho)
    }

    /// (scaled time, physical time) pairs.
    pub fn times(&self) -> Vec<(f64, f64)> {
        self.t_list
            .iter()
            .map(|s| (*s, s / self.omega_rabi))
            .collect()
    }

    pub fn grid(&self) -> Result<UGrid, CliError> {
        Ok(UGrid::new(
            self.n_points,
            self.u_max_scaled / self.drive().omega(),
        )?)
    }

    pub fn nv_params(&self) -> Result<NvParams, CliError> {
        NvParams::new(self.drive(), self.a_hyperfine, self.rabi_n, self.rabi_e)
            .map_err(CliError::from)
    }

    pub fn trace_source(&self) -> Result<TraceSource, CliError> {
        Ok(match self.source {
            SourceKind::Analytic => TraceSource::Analytic,
            SourceKind::Circuit => TraceSource::Circuit(CircuitVariant::G2Full),
            SourceKind::CircuitSimplified => {
                TraceSource::Circuit(CircuitVariant::GBSimplified)
            }
            SourceKind::Pulse => TraceSource::Pulse(self.nv_params()?),
        })
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            amplitude_spread: self.amplitude_spread,
            offset_spread: self.offset_spread,
            shot_sigma: self.shot_sigma,
            seed: self.seed,
        }
    }

    /// Sorted key=value dump; feeding these lines back as a config document
    /// reproduces the run exactly.
    pub fn dump(&self) -> String {
        let preset = match self.preset {
            Preset::Dimensionless => "dimensionless",
            Preset::Paper => "paper",
        };
        let source = match self.source {
            SourceKind::Analytic => "analytic",
            SourceKind::Circuit => "circuit",
            SourceKind::CircuitSimplified => "circuit-simplified",
            SourceKind::Pulse => "pulse",
        };
        let t_list = self
            .t_list
            .iter()
            .map(|t| ff(*t))
            .collect::<Vec<_>>()
            .join(",");
        let mut pairs: Vec<(&str, String)> = vec![
            ("a_hyperfine", ff(self.a_hyperfine)),
            ("amplitude_spread", ff(self.amplitude_spread)),
            ("delta", ff(self.delta)),
            ("mixture_p", ff(self.mixture_p)),
            ("n_points", self.n_points.to_string()),
            ("offset_spread", ff(self.offset_spread)),
            ("omega_rabi", ff(self.omega_rabi)),
            ("preset", preset.to_string()),
            ("rabi_e", ff(self.rabi_e)),
            ("rabi_n", ff(self.rabi_n)),
            ("seed", self.seed.to_string()),
            ("shot_sigma", ff(self.shot_sigma)),
            ("source", source.to_string()),
            ("state", self.state.clone()),
            ("t_list", t_list),
            ("trials", self.trials.to_string()),
            ("u_max_scaled", ff(self.u_max_scaled)),
            ("window", self.window.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Splits a document into (key, value, line) entries. Blank lines and
/// lines starting with `#` are skipped; keys may appear once.
pub fn parse_config_document(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            });
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "empty key".into(),
            });
        }
        if let Some(first) = seen.insert(key.clone(), line_no) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key {key:?} (first set on line {first})"),
            });
        }
        entries.push((key, value, line_no));
    }
    Ok(entries)
}

fn unknown_key(field: &str) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: "unknown configuration key".into(),
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(key, format!("expected a finite number, got {v:?}"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| invalid(key, format!("expected a non-negative integer, got {v:?}"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| invalid(key, format!("expected a non-negative integer, got {v:?}"))),
        }
    }

    fn choice(&self, key: &str, default: &str, allowed: &[&str]) -> Result<String, ConfigError> {
        let v = self.0.get(key).map(String::as_str).unwrap_or(default);
        if allowed.contains(&v) {
            Ok(v.to_string())
        } else {
            Err(invalid(
                key,
                format!("expected one of {allowed:?}, got {v:?}"),
            ))
        }
    }

    fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let trimmed = part.trim();
                    let x = trimmed.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(
                        || invalid(key, format!("expected a comma-separated list of finite numbers, bad entry {trimmed:?}")),
                    )?;
                    out.push(x);
                }
                Ok(out)
            }
        }
    }
}

/// Merges a parsed document with override pairs (later wins), fills
/// defaults, and validates every field.
pub fn resolve_config(
    file_entries: &[(String, String, usize)],
    overrides: &[(String, String)],
    out_dir: PathBuf,
) -> Result<RunConfig, ConfigError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (key, value, _line) in file_entries {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(unknown_key(key));
        }
        map.insert(key.clone(), value.clone());
    }
    for (key, value) in overrides {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(unknown_key(key));
        }
        map.insert(key.clone(), value.clone());
    }
    let raw = RawConfig(map);

    let preset = match raw.choice("preset", "dimensionless", &["dimensionless", "paper"])? {
        s if s == "paper" => Preset::Paper,
        _ => Preset::Dimensionless,
    };
    let base_drive = match preset {
        Preset::Dimensionless => DriveParams::dimensionless(),
        Preset::Paper => DriveParams::hardware(),
    };
    let omega_rabi = raw.f64("omega_rabi", base_drive.omega_rabi)?;
    let delta = raw.f64("delta", base_drive.delta)?;
    if omega_rabi <= 0.0 {
        return Err(invalid("omega_rabi", "must be positive"));
    }
    let drive = DriveParams::new(omega_rabi, delta);

    let state = raw.choice("state", "plus", &["plus", "minus", "mixture"])?;
    let mixture_p = raw.f64("mixture_p", 0.5)?;
    if !(0.0..=1.0).contains(&mixture_p) {
        return Err(invalid("mixture_p", "must lie in [0, 1]"));
    }

    let default_t: Vec<f64> = (0..=12).map(|k| k as f64 * PI / 6.0).collect();
    let t_list = raw.f64_list("t_list", &default_t)?;
    if t_list.is_empty() {
        return Err(invalid("t_list", "must be nonempty"));
    }

    let n_points = raw.usize("n_points", 128)?;
    if n_points < 2 || !n_points.is_power_of_two() {
        return Err(invalid("n_points", "must be a power of two of at least 2"));
    }
    let u_max_scaled = raw.f64("u_max_scaled", 16.0 * PI)?;
    if u_max_scaled <= 0.0 {
        return Err(invalid("u_max_scaled", "must be positive"));
    }
    let window = raw.usize("window", 7)?;
    if window == 0 || window % 2 == 0 {
        return Err(invalid("window", "must be odd and at least 1"));
    }
    if window > n_points {
        return Err(invalid("window", "must not exceed n_points"));
    }

    let seed = raw.u64("seed", 0)?;
    let trials = raw.usize("trials", 200)?;
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let amplitude_spread = raw.f64("amplitude_spread", 0.05)?;
    let offset_spread = raw.f64("offset_spread", 0.05)?;
    let shot_sigma = raw.f64("shot_sigma", 0.02)?;
    for (k, v) in [
        ("amplitude_spread", amplitude_spread),
        ("offset_spread", offset_spread),
        ("shot_sigma", shot_sigma),
    ] {
        if v < 0.0 {
            return Err(invalid(k, "must be non-negative"));
        }
    }

    let source = match raw
        .choice(
            "source",
            "analytic",
            &["analytic", "circuit", "circuit-simplified", "pulse"],
        )?
        .as_str()
    {
        "circuit" => SourceKind::Circuit,
        "circuit-simplified" => SourceKind::CircuitSimplified,
        "pulse" => SourceKind::Pulse,
        _ => SourceKind::Analytic,
    };

    let nv_default = NvParams::from_drive(drive);
    let a_hyperfine = raw.f64("a_hyperfine", nv_default.a_hyperfine)?;
    if a_hyperfine == 0.0 {
        return Err(invalid("a_hyperfine", "must be nonzero"));
    }
    let rabi_n = raw.f64("rabi_n", a_hyperfine.abs() / 24.0)?;
    if rabi_n == 0.0 {
        return Err(invalid("rabi_n", "must be nonzero"));
    }
    let rabi_e = raw.f64("rabi_e", drive.omega_rabi)?;
    if rabi_e == 0.0 {
        return Err(invalid("rabi_e", "must be nonzero"));
    }

    Ok(RunConfig {
        preset,
        omega_rabi,
        delta,
        state,
        mixture_p,
        t_list,
        n_points,
        u_max_scaled,
        window,
        seed,
        trials,
        amplitude_spread,
        offset_spread,
        shot_sigma,
        source,
        a_hyperfine,
        rabi_n,
        rabi_e,
        out_dir,
    })
}

/// Convenience wrapper used by tests: parse a whole document and resolve it
/// with no overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let entries = parse_config_document(text)?;
    resolve_config(&entries, &[], PathBuf::from("."))
}

fn ff(x: f64) -> String {
    format!("{x:.17e}")
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::Io {
        path,
        message: e.to_string(),
    })?;
    Ok(name.to_string())
}

#[derive(Parser)]
#[command(
    name = "quasiwork",
    version,
    about = "Quasiprobability work statistics of a driven qubit: tables, traces, spectra, and pulse-level verification"
)]
struct Cli {
    /// Path to a key=value configuration document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed override for noise studies.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parameter preset: dimensionless or paper.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Repeatable key=value override; keys mirror the config document.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample the characteristic function on the u-grid for each time.
    Charfn,
    /// Transform sampled traces into binned work spectra and recovered weights.
    Spectrum,
    /// Emit the closed-form quasiprobability table for each time.
    Kdq,
    /// First and second work moments for the coherent and dephased routes.
    Moments,
    /// Two-time energy correlation function against time.
    Correlation,
    /// Uncertainty-relation sweep over the mixture parameter.
    Rsur,
    /// Check the dephased-state table against direct two-measurement statistics.
    TpmCompare,
    /// Verify pulse-level gate decompositions and compiled sequences.
    NvVerify,
    /// Spread of recovered weights under the readout noise model.
    NoiseStudy,
    /// Emit the figure-reproduction data files.
    Figures,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Charfn => "charfn",
            Command::Spectrum => "spectrum",
            Command::Kdq => "kdq",
            Command::Moments => "moments",
            Command::Correlation => "correlation",
            Command::Rsur => "rsur",
            Command::TpmCompare => "tpm-compare",
            Command::NvVerify => "nv-verify",
            Command::NoiseStudy => "noise-study",
            Command::Figures => "figures",
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let file_entries = match &cli.config {
        Some(path) => parse_config_document(&read_file(path)?)?,
        None => Vec::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(preset) = &cli.preset {
        overrides.push(("preset".into(), preset.clone()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    for pair in &cli.set {
        let Some((k, v)) = pair.split_once('=') else {
            return Err(ConfigError::Validation {
                field: pair.clone(),
                message: "override must have the form key=value".into(),
            }
            .into());
        };
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let cfg = resolve_config(&file_entries, &overrides, cli.out.clone())?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io {
        path: cfg.out_dir.clone(),
        message: e.to_string(),
    })?;

    let files = match cli.command {
        Command::Charfn => cmd_charfn(&cfg)?,
        Command::Spectrum => cmd_spectrum(&cfg)?,
        Command::Kdq => cmd_kdq(&cfg)?,
        Command::Moments => cmd_moments(&cfg)?,
        Command::Correlation => cmd_correlation(&cfg)?,
        Command::Rsur => cmd_rsur(&cfg)?,
        Command::TpmCompare => cmd_tpm_compare(&cfg)?,
        Command::NvVerify => cmd_nv_verify(&cfg)?,
        Command::NoiseStudy => cmd_noise_study(&cfg)?,
        Command::Figures => cmd_figures(&cfg)?,
    };

    let manifest = format!
        (
        "tool quasiwork {}\nsubcommand {}\nseed {}\nwall_time_ms {}\nfiles {}\nconfig\n{}",
        env!("CARGO_PKG_VERSION"),
        cli.command.name(),
        cfg.seed,
        started.elapsed().as_millis(),
        files.join(" "),
        cfg.dump()
    );
    write_file(&cfg.out_dir, "manifest.txt", &manifest)?;
    println!(
        "{}: wrote {} file(s) to {}",
        cli.command.name(),
        files.len() + 1,
        cfg.out_dir.display()
    );
    Ok(())
}

fn protocols(cfg: &RunConfig) -> Result<Vec<(f64, WorkProtocol)>, CliError> {
    let drive = cfg.drive();
    cfg.times()
        .into_iter()
        .map(|(scaled, t)| Ok((scaled, WorkProtocol::new(drive, t)?)))
        .collect()
}

fn cmd_charfn(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let grid = cfg.grid()?;
    let source = cfg.trace_source()?;
    let mut files = Vec::new();
    for (idx, (_scaled, proto)) in protocols(cfg)?.iter().enumerate() {
        let trace = sample_trace(proto, &rho, &source, &grid)?;
        let mut out = String::from("u,re_g,im_g\n");
        for (u, g) in grid.points().zip(&trace.values) {
            out.push_str(&format!("{},{},{}\n", ff(u), ff(g.re), ff(g.im)));
        }
        files.push(write_file(&cfg.out_dir, &format!("trace_{idx:02}.csv"), &out)?);
    }
    Ok(files)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let grid = cfg.grid()?;
    let source = cfg.trace_source()?;
    let mut files = Vec::new();
    for (idx, (_scaled, proto)) in protocols(cfg)?.iter().enumerate() {
        let trace = sample_trace(proto, &rho, &source, &grid)?;
        let spectrum = transform_to_work(&trace);
        let mut out = String::from("w,re_p,im_p\n");
        for (w, p) in spectrum.w_values.iter().zip(&spectrum.p_values) {
            out.push_str(&format!("{},{},{}\n", ff(*w), ff(p.re), ff(p.im)));
        }
        files.push(write_file(
            &cfg.out_dir,
            &format!("spectrum_{idx:02}.csv"),
            &out,
        )?);

        let table = kdq_table(proto, &rho)?;
        let targets: Vec<f64> = work_distribution(&table).iter().map(|a| a.w).collect();
        let recovered = integrate_peaks(&spectrum, &targets, cfg.window)?;
        let mut rec = String::from("w_target,re_q,im_q,window\n");
        for r in &recovered {
            rec.push_str(&format!(
                "{},{},{},{}\n",
                ff(r.w),
                ff(r.weight.re),
                ff(r.weight.im),
                cfg.window
            ));
        }
        files.push(write_file(
            &cfg.out_dir,
            &format!("recovered_{idx:02}.csv"),
            &rec,
        )?);
    }
    Ok(files)
}

fn kdq_rows(out: &mut String, scaled: f64, table: &QuasiprobTable) {
    for i in 0..2 {
        for f in 0..2 {
            let q = table.entries[i][f];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                ff(scaled),
                i,
                f,
                ff(table.w[i][f]),
                ff(q.re),
                ff(q.im)
            ));
        }
    }
}

fn cmd_kdq(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let mut out = String::from("t,i,f,w,re_q,im_q\n");
    for (scaled, proto) in protocols(cfg)? {
        let table = kdq_table(&proto, &rho)?;
        kdq_rows(&mut out, scaled, &table);
    }
    Ok(vec![write_file(&cfg.out_dir, "kdq.csv", &out)?])
}

fn cmd_moments(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let mut kdq_out = String::from("t,re_mean,im_mean,re_var,im_var\n");
    let mut tpm_out = String::from("t,re_mean,im_mean,re_var,im_var\n");
    for (scaled, proto) in protocols(cfg)? {
        let mk = work_moments(&kdq_table(&proto, &rho)?);
        let mt = work_moments(&tpm_table(&proto, &rho)?);
        kdq_out.push_str(&format!(
            "{},{},{},{},{}\n",
            ff(scaled),
            ff(mk.mean.re),
            ff(mk.mean.im),
            ff(mk.variance.re),
            ff(mk.variance.im)
        ));
        tpm_out.push_str(&format!(
            "{},{},{},{},{}\n",
            ff(scaled),
            ff(mt.mean.re),
            ff(mt.mean.im),
            ff(mt.variance.re),
            ff(mt.variance.im)
        ));
    }
    Ok(vec![
        write_file(&cfg.out_dir, "moments_kdq.csv", &kdq_out)?,
        write_file(&cfg.out_dir, "moments_tpm.csv", &tpm_out)?,
    ])
}

fn cmd_correlation(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let mut out = String::from("t,re_corr,im_corr,covariance,commutator,var_h0,var_ht\n");
    for (scaled, proto) in protocols(cfg)? {
        let rep = correlation_report(&proto, &rho)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            ff(scaled),
            ff(rep.corr.re),
            ff(rep.corr.im),
            ff(rep.covariance),
            ff(rep.commutator_expect),
            ff(rep.var_h0),
            ff(rep.var_ht)
        ));
    }
    Ok(vec![write_file(&cfg.out_dir, "correlation.csv", &out)?])
}

fn cmd_rsur(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let drive = cfg.drive();
    let scale = drive.omega().powi(4);
    let mut out = String::from("t,p,lhs,rhs,det\n");
    for (scaled, proto) in protocols(cfg)? {
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let st = make_initial_state(&drive, StateLabel::Mixture(p))?;
            let rep = crate::kdq::rsur_report(&proto, &st.rho)?;
            if rep.lhs < rep.rhs - 1e-10 * scale {
                return Err(CliError::Numerical(format!(
                    "uncertainty bound violated at t = {scaled}, p = {p}: lhs {} < rhs {}",
                    rep.lhs, rep.rhs
                )));
            }
            if (p == 0.0 || p == 1.0) && (rep.lhs - rep.rhs).abs() > 1e-9 * scale {
                return Err(CliError::Numerical(format!(
                    "pure-state saturation failed at t = {scaled}, p = {p}: gap {}",
                    (rep.lhs - rep.rhs).abs()
                )));
            }
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                ff(scaled),
                ff(p),
                ff(rep.lhs),
                ff(rep.rhs),
                ff(rep.det)
            ));
        }
    }
    Ok(vec![write_file(&cfg.out_dir, "rsur.csv", &out)?])
}

fn cmd_tpm_compare(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let mut out = String::from("t,i,f,re_kdq,im_kdq,p_tpm,abs_diff\n");
    for (scaled, proto) in protocols(cfg)? {
        let tpm = tpm_table(&proto, &rho)?;
        for i in 0..2 {
            for f in 0..2 {
                // Independent route: sequential projective statistics
                // p_if = Tr(Pf U Pi rho Pi Udag).
                let pi = &proto.h0.spectral.projectors[i];
                let pf = &proto.ht.spectral.projectors[f];
                let after_first = proto.u.mul(&pi.mul(&rho).mul(pi)).mul(&proto.u.dagger());
                let born = pf.trace_mul(&after_first).re;
                let q = tpm.entries[i][f];
                let diff = (q - crate::qmath::C64::new(born, 0.0)).norm();
                if diff > 1e-12 {
                    return Err(CliError::Numerical(format!(
                        "dephased table disagrees with two-measurement statistics at t = {scaled}, i = {i}, f = {f}: {diff:.3e}"
                    )));
                }
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    ff(scaled),
                    i,
                    f,
                    ff(q.re),
                    ff(q.im),
                    ff(born),
                    ff(diff)
                ));
            }
        }
    }
    Ok(vec![write_file(&cfg.out_dir, "tpm_compare.csv", &out)?])
}

fn cmd_nv_verify(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let params = cfg.nv_params()?;
    let om = params.omega();
    let mut files = Vec::new();

    let mut sweep = String::from("u,g1_distance,gb_distance\n");
    let mut max_g1: f64 = 0.0;
    let mut max_gb: f64 = 0.0;
    for k in 0..=24 {
        let u = (k as f64 / 24.0) * 4.0 * PI / om;
        let chk = verify_decompositions(&params, u);
        max_g1 = max_g1.max(chk.g1_distance);
        max_gb = max_gb.max(chk.gb_distance);
        sweep.push_str(&format!(
            "{},{},{}\n",
            ff(u),
            ff(chk.g1_distance),
            ff(chk.gb_distance)
        ));
    }
    files.push(write_file(&cfg.out_dir, "nv_verify.csv", &sweep)?);

    let rule = duration_rule(&params);
    let drive = params.drive;
    let plus = make_initial_state(&drive, StateLabel::Plus)?;
    let mut compiled_max: f64 = 0.0;
    for scaled_t in [0.0, PI / 2.0, 7.0 * PI / 6.0] {
        let t = scaled_t / drive.omega_rabi;
        let proto = WorkProtocol::new(drive, t)?;
        let table = kdq_table(&proto, &plus.rho)?;
        for scaled_u in [0.0, 0.74, 2.2] {
            let u = scaled_u / om;
            let g = char_function(&table, u);
            let r = run_pulse_readout(&params, u, t)?;
            compiled_max = compiled_max.max((r.as_complex() - g).norm());
        }
    }

    let report = format!(
        "selectivity_ratio {}\ncoupling_periods {}\nduration_residual {}\nmax_g1_distance {}\nmax_gb_distance {}\ncompiled_max_error {}\n",
        ff(params.selectivity_ratio()),
        ff(rule.coupling_periods),
        ff(rule.residual),
        ff(max_g1),
        ff(max_gb),
        ff(compiled_max)
    );
    files.push(write_file(&cfg.out_dir, "nv_report.txt", &report)?);
    println!(
        "nv-verify: max decomposition distances g1 {:.3e}, gb {:.3e}; compiled error {:.3e}",
        max_g1, max_gb, compiled_max
    );

    let u_example = 0.74 / om;
    let t_example = 7.0 * PI / 6.0 / drive.omega_rabi;
    for (name, quad) in [
        ("pulses_real.txt", Quadrature::Real),
        ("pulses_imag.txt", Quadrature::Imag),
    ] {
        let seq = compile_sequence(&params, u_example, t_example, quad);
        files.push(write_file(&cfg.out_dir, name, &export_pulses(&seq))?);
    }

    if max_g1 > 1e-10 || max_gb > 1e-10 {
        return Err(CliError::Numerical(format!(
            "gate decomposition distance above 1e-10: g1 {max_g1:.3e}, gb {max_gb:.3e}"
        )));
    }
    if compiled_max > 1e-6 {
        return Err(CliError::Numerical(format!(
            "compiled sequence deviates from the ideal readout by {compiled_max:.3e}"
        )));
    }
    if rule.residual > 1e-12 {
        return Err(CliError::Numerical(format!(
            "selective-duration phase residual {:.3e} above 1e-12",
            rule.residual
        )));
    }
    Ok(files)
}

fn cmd_noise_study(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let rho = cfg.initial_rho()?;
    let grid = cfg.grid()?;
    let model = cfg.noise_model();
    let mut files = Vec::new();
    let mut report = String::from("t coverage predicted_sigma trials\n");
    for (idx, (scaled, proto)) in protocols(cfg)?.iter().enumerate() {
        let rep = noise_study(proto, &rho, &grid, cfg.window, &model, cfg.trials)?;
        let mut out = String::from("w,re_true,im_true,re_mean,im_mean,std_re,std_im\n");
        for a in 0..rep.targets.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                ff(rep.targets[a]),
                ff(rep.true_weights[a].re),
                ff(rep.true_weights[a].im),
                ff(rep.mean[a].re),
                ff(rep.mean[a].im),
                ff(rep.std_re[a]),
                ff(rep.std_im[a])
            ));
        }
        files.push(write_file(
            &cfg.out_dir,
            &format!("noise_study_{idx:02}.csv"),
            &out,
        )?);
        report.push_str(&format!(
            "{} {} {} {}\n",
            ff(*scaled),
            ff(rep.coverage),
            ff(rep.predicted_sigma),
            rep.trials
        ));
    }
    files.push(write_file(&cfg.out_dir, "noise_report.txt", &report)?);
    Ok(files)
}

fn cmd_figures(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let drive = cfg.drive();
    let plus = make_initial_state(&drive, StateLabel::Plus)?;
    let rho = plus.rho;
    let grid = cfg.grid()?;
    let mut files = Vec::new();

    // Characteristic function and its spectrum at the showcase time.
    let t_star = 7.0 * PI / 6.0 / drive.omega_rabi;
    let proto_star = WorkProtocol::new(drive, t_star)?;
    let trace = sample_trace(&proto_star, &rho, &TraceSource::Analytic, &grid)?;
    let mut fig3a = String::from("u,re_g,im_g\n");
    for (u, g) in grid.points().zip(&trace.values) {
        fig3a.push_str(&format!("{},{},{}\n", ff(u), ff(g.re), ff(g.im)));
    }
    files.push(write_file(&cfg.out_dir, "fig3a.csv", &fig3a)?);
    let spectrum_star = transform_to_work(&trace);
    let mut fig3b = String::from("w,re_p,im_p\n");
    for (w, p) in spectrum_star.w_values.iter().zip(&spectrum_star.p_values) {
        fig3b.push_str(&format!("{},{},{}\n", ff(*w), ff(p.re), ff(p.im)));
    }
    files.push(write_file(&cfg.out_dir, "fig3b.csv", &fig3b)?);

    // Spectra across the configured time lattice.
    let mut fig4 = String::from("t,w,re_p,im_p\n");
    for (scaled, proto) in protocols(cfg)? {
        let tr = sample_trace(&proto, &rho, &TraceSource::Analytic, &grid)?;
        let sp = transform_to_work(&tr);
        for (w, p) in sp.w_values.iter().zip(&sp.p_values) {
            fig4.push_str(&format!("{},{},{},{}\n", ff(scaled), ff(*w), ff(p.re), ff(p.im)));
        }
    }
    files.push(write_file(&cfg.out_dir, "fig4.csv", &fig4)?);

    // Fine time sweeps for the table entries, the correlation function,
    // and the moments.
    let fine: Vec<f64> = (0..=120).map(|k| k as f64 * 2.0 * PI / 120.0).collect();
    let mut fig5 = String::from("t,re_q01,im_q01,re_q10,im_q10,re_q0,im_q0\n");
    let mut fig6 = String::from("t,re_corr,im_corr\n");
    let mut fig7 = String::from(
        "t,re_mean_kdq,re_mean_tpm,re_second_kdq,re_second_tpm,re_var_kdq,im_var_kdq,re_var_tpm\n",
    );
    for scaled in &fine {
        let t = scaled / drive.omega_rabi;
        let proto = WorkProtocol::new(drive, t)?;
        let table = kdq_table(&proto, &rho)?;
        let q01 = table.entries[0][1];
        let q10 = table.entries[1][0];
        let q0 = table.entries[0][0] + table.entries[1][1];
        fig5.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            ff(*scaled),
            ff(q01.re),
            ff(q01.im),
            ff(q10.re),
            ff(q10.im),
            ff(q0.re),
            ff(q0.im)
        ));
        let rep = correlation_report(&proto, &rho)?;
        fig6.push_str(&format!(
            "{},{},{}\n",
            ff(*scaled),
            ff(rep.corr.re),
            ff(rep.corr.im)
        ));
        let mk = work_moments(&table);
        let mt = work_moments(&tpm_table(&proto, &rho)?);
        fig7.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            ff(*scaled),
            ff(mk.mean.re),
            ff(mt.mean.re),
            ff(mk.second.re),
            ff(mt.second.re),
            ff(mk.variance.re),
            ff(mk.variance.im),
            ff(mt.variance.re)
        ));
    }
    files.push(write_file(&cfg.out_dir, "fig5.csv", &fig5)?);
    files.push(write_file(&cfg.out_dir, "fig6.csv", &fig6)?);
    files.push(write_file(&cfg.out_dir, "fig7.csv", &fig7)?);

    // Mixture sweep at the uncertainty showcase time.
    let t_rsur = 11.0 * PI / 15.0 / drive.omega_rabi;
    let proto_rsur = WorkProtocol::new(drive, t_rsur)?;
    let mut fig8 = String::from("p,re_mean,lhs,rhs\n");
    for k in 0..=100 {
        let p = k as f64 / 100.0;
        let st = make_initial_state(&drive, StateLabel::Mixture(p))?;
        let table = kdq_table(&proto_rsur, &st.rho)?;
        let m = work_moments(&table);
        let rep = crate::kdq::rsur_report(&proto_rsur, &st.rho)?;
        fig8.push_str(&format!(
            "{},{},{},{}\n",
            ff(p),
            ff(m.mean.re),
            ff(rep.lhs),
            ff(rep.rhs)
        ));
    }
    files.push(write_file(&cfg.out_dir, "fig8.csv", &fig8)?);
    Ok(files)
}
