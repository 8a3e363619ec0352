//! The `lpshrink` command line.
//!
//! Every subcommand is a thin adapter over the library. Options may also come
//! from a flat config file passed with `--config FILE`:
//!
//! ```text
//! # comments start with '#'
//! phi = 0.5
//! n = 64,128,256
//! z = 1+1i
//! ```
//!
//! Keys are the long flag names of the chosen subcommand (`_` and `-` are
//! interchangeable). Flags given on the command line win over file values;
//! unknown keys are rejected. The fully resolved options are echoed to stderr
//! in the same format.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    fmt_float, loss_comparison, persist_run, run_experiment, summarize_run, CsvTable, ExperimentConfig, Law,
    LossTable, Manifest, ResultTable, Summary, ORACLE_TOL,
};
use crate::mp_law::{boundary_profile, solve_m, support_profile, uniform_grid, DEFAULT_ETA_SCHEDULE, DEFAULT_TOL};
use crate::sampling::{sample_cov, sample_data, write_eigensystem_file};
use crate::shrinkage::{shrink_spectrum, EstimateKind};
use crate::spectral_core::{ModelConfig, PopulationSpectralMeasure, SpectralPoint};

/// Default master seed when neither `--seed` nor a config value is given.
pub const SEED_ENV: &str = "LP_SEED";

/// Support nodes per interval for the `shrink` subcommand.
const SHRINK_PROFILE_POINTS: usize = 400;

/// Practical `ε` for the domination check.
pub const DOMINANCE_EPSILON: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(name = "lpshrink", version, about = "Nonlinear covariance shrinkage and local-law Monte Carlo checks")]
pub struct Cli {
    /// Flat `key = value` file with default option values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the self-consistent equation for m(z).
    SolveM(SolveMArgs),
    /// Tabulate boundary values and densities of the limiting law.
    Density(DensityArgs),
    /// Draw one sample covariance matrix and write its spectrum.
    Simulate(SimulateArgs),
    /// Apply the shrinkage function to a sample spectrum.
    Shrink(ShrinkArgs),
    /// Residuals of a local law over replicates.
    Verify(VerifyArgs),
    /// Interval distances between empirical and limiting measures.
    MeasureDistance(DistanceArgs),
    /// Residual sweep with a log-log rate fit and a domination check.
    Rate(RateArgs),
    /// Minimum-variance losses of the oracle, shrunk, sample and scalar estimators.
    Losses(LossesArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// CSV with header `tau,weight`; defaults to a single atom at 1.
    #[arg(long, value_name = "FILE")]
    pub psm: Option<PathBuf>,
    /// Dimension ratio M/N.
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,
}

impl ModelArgs {
    fn psm(&self) -> Result<PopulationSpectralMeasure> {
        match &self.psm {
            Some(path) => PopulationSpectralMeasure::read_csv(path),
            None => Ok(PopulationSpectralMeasure::identity()),
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512, 1024])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Master seed.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Spectral parameter as `RE+IMi`.
    #[arg(long, default_value = "1+1i")]
    pub z: SpectralPoint,
}

impl SweepArgs {
    fn config(&self, law: Law) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            psm_file: self.model.psm.clone(),
            phi: self.model.phi,
            z: self.z,
            n_list: self.n.clone(),
            replicates: self.reps,
            master_seed: self.seed,
            ..ExperimentConfig::new(law, self.model.psm()?)
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveMArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub z: SpectralPoint,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub emin: f64,
    #[arg(long)]
    pub emax: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// CSV output; the JSON sidecar goes next to it. Stdout if omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Also write the full eigensystem as `eigensystem.lpeig`.
    #[arg(long)]
    pub eigensystem: bool,
}

#[derive(Debug, Args)]
pub struct ShrinkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// CSV with header `lambda`.
    #[arg(long, value_name = "FILE")]
    pub spectrum: PathBuf,
    /// CSV output with `lambda,delta`. Stdout if omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyLaw {
    BottomTrace,
    TopTrace,
    Entrywise,
    Identities,
}

impl From<VerifyLaw> for Law {
    fn from(l: VerifyLaw) -> Law {
        match l {
            VerifyLaw::BottomTrace => Law::BottomTrace,
            VerifyLaw::TopTrace => Law::TopTrace,
            VerifyLaw::Entrywise => Law::Entrywise,
            VerifyLaw::Identities => Law::Identities,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub law: VerifyLaw,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Run directory. CSV goes to stdout if omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Mu,
    Nu,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Interval-endpoint grid size.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long)]
    pub law: Law,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Parsed command line plus the resolved `key = value` options.
#[derive(Debug)]
pub struct CliConfig {
    pub cli: Cli,
    pub subcommand: String,
    pub resolved: Vec<(String, String)>,
}

impl CliConfig {
    /// `key = value` lines, the same format `--config` reads.
    pub fn render(&self) -> String {
        let mut out = format!("# lpshrink {}\n", self.subcommand);
        for (k, v) in &self.resolved {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", k + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key", k + 1)));
        }
        if out.iter().any(|(k2, _)| *k2 == key) {
            return Err(Error::Parse(format!("config line {}: duplicate key {key:?}", k + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Either a usage problem (help/version/unknown flag) or a library error.
#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn to_strings(argv: impl IntoIterator<Item = impl Into<OsString>>) -> Result<Vec<String>> {
    argv.into_iter()
        .map(|a| {
            a.into()
                .into_string()
                .map_err(|a| Error::Parse(format!("argument {a:?} is not valid UTF-8")))
        })
        .collect()
}

/// Value of `--config` in raw arguments, if any.
fn find_config(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(k, a)| {
        if a == "--config" {
            args.get(k + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Inserts file-provided options after the subcommand name unless the same
/// flag already appears on the command line.
fn merge_config(mut args: Vec<String>, file: &[(String, String)]) -> Result<Vec<String>> {
    let root = Cli::command();
    let Some((pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(k, a)| root.find_subcommand(a).map(|s| (k, s.clone())))
    else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for (key, value) in file {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && a.get_id() != "config")
            .ok_or_else(|| Error::Parse(format!("config: unknown key {key:?} for `{}`", sub.get_name())))?;
        let flag = format!("--{key}");
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        if arg.get_action().takes_values() {
            injected.push(format!("{flag}={value}"));
        } else {
            match value.as_str() {
                "true" => injected.push(flag),
                "false" => {}
                other => return Err(Error::Parse(format!("config: {key} expects true/false, got {other:?}"))),
            }
        }
    }
    args.splice(pos + 1..pos + 1, injected);
    Ok(args)
}

fn resolved_options(matches: &ArgMatches) -> (String, Vec<(String, String)>) {
    let Some((name, sub)) = matches.subcommand() else {
        return (String::new(), Vec::new());
    };
    let cmd = Cli::command();
    let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
    let mut out = Vec::new();
    for arg in sub_cmd.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(id, "config" | "verbose" | "help" | "version") {
            continue;
        }
        if !arg.get_action().takes_values() {
            if sub.get_flag(id) {
                out.push((long.to_string(), "true".into()));
            }
            continue;
        }
        if let Some(raw) = sub.get_raw(id) {
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_string(), vals.join(",")));
        }
    }
    (name.to_string(), out)
}

/// Parses `argv` (including the program name), merging a `--config` file.
pub fn parse_args(argv: impl IntoIterator<Item = impl Into<OsString>>) -> std::result::Result<CliConfig, CliError> {
    let mut args = to_strings(argv)?;
    if let Some(path) = find_config(&args) {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        args = merge_config(args, &parse_config_text(&text)?)?;
    }
    let matches = Cli::command().try_get_matches_from(&args).map_err(CliError::Usage)?;
    let cli = Cli::from_arg_matches(&matches).map_err(CliError::Usage)?;
    let (subcommand, resolved) = resolved_options(&matches);
    Ok(CliConfig {
        cli,
        subcommand,
        resolved,
    })
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => {
            write_text(p, text)?;
            writeln!(stdout, "{}", p.display()).map_err(|e| Error::io("<stdout>", e))
        }
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_spectrum(path: &Path) -> Result<Vec<f64>> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = headers
        .iter()
        .position(|h| h == "lambda")
        .ok_or_else(|| Error::Parse(format!("{}: missing `lambda` column", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let v = rec
            .get(col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{}: bad lambda value", path.display())))?;
        out.push(v);
    }
    Ok(out)
}

/// Residual table with the column names of `verify` and `measure-distance`.
struct Renamed<'a> {
    table: &'a ResultTable,
    header: &'static str,
    with_bound: bool,
}

impl CsvTable for Renamed<'_> {
    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.header)?;
        for r in &self.table.rows {
            if self.with_bound {
                writeln!(out, "{},{},{},{}", r.n, r.seed, fmt_float(r.value), fmt_float(r.bound))?;
            } else {
                writeln!(out, "{},{},{}", r.n, r.seed, fmt_float(r.value))?;
            }
        }
        Ok(())
    }
}

fn emit_table(
    config: &ExperimentConfig,
    table: &dyn CsvTable,
    summary: &Summary,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    match out {
        Some(dir) => {
            persist_run(config, table, summary, &Manifest::current(), dir)?;
            writeln!(stdout, "{}", dir.display()).map_err(|e| Error::io("<stdout>", e))
        }
        None => table.write_csv(stdout).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn solve_m_cmd(a: &SolveMArgs, stdout: &mut dyn Write) -> Result<()> {
    let sol = solve_m(a.z, &a.model.psm()?, a.model.phi, a.tol)?;
    let v = json!({
        "z": { "re": sol.z.e, "im": sol.z.eta },
        "m": { "re": sol.m.re, "im": sol.m.im },
        "residual": sol.residual,
        "iterations": sol.iterations,
    });
    writeln!(stdout, "{}", serde_json::to_string_pretty(&v)?).map_err(|e| Error::io("<stdout>", e))
}

fn density_cmd(a: &DensityArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(a.emax > a.emin) || a.points < 2 {
        return Err(Error::Domain("need emin < emax and points >= 2".into()));
    }
    let grid = uniform_grid(a.emin, a.emax, a.points);
    let p = boundary_profile(&grid, &a.model.psm()?, a.model.phi, &DEFAULT_ETA_SCHEDULE)?;
    let mut csv = String::from("E,w,hilbert_w,w_S\n");
    for k in 0..p.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(p.grid[k]),
            fmt_float(p.w[k]),
            fmt_float(p.hilbert_w[k]),
            fmt_float(p.w_s[k])
        ));
    }
    let sidecar = serde_json::to_string_pretty(&json!({
        "phi": p.phi,
        "edges": p.edges,
        "atom_at_zero": p.atom_at_zero,
        "flagged": p.flagged.iter().filter(|f| **f).count(),
    }))?;
    match &a.out {
        Some(path) => {
            emit(Some(path), &csv, stdout)?;
            write_text(&path.with_extension("json"), &sidecar)
        }
        None => {
            emit(None, &csv, stdout)?;
            eprintln!("{sidecar}");
            Ok(())
        }
    }
}

fn simulate_cmd(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = ModelConfig::with_ratio(a.model.phi, a.n)?;
    let sigma = a.model.psm()?.diagonal_covariance(model.m)?;
    let x = sample_data::<f64>(&model, a.seed)?;
    let eig = sample_cov(&sigma, &x)?.into_eigensystem();
    let mut csv = String::from("lambda\n");
    for &l in eig.eigenvalues() {
        csv.push_str(&fmt_float(l));
        csv.push('\n');
    }
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_text(&a.out.join("spectrum.csv"), &csv)?;
    if a.eigensystem {
        write_eigensystem_file(&a.out.join("eigensystem.lpeig"), &eig, a.n, a.seed)?;
    }
    writeln!(stdout, "{}", a.out.display()).map_err(|e| Error::io("<stdout>", e))
}

fn shrink_cmd(a: &ShrinkArgs, stdout: &mut dyn Write) -> Result<()> {
    let lambda = read_spectrum(&a.spectrum)?;
    let profile = support_profile(&a.model.psm()?, a.model.phi, SHRINK_PROFILE_POINTS)?;
    let s = shrink_spectrum(&lambda, &profile, a.model.phi)?;
    let mut csv = String::from("lambda,delta\n");
    for (l, d) in s.lambda.iter().zip(&s.delta) {
        csv.push_str(&format!("{},{}\n", fmt_float(*l), fmt_float(*d)));
    }
    let summary = serde_json::to_string(&json!({
        "trace_in": s.lambda.iter().sum::<f64>(),
        "trace_out": s.delta.iter().sum::<f64>(),
        "clamped_count": s.clamped_count(),
    }))?;
    match &a.out {
        Some(path) => {
            write_text(path, &csv)?;
            write_text(&path.with_extension("json"), &summary)?;
            writeln!(stdout, "{summary}").map_err(|e| Error::io("<stdout>", e))
        }
        None => {
            emit(None, &csv, stdout)?;
            eprintln!("{summary}");
            Ok(())
        }
    }
}

fn verify_cmd(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let law = Law::from(a.law);
    let config = a.sweep.config(law)?;
    let table = run_experiment(&config)?;
    let summary = summarize_run(law, &table, DOMINANCE_EPSILON);
    let csv = Renamed {
        table: &table,
        header: "n,seed,residual,psi_or_bound",
        with_bound: true,
    };
    emit_table(&config, &csv, &summary, a.out.as_deref(), stdout)
}

fn distance_cmd(a: &DistanceArgs, stdout: &mut dyn Write) -> Result<()> {
    let law = match a.which {
        Which::Mu => Law::MuInterval,
        Which::Nu => Law::NuInterval,
    };
    let config = ExperimentConfig {
        grid_size: a.grid,
        ..a.sweep.config(law)?
    };
    let table = run_experiment(&config)?;
    let summary = summarize_run(law, &table, DOMINANCE_EPSILON);
    let csv = Renamed {
        table: &table,
        header: "n,seed,distance",
        with_bound: false,
    };
    emit_table(&config, &csv, &summary, a.out.as_deref(), stdout)
}

fn rate_cmd(a: &RateArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = a.sweep.config(a.law)?;
    let table = run_experiment(&config)?;
    let summary = summarize_run(a.law, &table, DOMINANCE_EPSILON);
    if let Some(fit) = &summary.rate {
        eprintln!("slope {:.4} ± {:.4}", fit.slope, fit.stderr);
    }
    emit_table(&config, &table, &summary, Some(&a.out), stdout)
}

fn losses_cmd(a: &LossesArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = a.sweep.config(Law::ExcessLoss)?;
    let table: LossTable = loss_comparison(&config)?;
    for &n in &config.n_list {
        let means: Vec<String> = [EstimateKind::Oracle, EstimateKind::Delta, EstimateKind::Sample, EstimateKind::Baseline]
            .iter()
            .map(|k| format!("{} {:.6}", k.name(), table.mean(n, *k)))
            .collect();
        eprintln!("N = {n}: {}", means.join(", "));
    }
    let summary = Summary {
        law: Some(Law::ExcessLoss),
        passed: Some(table.oracle_violations(ORACLE_TOL) == 0),
        rows: table.rows.len(),
        failures: table.failures.clone(),
        ..Summary::default()
    };
    emit_table(&config, &table, &summary, Some(&a.out), stdout)
}

/// Runs a parsed command, writing data or output paths to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::SolveM(a) => solve_m_cmd(a, stdout),
        Command::Density(a) => density_cmd(a, stdout),
        Command::Simulate(a) => simulate_cmd(a, stdout),
        Command::Shrink(a) => shrink_cmd(a, stdout),
        Command::Verify(a) => verify_cmd(a, stdout),
        Command::MeasureDistance(a) => distance_cmd(a, stdout),
        Command::Rate(a) => rate_cmd(a, stdout),
        Command::Losses(a) => losses_cmd(a, stdout),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        2
    } else {
        1
    }
}

fn report(e: &Error) {
    let kind = if e.is_numeric() { "numeric" } else { "input" };
    eprintln!("error[{kind}]: {e}");
}

/// Entry point for the binary: parse, echo the resolved options, run, and
/// map the outcome to an exit code.
pub fn dispatch(argv: impl IntoIterator<Item = impl Into<OsString>>) -> i32 {
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(CliError::Usage(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
        Err(CliError::Run(e)) => {
            report(&e);
            return exit_code(&e);
        }
    };
    let level = match config.cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    eprint!("{}", config.render());
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&config.cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            exit_code(&e)
        }
    }
}
