//! Monte Carlo sweeps over sample sizes, empirical rate fits and
//! stochastic-domination checks, and persistence of runs.
//!
//! Each `(N, replicate)` job draws its data from a seed that is a pure
//! function of `(master_seed, N, replicate)`, so results do not depend on
//! scheduling. Jobs run on the rayon pool and are sorted before anything is
//! written.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measures::{empirical_measures, DeterministicMeasure, IntervalGrid, Normalization, Weight};
use crate::mp_law::{psi, solve_m, support_profile, BoundaryProfile, DEFAULT_TOL};
use crate::resolvent_lab::{
    bottom_trace_from_spectrum, build_bundle, build_pi, entrywise_residuals_fast, green_identity_check,
    standard_test_vectors, DeterministicApprox, SpectralResolvent,
};
use crate::sampling::{sample_cov, sample_data, sample_spectrum};
use crate::shrinkage::{baseline_estimates, delta_shrink, mv_loss, oracle_shrink, EstimateKind};
use crate::spectral_core::{Complex64, ModelConfig, PopulationCovariance, PopulationSpectralMeasure, SpectralPoint};

/// Support nodes per interval used to tabulate `δ` for the loss laws.
pub const DELTA_PROFILE_POINTS: usize = 400;

/// Slack on the per-replicate oracle ordering.
pub const ORACLE_TOL: f64 = 1e-9;

/// Trials per replicate for the identity law.
const IDENTITY_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `|N⁻¹ Tr R_N − m|` against `(Nη)⁻¹`.
    BottomTrace,
    /// `|M⁻¹ Tr(zR_MΣ + Σ(I + mΣ)⁻¹)|` against `(Nη)⁻¹`.
    TopTrace,
    /// `|⟨v, (G − Π)w⟩|` for the fixed test vectors against `Ψ`.
    Entrywise,
    /// Interval distance of `μ̂` to `ϱ_S` against `N⁻¹`.
    MuInterval,
    /// Interval distance of `ν̂` to `δ dϱ_S` against `N⁻¹`.
    NuInterval,
    /// `𝓛(Σ̃) − 𝓛(Σ^or)` against `N⁻¹`.
    ExcessLoss,
    /// Largest defect of the resolvent identities for `G`, against `1e-9`.
    Identities,
}

impl Law {
    pub const ALL: [Law; 7] = [
        Law::BottomTrace,
        Law::TopTrace,
        Law::Entrywise,
        Law::MuInterval,
        Law::NuInterval,
        Law::ExcessLoss,
        Law::Identities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Law::BottomTrace => "bottom-trace",
            Law::TopTrace => "top-trace",
            Law::Entrywise => "entrywise",
            Law::MuInterval => "mu-interval",
            Law::NuInterval => "nu-interval",
            Law::ExcessLoss => "excess-loss",
            Law::Identities => "identities",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('_', "-");
        Law::ALL
            .into_iter()
            .find(|l| l.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown law {s:?}")))
    }
}

fn default_grid_size() -> usize {
    200
}

fn default_test_vectors() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub law: Law,
    pub psm: PopulationSpectralMeasure,
    /// Where `psm` was read from, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psm_file: Option<PathBuf>,
    pub phi: f64,
    pub z: SpectralPoint,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Endpoint grid for the interval laws.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Random test vectors for the entrywise law.
    #[serde(default = "default_test_vectors")]
    pub test_vectors: usize,
}

impl ExperimentConfig {
    /// Defaults: `N ∈ {64, …, 1024}`, 100 replicates, `φ = 1/2`, `z = 1 + i`.
    pub fn new(law: Law, psm: PopulationSpectralMeasure) -> Self {
        Self {
            law,
            psm,
            psm_file: None,
            phi: 0.5,
            z: SpectralPoint::new(1.0, 1.0),
            n_list: vec![64, 128, 256, 512, 1024],
            replicates: 100,
            master_seed: 0,
            output: None,
            grid_size: default_grid_size(),
            test_vectors: default_test_vectors(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("N list must be non-empty and strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be >= 1"));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::domain(format!("phi must lie in (0, 1), got {}", self.phi)));
        }
        if !self.z.in_upper_half_plane() {
            return Err(Error::domain(format!("z = {} must lie in the upper half-plane", self.z)));
        }
        if self.grid_size < 2 {
            return Err(Error::domain("grid size must be >= 2"));
        }
        for &n in &self.n_list {
            let m = (self.phi * n as f64).round() as usize;
            if m < 2 {
                return Err(Error::domain(format!("N = {n} gives M = {m}; need M >= 2")));
            }
        }
        Ok(())
    }

    fn model(&self, n: usize) -> Result<ModelConfig> {
        ModelConfig::with_ratio(self.phi, n)
    }
}

/// `sha256(master ‖ N ‖ replicate)` truncated to 64 bits (little endian).
pub fn replicate_seed(master: u64, n: usize, replicate: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update((replicate as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    /// Position within the replicate (test-vector pair for the entrywise law).
    pub item: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<Failure>,
}

impl ResultTable {
    pub fn values_at(&self, n: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n).map(|r| r.value).collect()
    }

    pub fn n_values(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.dedup();
        ns
    }
}

/// State shared by all replicates at one `N`.
struct Prepared {
    model: ModelConfig,
    sigma: PopulationCovariance,
    m: Complex64,
    bound: f64,
    pi: Option<DeterministicApprox>,
    pairs: Vec<(DVector<Complex64>, DVector<Complex64>)>,
    grid: Option<IntervalGrid>,
    profile: Option<BoundaryProfile>,
}

fn prepare(config: &ExperimentConfig, n: usize) -> Result<Prepared> {
    let model = config.model(n)?;
    let sigma = config.psm.diagonal_covariance(model.m)?;
    let psm = sigma.empirical_psm();
    let phi = model.phi();
    let z = config.z;
    let m = solve_m(z, &psm, phi, DEFAULT_TOL)?.m;
    let nf = n as f64;
    let mut prep = Prepared {
        model,
        sigma,
        m,
        bound: 1.0 / nf,
        pi: None,
        pairs: Vec::new(),
        grid: None,
        profile: None,
    };
    match config.law {
        Law::BottomTrace | Law::TopTrace => prep.bound = 1.0 / (nf * z.eta),
        Law::Entrywise => {
            prep.bound = psi(z, m, n)?.psi;
            prep.pi = Some(build_pi(z, m, &prep.sigma, n)?);
            prep.pairs = standard_test_vectors(model.m, n, config.test_vectors);
        }
        Law::MuInterval | Law::NuInterval => {
            let det = DeterministicMeasure::from_law(&psm, phi, Normalization::EsdOfS)?;
            let weight = if config.law == Law::MuInterval {
                Weight::Unit
            } else {
                Weight::Delta
            };
            prep.grid = Some(IntervalGrid::new(&det, weight, config.grid_size)?);
        }
        Law::ExcessLoss => prep.profile = Some(support_profile(&psm, phi, DELTA_PROFILE_POINTS)?),
        Law::Identities => prep.bound = 1e-9,
    }
    Ok(prep)
}

fn replicate_values(config: &ExperimentConfig, prep: &Prepared, seed: u64) -> Result<Vec<f64>> {
    let x = sample_data::<f64>(&prep.model, seed)?;
    let z = config.z;
    match config.law {
        Law::BottomTrace => {
            let lambda = sample_spectrum(&prep.sigma, &x)?;
            Ok(vec![(bottom_trace_from_spectrum(&lambda, prep.model.n, z) - prep.m).norm()])
        }
        Law::TopTrace => Ok(vec![SpectralResolvent::new(z, &x, &prep.sigma)?.residual_top(prep.m).norm()]),
        Law::Entrywise => {
            let res = SpectralResolvent::new(z, &x, &prep.sigma)?;
            entrywise_residuals_fast(&res, prep.pi.as_ref().expect("prepared"), &prep.pairs)
        }
        Law::MuInterval | Law::NuInterval => {
            let eig = sample_cov(&prep.sigma, &x)?.into_eigensystem();
            let (mu, nu) = empirical_measures(&eig, &prep.sigma)?;
            let grid = prep.grid.as_ref().expect("prepared");
            Ok(vec![grid.distance(if config.law == Law::MuInterval { &mu } else { &nu })])
        }
        Law::ExcessLoss => {
            let losses = replicate_losses(prep, &x)?;
            let oracle = losses.iter().find(|l| l.0 == EstimateKind::Oracle).expect("oracle").1;
            let shrunk = losses.iter().find(|l| l.0 == EstimateKind::Delta).expect("delta").1;
            Ok(vec![shrunk - oracle])
        }
        Law::Identities => {
            let bundle = build_bundle(z, &x, &prep.sigma)?;
            let report = green_identity_check(&bundle, IDENTITY_TRIALS)?;
            Ok(vec![report.max_violation.max(bundle.block_defect())])
        }
    }
}

/// `(estimator, mv_loss)` for the oracle, `δ`-shrunk, sample and scalar
/// estimators on one draw. Errors if the oracle is beaten by more than
/// [`ORACLE_TOL`].
fn replicate_losses(prep: &Prepared, x: &crate::sampling::DataMatrix) -> Result<Vec<(EstimateKind, f64)>> {
    let eig = sample_cov(&prep.sigma, x)?.into_eigensystem();
    let n = prep.model.n;
    let profile = prep.profile.as_ref().expect("prepared");
    let mut out = vec![
        (EstimateKind::Oracle, mv_loss(&oracle_shrink(eig.vectors(), &prep.sigma)?, &prep.sigma, n)?.mv_loss),
        (EstimateKind::Delta, mv_loss(&delta_shrink(&eig, profile, profile.phi)?, &prep.sigma, n)?.mv_loss),
    ];
    for est in baseline_estimates(&eig, None) {
        out.push((est.kind(), mv_loss(&est, &prep.sigma, n)?.mv_loss));
    }
    let oracle = out[0].1;
    if let Some((kind, loss)) = out.iter().find(|(_, l)| *l < oracle - ORACLE_TOL) {
        return Err(Error::Experiment(format!(
            "oracle loss {oracle:.6e} exceeds {} loss {loss:.6e}",
            kind.name()
        )));
    }
    Ok(out)
}

fn jobs(config: &ExperimentConfig) -> Vec<(usize, usize, u64)> {
    config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r, replicate_seed(config.master_seed, n, r))))
        .collect()
}

fn check_failure_rate(failures: usize, total: usize) -> Result<()> {
    if failures * 10 > total {
        return Err(Error::Experiment(format!("{failures} of {total} replicates failed")));
    }
    Ok(())
}

/// Runs every `(N, replicate)` job of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let prepared: Vec<Prepared> = config.n_list.iter().map(|&n| prepare(config, n)).collect::<Result<_>>()?;
    let all = jobs(config);
    let outcomes: Vec<_> = all
        .par_iter()
        .map(|&(n, r, seed)| {
            let k = config.n_list.iter().position(|&v| v == n).expect("n in list");
            (n, r, seed, replicate_values(config, &prepared[k], seed), prepared[k].bound)
        })
        .collect();
    let mut table = ResultTable::default();
    for (n, replicate, seed, outcome, bound) in outcomes {
        match outcome {
            Ok(values) => table.rows.extend(values.into_iter().enumerate().map(|(item, value)| ResultRow {
                n,
                replicate,
                seed,
                item,
                value,
                bound,
            })),
            Err(e) => {
                warn!("N = {n}, replicate {replicate}: {e}");
                table.failures.push(Failure {
                    n,
                    replicate,
                    seed,
                    message: e.to_string(),
                });
            }
        }
    }
    table.rows.sort_by_key(|r| (r.n, r.replicate, r.item));
    check_failure_rate(table.failures.len(), all.len())?;
    info!("{}: {} rows, {} failures", config.law, table.rows.len(), table.failures.len());
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub estimator: EstimateKind,
    pub mv_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTable {
    pub rows: Vec<LossRow>,
    pub failures: Vec<Failure>,
}

impl LossTable {
    pub fn losses(&self, n: usize, estimator: EstimateKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.estimator == estimator)
            .map(|r| r.mv_loss)
            .collect()
    }

    pub fn mean(&self, n: usize, estimator: EstimateKind) -> f64 {
        let v = self.losses(n, estimator);
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Replicates where some estimator beat the oracle by more than `tol`.
    pub fn oracle_violations(&self, tol: f64) -> usize {
        let mut count = 0;
        for chunk in self.rows.chunk_by(|a, b| a.n == b.n && a.replicate == b.replicate) {
            let oracle = chunk.iter().find(|r| r.estimator == EstimateKind::Oracle).map(|r| r.mv_loss);
            if let Some(o) = oracle {
                if chunk.iter().any(|r| r.mv_loss < o - tol) {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Per-replicate MV losses of the oracle, `δ`-shrunk, sample and scalar
/// estimators. The law in `config` is ignored.
pub fn loss_comparison(config: &ExperimentConfig) -> Result<LossTable> {
    let config = ExperimentConfig {
        law: Law::ExcessLoss,
        ..config.clone()
    };
    config.validate()?;
    let prepared: Vec<Prepared> = config.n_list.iter().map(|&n| prepare(&config, n)).collect::<Result<_>>()?;
    let all = jobs(&config);
    let outcomes: Vec<_> = all
        .par_iter()
        .map(|&(n, r, seed)| {
            let k = config.n_list.iter().position(|&v| v == n).expect("n in list");
            let prep = &prepared[k];
            let res = sample_data::<f64>(&prep.model, seed).and_then(|x| replicate_losses(prep, &x));
            (n, r, seed, res)
        })
        .collect();
    let mut table = LossTable::default();
    for (n, replicate, seed, outcome) in outcomes {
        match outcome {
            Ok(losses) => table.rows.extend(losses.into_iter().map(|(estimator, mv_loss)| LossRow {
                n,
                replicate,
                seed,
                estimator,
                mv_loss,
            })),
            Err(e) => {
                warn!("N = {n}, replicate {replicate}: {e}");
                table.failures.push(Failure {
                    n,
                    replicate,
                    seed,
                    message: e.to_string(),
                });
            }
        }
    }
    table.rows.sort_by_key(|r| (r.n, r.replicate, r.estimator as u8));
    check_failure_rate(table.failures.len(), all.len())?;
    Ok(table)
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub count: usize,
    pub median: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

fn summarize(n: usize, mut values: Vec<f64>) -> NSummary {
    values.retain(|v| !v.is_nan());
    values.sort_by(f64::total_cmp);
    let q50 = quantile(&values, 0.5);
    NSummary {
        n,
        count: values.len(),
        median: q50,
        q50,
        q90: quantile(&values, 0.9),
        q99: quantile(&values, 0.99),
    }
}

/// Statistic fitted against `N` on a log–log scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Value,
    /// `value / bound`.
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub per_n: Vec<NSummary>,
}

impl RateFit {
    /// The median at the largest `N` is strictly below the one at the
    /// smallest `N`.
    pub fn decays(&self) -> bool {
        match (self.per_n.first(), self.per_n.last()) {
            (Some(a), Some(b)) if self.per_n.len() >= 2 => b.median < a.median,
            _ => false,
        }
    }
}

/// Least-squares line through `(ln x, ln y)`; returns `(slope, intercept,
/// stderr of slope)`.
fn log_log_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least two points, have {}", points.len())));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all N values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if points.len() > 2 {
        let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (sse / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

/// Fits `ln median` against `ln N`. Non-positive medians are dropped with a
/// warning.
pub fn fit_rate(table: &ResultTable, column: Column) -> Result<RateFit> {
    let per_n: Vec<NSummary> = table
        .n_values()
        .into_iter()
        .map(|n| {
            let vals = table
                .rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| match column {
                    Column::Value => r.value,
                    Column::Ratio => r.value / r.bound,
                })
                .collect();
            summarize(n, vals)
        })
        .collect();
    let mut points = Vec::new();
    for s in &per_n {
        if s.median > 0.0 && s.median.is_finite() {
            points.push((s.n as f64, s.median));
        } else {
            warn!("N = {}: median {} excluded from the rate fit", s.n, s.median);
        }
    }
    let (slope, intercept, stderr) = log_log_fit(&points)?;
    Ok(RateFit {
        slope,
        intercept,
        stderr,
        per_n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceAtN {
    pub n: usize,
    pub q99_ratio: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub epsilon: f64,
    pub passed: bool,
    pub per_n: Vec<DominanceAtN>,
    /// Slope of `ln q99(X/Y)` against `ln N` (`None` with a single `N`).
    pub slope: Option<f64>,
    /// Rows dropped because the bound was zero.
    pub excluded: usize,
}

/// Empirical rendering of `X ≺ Y`: for every `N`, the 99th percentile of
/// `X/Y` is at most `N^ε`, and `ln q99(X/Y)` grows with slope at most
/// `ε + 0.05` in `ln N`.
pub fn dominance_check(table: &ResultTable, epsilon: f64) -> Result<DominanceReport> {
    let excluded = table.rows.iter().filter(|r| r.bound == 0.0).count();
    if excluded > 0 {
        warn!("{excluded} rows with zero bound excluded from the dominance check");
    }
    let mut per_n = Vec::new();
    for n in table.n_values() {
        let mut ratios: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.n == n && r.bound != 0.0)
            .map(|r| r.value / r.bound)
            .collect();
        if ratios.is_empty() {
            continue;
        }
        ratios.sort_by(f64::total_cmp);
        let q99 = quantile(&ratios, 0.99);
        let threshold = (n as f64).powf(epsilon);
        per_n.push(DominanceAtN {
            n,
            q99_ratio: q99,
            threshold,
            passed: q99 <= threshold,
        });
    }
    if per_n.is_empty() {
        return Err(Error::Fit("no usable rows for the dominance check".into()));
    }
    let slope = if per_n.len() >= 2 && per_n.iter().all(|p| p.q99_ratio > 0.0) {
        let pts: Vec<(f64, f64)> = per_n.iter().map(|p| (p.n as f64, p.q99_ratio)).collect();
        Some(log_log_fit(&pts)?.0)
    } else {
        None
    };
    let passed = per_n.iter().all(|p| p.passed) && slope.is_none_or(|s| s <= epsilon + 0.05);
    Ok(DominanceReport {
        epsilon,
        passed,
        per_n,
        slope,
        excluded,
    })
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<DominanceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decays: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub rows: usize,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub created_unix: u64,
    pub threads: usize,
}

impl Manifest {
    pub fn current() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            threads: rayon::current_num_threads(),
        }
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tables that can be written as `results.csv`.
pub trait CsvTable {
    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()>;
}

impl CsvTable for ResultTable {
    /// Columns `n,seed,value,bound`.
    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "n,seed,value,bound")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.n, r.seed, fmt_float(r.value), fmt_float(r.bound))?;
        }
        Ok(())
    }
}

impl CsvTable for LossTable {
    /// Columns `n,seed,estimator,mv_loss`.
    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "n,seed,estimator,mv_loss")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.n, r.seed, r.estimator.name(), fmt_float(r.mv_loss))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `config.json`, `results.csv`, `summary.json` and `manifest.json`
/// into `dir` (created if missing) and returns `dir`.
pub fn persist_run(
    config: &ExperimentConfig,
    table: &dyn CsvTable,
    summary: &Summary,
    manifest: &Manifest,
    dir: &Path,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("config.json"), serde_json::to_string_pretty(config)?.as_bytes())?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv).map_err(|e| Error::io(dir.join("results.csv"), e))?;
    write_file(&dir.join("results.csv"), &csv)?;
    write_file(&dir.join("summary.json"), serde_json::to_string_pretty(summary)?.as_bytes())?;
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?.as_bytes())?;
    Ok(dir.to_path_buf())
}

/// Reads `config.json` from a run directory.
pub fn load_config(dir: &Path) -> Result<ExperimentConfig> {
    let path = dir.join("config.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Rate fit, dominance check (trace and entrywise laws only) and decay flag
/// for a residual table.
pub fn summarize_run(law: Law, table: &ResultTable, epsilon: f64) -> Summary {
    let rate = fit_rate(table, Column::Value).ok();
    let dominance = match law {
        Law::BottomTrace | Law::TopTrace | Law::Entrywise => dominance_check(table, epsilon).ok(),
        _ => None,
    };
    Summary {
        law: Some(law),
        decays: rate.as_ref().map(RateFit::decays),
        passed: dominance.as_ref().map(|d| d.passed),
        rate,
        dominance,
        rows: table.rows.len(),
        failures: table.failures.clone(),
    }
}
