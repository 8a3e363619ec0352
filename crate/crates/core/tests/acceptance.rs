//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runtime budgets are part of each criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpshrink::experiments::{dominance_check, fit_rate, loss_comparison, run_experiment, Column, ExperimentConfig, Law};
use lpshrink::mp_law::{boundary_profile, solve_m, uniform_grid, DEFAULT_ETA_SCHEDULE, DEFAULT_TOL};
use lpshrink::resolvent_lab::{
    build_bundle, build_pi, green_identity_check, random_well_conditioned, resolvent_identity_check,
    trace_rewrite_defect, trace_rewrite_defect_unscaled,
};
use lpshrink::sampling::{sample_data, DataMatrix};
use lpshrink::shrinkage::{delta, EstimateKind};
use lpshrink::spectral_core::IndexedMatrix;
use lpshrink::{Complex64, ModelConfig, PopulationCovariance, PopulationSpectralMeasure, PsmAtom, SpectralPoint};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn two_atoms() -> PopulationSpectralMeasure {
    PopulationSpectralMeasure::new(vec![PsmAtom { tau: 1.0, weight: 0.5 }, PsmAtom { tau: 3.0, weight: 0.5 }]).unwrap()
}

/// Root of `z m² + (z + 1 − φ) m + 1 = 0` in the upper half-plane.
fn quadratic_m(z: Complex64, phi: f64) -> Complex64 {
    let b = z + 1.0 - phi;
    let disc = (b * b - 4.0 * z).sqrt();
    let r1 = (-b + disc) / (2.0 * z);
    let r2 = (-b - disc) / (2.0 * z);
    if r1.im > r2.im {
        r1
    } else {
        r2
    }
}

fn solver_agreement() -> Outcome {
    let psm = PopulationSpectralMeasure::identity();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let e = -2.0 + 6.0 * i as f64 / 9.0;
        for j in 0..10 {
            let eta = 10f64.powf(-3.0 + 4.0 * j as f64 / 9.0);
            let z = SpectralPoint::new(e, eta);
            match solve_m(z, &psm, 0.5, DEFAULT_TOL) {
                Ok(sol) => worst = worst.max((sol.m - quadratic_m(z.z(), 0.5)).norm()),
                Err(err) => return outcome(false, format!("solve_m({z}) failed: {err}")),
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |m - quadratic root| = {worst:.2e} (tol 1e-10)"))
}

fn delta_identity() -> Outcome {
    let grid = uniform_grid(0.2, 2.8, 400);
    let profile = match boundary_profile(&grid, &PopulationSpectralMeasure::identity(), 0.5, &DEFAULT_ETA_SCHEDULE) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for (k, &e) in grid.iter().enumerate() {
        match delta(e, profile.m_check_s(k), 0.5) {
            Ok(d) => worst = worst.max((d - 1.0).abs()),
            Err(err) => return outcome(false, format!("delta({e}) failed: {err}")),
        }
    }
    outcome(worst <= 1e-6, format!("max |delta - 1| = {worst:.2e} (tol 1e-6)"))
}

fn random_sigma(rng: &mut ChaCha8Rng, m: usize) -> PopulationCovariance {
    PopulationCovariance::diagonal((0..m).map(|_| rng.random_range(0.5..4.0)).collect()).unwrap()
}

/// Orthonormal frame from the QR factor of a Gaussian matrix.
fn random_frame(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    g.qr().q()
}

fn trace_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut literal, mut corrected): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let m = rng.random_range(4..40);
        let n = m + rng.random_range(4..60);
        let sigma = random_sigma(&mut rng, m);
        let z = SpectralPoint::new(rng.random_range(-1.0..5.0), rng.random_range(0.05..3.0));
        let phi = m as f64 / n as f64;
        let sol = match solve_m(z, &sigma.empirical_psm(), phi, DEFAULT_TOL) {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let pi = match build_pi(z, sol.m, &sigma, n) {
            Ok(p) => p,
            Err(e) => return outcome(false, e.to_string()),
        };
        literal = literal.max(trace_rewrite_defect_unscaled(&pi, phi).norm());
        corrected = corrected.max(trace_rewrite_defect(&pi, phi).norm());
    }
    outcome(
        literal <= 1e-10,
        format!(
            "max |M^-1 Tr(-S(I+mS)^-1) + phi^-1(1/(zm)+1)| = {literal:.2e} (tol 1e-10); \
             with phi^-1(1/m+z) instead: {corrected:.2e}"
        ),
    )
}

fn green_instance(rng: &mut ChaCha8Rng, m: usize, n: usize, frame: bool) -> (SpectralPoint, DataMatrix, PopulationCovariance) {
    let sigma = if frame {
        let taus = (0..m).map(|_| rng.random_range(0.5..4.0)).collect();
        PopulationCovariance::with_frame(taus, random_frame(rng, m)).unwrap()
    } else {
        random_sigma(rng, m)
    };
    let x = sample_data::<f64>(&ModelConfig::new(m, n).unwrap(), rng.random()).unwrap();
    let z = SpectralPoint::new(rng.random_range(-1.0..4.0), rng.random_range(0.1..2.0));
    (z, x, sigma)
}

fn resolvent_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for seed in 0..100 {
        let a = IndexedMatrix::from_dense(random_well_conditioned(20, seed));
        match resolvent_identity_check(&a, 20) {
            Ok(r) => {
                worst = worst.max(r.max_violation);
                checks += r.checks;
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut skipped = 0;
    for _ in 0..100 {
        let (z, x, sigma) = green_instance(&mut rng, 8, 16, false);
        let report = build_bundle(z, &x, &sigma).and_then(|b| green_identity_check(&b, 20));
        match report {
            Ok(r) => {
                worst = worst.max(r.max_violation);
                checks += r.checks;
                skipped += r.skipped;
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        worst <= 1e-9 && skipped == 0,
        format!("max violation {worst:.2e} over {checks} checks, {skipped} skipped (tol 1e-9)"),
    )
}

fn block_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut top, mut bottom): (f64, f64) = (0.0, 0.0);
    for k in 0..50 {
        let m = rng.random_range(4..30);
        let n = m + rng.random_range(1..30);
        let (z, x, sigma) = green_instance(&mut rng, m, n, k % 2 == 0);
        match build_bundle(z, &x, &sigma) {
            Ok(b) => {
                top = top.max(b.top_left_defect);
                bottom = bottom.max(b.bottom_right_defect);
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        top <= 1e-8 && bottom <= 1e-8,
        format!("max |G11 - z S^1/2 R_M S^1/2| = {top:.2e}, max |G22 - R_N| = {bottom:.2e} (tol 1e-8)"),
    )
}

fn sweep(law: Law, psm: PopulationSpectralMeasure, n_list: Vec<usize>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_list,
        replicates: reps,
        master_seed: 20240601,
        ..ExperimentConfig::new(law, psm)
    }
}

fn trace_rate(law: Law, with_dominance: bool) -> Outcome {
    let config = sweep(law, PopulationSpectralMeasure::identity(), vec![64, 128, 256, 512, 1024], 100);
    let table = match run_experiment(&config) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let fit = match fit_rate(&table, Column::Value) {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let slope_ok = (-1.25..=-0.75).contains(&fit.slope);
    let mut detail = format!("slope {:.3} ± {:.3} (want [-1.25, -0.75])", fit.slope, fit.stderr);
    let mut passed = slope_ok;
    if with_dominance {
        match dominance_check(&table, 0.2) {
            Ok(d) => {
                let worst = d.per_n.iter().map(|p| p.q99_ratio / p.threshold).fold(0.0, f64::max);
                detail.push_str(&format!(
                    "; dominance eps=0.2 {} (max q99/N^eps = {worst:.3}, q99 slope {:.3})",
                    if d.passed { "passes" } else { "fails" },
                    d.slope.unwrap_or(f64::NAN)
                ));
                passed &= d.passed;
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(passed, detail)
}

fn bottom_trace_rate() -> Outcome {
    trace_rate(Law::BottomTrace, true)
}

fn top_trace_rate() -> Outcome {
    trace_rate(Law::TopTrace, false)
}

fn interval_rates() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for law in [Law::MuInterval, Law::NuInterval] {
        let config = sweep(law, two_atoms(), vec![128, 256, 512, 1024], 50);
        let fit = match run_experiment(&config).and_then(|t| fit_rate(&t, Column::Value)) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("{law}: {e}")),
        };
        passed &= (-1.3..=-0.7).contains(&fit.slope);
        parts.push(format!("{law} slope {:.3} ± {:.3}", fit.slope, fit.stderr));
    }
    outcome(passed, format!("{} (want [-1.3, -0.7])", parts.join(", ")))
}

fn entrywise_envelope() -> Outcome {
    let config = sweep(Law::Entrywise, PopulationSpectralMeasure::identity(), vec![512], 100);
    let table = match run_experiment(&config) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let total = table.rows.len();
    let inside = table.rows.iter().filter(|r| r.value <= 10.0 * r.bound).count();
    let frac = inside as f64 / total.max(1) as f64;
    let psi = table.rows.first().map_or(f64::NAN, |r| r.bound);
    outcome(
        total > 0 && frac >= 0.95,
        format!("{inside}/{total} pairs within 10 Psi (Psi = {psi:.4}); fraction {frac:.4} (want >= 0.95)"),
    )
}

fn excess_loss_decay() -> Outcome {
    let config = sweep(Law::ExcessLoss, two_atoms(), vec![128, 256, 512, 1024], 50);
    let losses = match loss_comparison(&config) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let violations = losses.oracle_violations(1e-9);
    let mut table = lpshrink::experiments::ResultTable::default();
    for chunk in losses.rows.chunk_by(|a, b| a.n == b.n && a.replicate == b.replicate) {
        let get = |k: EstimateKind| chunk.iter().find(|r| r.estimator == k).map(|r| r.mv_loss);
        if let (Some(o), Some(d)) = (get(EstimateKind::Oracle), get(EstimateKind::Delta)) {
            table.rows.push(lpshrink::experiments::ResultRow {
                n: chunk[0].n,
                replicate: chunk[0].replicate,
                seed: chunk[0].seed,
                item: 0,
                value: d - o,
                bound: 1.0 / chunk[0].n as f64,
            });
        }
    }
    let fit = match fit_rate(&table, Column::Value) {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let min_excess = table.rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let medians: Vec<String> = fit.per_n.iter().map(|s| format!("{}:{:.3e}", s.n, s.median)).collect();
    let positive = fit.per_n.iter().all(|s| s.median >= -1e-9) && min_excess >= -1e-9;
    let passed = positive && (-1.5..=-0.5).contains(&fit.slope) && violations == 0 && losses.failures.is_empty();
    outcome(
        passed,
        format!(
            "slope {:.3} (want [-1.5, -0.5]); medians {}; min excess {min_excess:.2e}; oracle violations {violations}",
            fit.slope,
            medians.join(" ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "closed-form solver agreement",
            budget: Duration::from_secs(1),
            run: solver_agreement,
        },
        Criterion {
            name: "delta identity case",
            budget: Duration::from_secs(5),
            run: delta_identity,
        },
        Criterion {
            name: "finite-N trace identity",
            budget: Duration::from_secs(5),
            run: trace_identity,
        },
        Criterion {
            name: "resolvent identity suite",
            budget: Duration::from_secs(30),
            run: resolvent_identities,
        },
        Criterion {
            name: "block decomposition",
            budget: Duration::from_secs(30),
            run: block_decomposition,
        },
        Criterion {
            name: "bottom-trace rate",
            budget: Duration::from_secs(300),
            run: bottom_trace_rate,
        },
        Criterion {
            name: "top-trace rate",
            budget: Duration::from_secs(300),
            run: top_trace_rate,
        },
        Criterion {
            name: "interval distance rates",
            budget: Duration::from_secs(600),
            run: interval_rates,
        },
        Criterion {
            name: "entrywise envelope",
            budget: Duration::from_secs(120),
            run: entrywise_envelope,
        },
        Criterion {
            name: "excess-loss decay",
            budget: Duration::from_secs(600),
            run: excess_loss_decay,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let passed = out.passed && in_time;
        if !passed {
            failed += 1;
        }
        println!(
            "{} {}: {} [{:.2}s of {}s{}]",
            if passed { "PASS" } else { "FAIL" },
            c.name,
            out.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
