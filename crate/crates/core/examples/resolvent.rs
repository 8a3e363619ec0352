// The linearized Green function: block structure, resolvent identities, its
// deterministic approximation and trace residuals.

use lpshrink::mp_law::{psi, solve_m, DEFAULT_TOL};
use lpshrink::resolvent_lab::{
    build_bundle, build_pi, entrywise_residual, green_identity_check, standard_test_vectors, trace_residual_bottom,
    trace_residual_top,
};
use lpshrink::sampling::sample_data;
use lpshrink::{ModelConfig, PopulationSpectralMeasure, SpectralPoint};

/// `(identity violation, entrywise residual / Psi)` at `N = 200`.
pub fn run() -> lpshrink::Result<(f64, f64)> {
    let model = ModelConfig::with_ratio(0.5, 200)?;
    let psm = PopulationSpectralMeasure::identity();
    let sigma = psm.diagonal_covariance(model.m)?;
    let z = SpectralPoint::new(1.0, 1.0);
    let x = sample_data::<f64>(&model, 1)?;

    let bundle = build_bundle(z, &x, &sigma)?;
    println!(
        "block defects {:.1e} / {:.1e}, condition {:.1}",
        bundle.top_left_defect, bundle.bottom_right_defect, bundle.condition
    );
    let ids = green_identity_check(&bundle, 50)?;
    println!("resolvent identities: max violation {:.1e} over {} checks", ids.max_violation, ids.checks);

    let m = solve_m(z, &sigma.empirical_psm(), model.phi(), DEFAULT_TOL)?.m;
    println!(
        "|N^-1 Tr R_N - m| = {:.2e}, top-trace residual {:.2e}, 1/(N eta) = {:.2e}",
        trace_residual_bottom(&bundle, m).norm(),
        trace_residual_top(&bundle, m, &sigma).norm(),
        1.0 / model.n as f64
    );
    let pi = build_pi(z, m, &sigma, model.n)?;
    let pairs = standard_test_vectors(model.m, model.n, 4);
    let worst = entrywise_residual(&bundle, &pi, &pairs)?;
    let bound = psi(z, m, model.n)?.psi;
    println!("max |<v, (G - Pi) w>| = {worst:.3e}, Psi = {bound:.3e}");
    Ok((ids.max_violation, worst / bound))
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
