// Draw a sample covariance matrix and compare its spectrum with the
// Marchenko-Pastur law through the Kolmogorov distance.

use lpshrink::measures::{empirical_measures, kolmogorov_distance, DeterministicMeasure, Normalization, Weight};
use lpshrink::mp_law::uniform_grid;
use lpshrink::sampling::{sample_cov, sample_data};
use lpshrink::{ModelConfig, PopulationSpectralMeasure};

/// Kolmogorov distance between the sample ESD and the limiting law at
/// `N = 512`, `φ = 1/2`, `Σ = I`.
pub fn run() -> lpshrink::Result<f64> {
    let model = ModelConfig::with_ratio(0.5, 512)?;
    let psm = PopulationSpectralMeasure::identity();
    let sigma = psm.diagonal_covariance(model.m)?;
    let x = sample_data::<f64>(&model, 7)?;
    let s = sample_cov(&sigma, &x)?;
    let eig = s.eigensystem();
    let lam = eig.eigenvalues();
    println!(
        "M = {}, N = {}, trace {:.4}, eigenvalues in [{:.4}, {:.4}]",
        model.m,
        model.n,
        s.trace(),
        lam[0],
        lam[lam.len() - 1]
    );

    let (mu, _) = empirical_measures(eig, &sigma)?;
    let law = DeterministicMeasure::from_law(&psm, model.phi(), Normalization::EsdOfS)?;
    let mut points = uniform_grid(0.0, 3.5, 400);
    points.extend_from_slice(lam);
    let d = kolmogorov_distance(&mu, &law, Weight::Unit, &points)?;
    println!("Kolmogorov distance to the limiting law: {d:.4}");
    Ok(d)
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
