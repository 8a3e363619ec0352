// Interval distances between the empirical measures mu, nu of one sample and
// their deterministic counterparts.

use lpshrink::measures::{
    empirical_measures, interval_sup_distance, DeterministicMeasure, Interval, Normalization, Weight,
};
use lpshrink::sampling::{sample_cov, sample_data};
use lpshrink::{ModelConfig, PopulationSpectralMeasure, PsmAtom};

/// `(mu distance, nu distance)` at `N = 512`.
pub fn run() -> lpshrink::Result<(f64, f64)> {
    let psm = PopulationSpectralMeasure::new(vec![
        PsmAtom { tau: 1.0, weight: 0.5 },
        PsmAtom { tau: 3.0, weight: 0.5 },
    ])?;
    let model = ModelConfig::with_ratio(0.5, 512)?;
    let sigma = psm.diagonal_covariance(model.m)?;
    let eig = sample_cov(&sigma, &sample_data::<f64>(&model, 5)?)?.into_eigensystem();
    let (mu, nu) = empirical_measures(&eig, &sigma)?;
    let law = DeterministicMeasure::from_law(&psm, model.phi(), Normalization::EsdOfS)?;

    let bulk = Interval::new(1.0, 4.0)?;
    println!(
        "mass of [1, 4): empirical {:.4}, limit {:.4}",
        mu.mass_in(bulk.a, bulk.b),
        law.mass(bulk, Weight::Unit)?
    );
    let d_mu = interval_sup_distance(&mu, &law, Weight::Unit, 200)?;
    let d_nu = interval_sup_distance(&nu, &law, Weight::Delta, 200)?;
    println!("sup-interval distance: mu {d_mu:.4}, nu {d_nu:.4}, 1/N = {:.4}", 1.0 / model.n as f64);
    Ok((d_mu, d_nu))
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
