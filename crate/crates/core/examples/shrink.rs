// Shrink sample eigenvalues with delta and compare minimum-variance losses of
// the oracle, the shrunk, the sample and the scalar estimators.

use lpshrink::mp_law::support_profile;
use lpshrink::sampling::{sample_cov, sample_data};
use lpshrink::shrinkage::{baseline_estimates, delta_shrink, mv_loss, oracle_shrink};
use lpshrink::{ModelConfig, PopulationSpectralMeasure, PsmAtom};

/// `(oracle, delta, sample, scalar)` losses on one draw.
pub fn run() -> lpshrink::Result<[f64; 4]> {
    let psm = PopulationSpectralMeasure::new(vec![
        PsmAtom { tau: 1.0, weight: 0.5 },
        PsmAtom { tau: 3.0, weight: 0.5 },
    ])?;
    let model = ModelConfig::with_ratio(0.5, 400)?;
    let sigma = psm.diagonal_covariance(model.m)?;
    let eig = sample_cov(&sigma, &sample_data::<f64>(&model, 3)?)?.into_eigensystem();
    let profile = support_profile(&psm, model.phi(), 400)?;

    let oracle = oracle_shrink(eig.vectors(), &sigma)?;
    let shrunk = delta_shrink(&eig, &profile, model.phi())?;
    let [sample, scalar] = <[_; 2]>::try_from(baseline_estimates(&eig, None)).expect("two baselines");
    println!("{} eigenvalues outside the support were clamped", shrunk.clamped);

    let mut out = [0.0; 4];
    for (k, est) in [&oracle, &shrunk, &sample, &scalar].into_iter().enumerate() {
        out[k] = mv_loss(est, &sigma, model.n)?.mv_loss;
        println!("{:>8}: MV loss {:.6}", est.kind().name(), out[k]);
    }
    for k in (0..model.m).step_by(model.m / 5) {
        println!(
            "lambda {:.4} -> delta {:.4} (oracle {:.4})",
            eig.eigenvalues()[k],
            shrunk.dhat()[k],
            oracle.dhat()[k]
        );
    }
    Ok(out)
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
