// Mean minimum-variance losses of the four estimators across replicates.

use lpshrink::experiments::{loss_comparison, ExperimentConfig, Law, ORACLE_TOL};
use lpshrink::shrinkage::EstimateKind;
use lpshrink::{PopulationSpectralMeasure, PsmAtom};

const KINDS: [EstimateKind; 4] = [
    EstimateKind::Oracle,
    EstimateKind::Delta,
    EstimateKind::Sample,
    EstimateKind::Baseline,
];

/// Mean losses at the largest `N`, in the order of `KINDS`.
pub fn run() -> lpshrink::Result<Vec<f64>> {
    let psm = PopulationSpectralMeasure::new(vec![
        PsmAtom { tau: 1.0, weight: 0.5 },
        PsmAtom { tau: 3.0, weight: 0.5 },
    ])?;
    let config = ExperimentConfig {
        n_list: vec![100, 200],
        replicates: 10,
        ..ExperimentConfig::new(Law::ExcessLoss, psm)
    };
    let table = loss_comparison(&config)?;
    for &n in &config.n_list {
        let row: Vec<String> = KINDS.iter().map(|k| format!("{} {:.5}", k.name(), table.mean(n, *k))).collect();
        println!("N = {n}: {}", row.join("  "));
    }
    println!("oracle beaten in {} replicates", table.oracle_violations(ORACLE_TOL));
    Ok(KINDS.iter().map(|k| table.mean(200, *k)).collect())
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
