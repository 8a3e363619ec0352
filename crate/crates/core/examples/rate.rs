// A small residual sweep over N with a log-log rate fit and a domination
// check, persisted as a run directory.

use lpshrink::experiments::{
    dominance_check, fit_rate, persist_run, run_experiment, summarize_run, Column, ExperimentConfig, Law, Manifest,
};
use lpshrink::PopulationSpectralMeasure;

/// Fitted slope of the bottom-trace residual.
pub fn run() -> lpshrink::Result<f64> {
    let config = ExperimentConfig {
        n_list: vec![64, 128, 256, 512],
        replicates: 30,
        master_seed: 1,
        ..ExperimentConfig::new(Law::BottomTrace, PopulationSpectralMeasure::identity())
    };
    let table = run_experiment(&config)?;
    let fit = fit_rate(&table, Column::Value)?;
    for s in &fit.per_n {
        println!("N = {:5}: median {:.3e}, q90 {:.3e}, q99 {:.3e}", s.n, s.median, s.q90, s.q99);
    }
    let dom = dominance_check(&table, 0.2)?;
    println!("slope {:.3} ± {:.3}, dominance at eps = 0.2: {}", fit.slope, fit.stderr, dom.passed);

    let dir = std::env::temp_dir().join("lpshrink-rate-example");
    let summary = summarize_run(config.law, &table, 0.2);
    persist_run(&config, &table, &summary, &Manifest::current(), &dir)?;
    println!("run written to {}", dir.display());
    Ok(fit.slope)
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
