// Boundary values of m on the real axis: limiting densities, Hilbert
// transforms, support edges and the point mass at zero.

use lpshrink::mp_law::{boundary_profile, support_edges, uniform_grid, DEFAULT_ETA_SCHEDULE};
use lpshrink::{PopulationSpectralMeasure, PsmAtom};

/// Support edges and the Riemann-sum mass of `w_S` for a two-atom spectrum.
pub fn run() -> lpshrink::Result<(Vec<[f64; 2]>, f64)> {
    let psm = PopulationSpectralMeasure::new(vec![
        PsmAtom { tau: 1.0, weight: 0.5 },
        PsmAtom { tau: 3.0, weight: 0.5 },
    ])?;
    let phi = 0.5;
    let grid = uniform_grid(0.01, 10.0, 1000);
    let profile = boundary_profile(&grid, &psm, phi, &DEFAULT_ETA_SCHEDULE)?;
    let step = grid[1] - grid[0];
    let mass: f64 = profile.w_s.iter().sum::<f64>() * step;

    println!("{:>8} {:>12} {:>12} {:>12}", "E", "w", "hilbert_w", "w_S");
    for k in (0..profile.len()).step_by(100) {
        println!(
            "{:8.3} {:12.6} {:12.6} {:12.6}",
            grid[k], profile.w[k], profile.hilbert_w[k], profile.w_s[k]
        );
    }
    let edges = support_edges(&psm, phi, 2000)?;
    println!("edges {edges:?}, atom at zero {:.3}, mass of w_S {mass:.4}", profile.atom_at_zero);
    Ok((edges, mass))
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
