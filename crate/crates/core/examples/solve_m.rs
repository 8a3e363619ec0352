// Solve the self-consistent equation for m(z) and compare with the
// closed-form root available when the population spectrum is a point mass.

use lpshrink::mp_law::{psi, solve_m, DEFAULT_TOL};
use lpshrink::{Complex64, PopulationSpectralMeasure, PsmAtom, SpectralPoint};

/// Largest distance to the quadratic root over a few points, plus `m` for a
/// two-atom spectrum at `z = 1 + i`.
pub fn run() -> lpshrink::Result<(f64, Complex64)> {
    let phi = 0.5;
    let identity = PopulationSpectralMeasure::identity();
    let mut worst: f64 = 0.0;
    for (e, eta) in [(0.0, 1.0), (1.0, 0.01), (3.0, 0.5), (-1.0, 2.0)] {
        let z = SpectralPoint::new(e, eta);
        let sol = solve_m(z, &identity, phi, DEFAULT_TOL)?;
        // z m² + (z + 1 − φ) m + 1 = 0
        let zc = z.z();
        let b = zc + 1.0 - phi;
        let d = (b * b - 4.0 * zc).sqrt();
        let roots = [(-b + d) / (2.0 * zc), (-b - d) / (2.0 * zc)];
        let exact = if roots[0].im > roots[1].im { roots[0] } else { roots[1] };
        println!("z = {z:>10}  m = {:.12}  |m - exact| = {:.1e}", sol.m, (sol.m - exact).norm());
        worst = worst.max((sol.m - exact).norm());
    }

    let two = PopulationSpectralMeasure::new(vec![
        PsmAtom { tau: 1.0, weight: 0.5 },
        PsmAtom { tau: 3.0, weight: 0.5 },
    ])?;
    let z = SpectralPoint::new(1.0, 1.0);
    let sol = solve_m(z, &two, phi, DEFAULT_TOL)?;
    let bound = psi(z, sol.m, 512)?;
    println!(
        "two atoms: m(1+1i) = {:.12} after {} iterations, Psi(N=512) = {:.4}",
        sol.m, sol.iterations, bound.psi
    );
    Ok((worst, sol.m))
}

fn main() -> lpshrink::Result<()> {
    run().map(|_| ())
}
