//! Thin wrapper over double-exponential quadrature, which tolerates the
//! square-root behaviour of spectral densities at their support edges.

pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::integrate(f, a, b, tol).integral
}
