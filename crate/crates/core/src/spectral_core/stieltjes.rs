use nalgebra::Complex;

use super::types::{AtomicMeasure, Complex64, SpectralPoint};
use crate::error::{Error, Result};

/// `∫ dσ(x) / (x − z)` for an atomic measure.
pub fn stieltjes_transform(measure: &AtomicMeasure, z: SpectralPoint) -> Result<Complex64> {
    let zc = z.z();
    let mut acc = Complex::new(0.0, 0.0);
    for &(x, w) in measure.atoms() {
        if z.eta == 0.0 && x == z.e && w > 0.0 {
            return Err(Error::Pole(zc));
        }
        acc += w / (Complex::new(x, 0.0) - zc);
    }
    Ok(acc)
}
