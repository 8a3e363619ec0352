use nalgebra::DMatrix;

use super::types::{hermitian_defect, hermitian_eigen, Scalar};
use crate::error::{Error, Result};

/// `g(A) = U g(D) U*` for a Hermitian `A = U D U*`. Diagonal input is mapped
/// entrywise without an eigensolve.
pub fn matrix_function<T: Scalar>(a: &DMatrix<T>, g: impl Fn(f64) -> f64) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(Error::domain(format!(
            "matrix function of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.iter().map(|x| x.modulus()).fold(1.0f64, f64::max);
    let defect = hermitian_defect(a);
    if defect > 1e-10 * scale {
        return Err(Error::domain(format!(
            "matrix function of a non-Hermitian matrix (defect {defect:.3e})"
        )));
    }
    let n = a.nrows();
    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == T::zero()));
    if is_diagonal {
        return Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                T::from_real(g(a[(i, i)].real()))
            } else {
                T::zero()
            }
        }));
    }
    let (values, mut vectors) = hermitian_eigen((a + a.adjoint()) * T::from_real(0.5))?;
    let basis = vectors.clone();
    for (c, mut col) in vectors.column_iter_mut().enumerate() {
        col *= T::from_real(g(values[c]));
    }
    Ok(vectors * basis.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&b + b.transpose()) * 0.5
    }

    fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        b.qr().q()
    }

    #[test]
    fn diagonal_sqrt() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        let r = matrix_function(&a, f64::sqrt).unwrap();
        assert_eq!(r, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0])));
    }

    #[test]
    fn identity_maps_to_scaled_identity() {
        let a = DMatrix::<f64>::identity(6, 6);
        let r = matrix_function(&a, |x| 3.0 * x + 0.5).unwrap();
        assert_eq!(r, DMatrix::identity(6, 6) * 3.5);
    }

    #[test]
    fn square_matches_product() {
        let a = random_symmetric(5, 7);
        let r = matrix_function(&a, |x| x * x).unwrap();
        assert!((r - &a * &a).amax() < 1e-10);
    }

    #[test]
    fn hermitian_complex_square() {
        let b = DMatrix::from_fn(4, 4, |i, j| Complex::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let a = &b + b.adjoint();
        let r = matrix_function(&a, |x| x * x).unwrap();
        assert!((r - &a * &a).camax() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(matrix_function(&rect, |x| x), Err(Error::Domain(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(matrix_function(&asym, |x| x), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn frame_invariance(seed in 0u64..1000) {
            let a = random_symmetric(10, seed);
            let q = random_orthogonal(10, seed + 1);
            let g = |x: f64| x.exp();
            let lhs = matrix_function(&(&q * &a * q.transpose()), g).unwrap();
            let rhs = &q * matrix_function(&a, g).unwrap() * q.transpose();
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }
    }
}
