//! Domain types shared by every other module: population and sample
//! spectra, matrix functions, label-indexed matrices, Stieltjes transforms.

mod indexed;
mod matfun;
mod stieltjes;
mod types;

pub use indexed::{indexed_matmul, IndexedMatrix};
pub use matfun::matrix_function;
pub use stieltjes::stieltjes_transform;
pub use types::{
    AtomicMeasure, Complex64, Field, ModelConfig, PopulationCovariance, PopulationSpectralMeasure,
    PsmAtom, SampleEigensystem, Scalar, SpectralPoint,
};
pub(crate) use types::hermitian_eigen;
