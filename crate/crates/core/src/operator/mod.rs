//! Dense complex Hermitian linear algebra for density operators.

mod density;
mod matrix;
mod spectral;

pub use density::{fidelity, root_fidelity, von_neumann_entropy, DensityOperator, TRACE_TOL};
pub use matrix::{kron_vec, Matrix};
pub use spectral::{
    binary_entropy, eig_hermitian, entropy_of_spectrum, kron, matrix_sqrt,
    positive_eigenspace_projector, singular_value_sum, strictly_positive_eigenspace_projector, trace_norm, Eigen,
    HermitianMatrix, ProjectorMatrix, ENTROPY_CUTOFF, HERMITIAN_TOL, PSD_TOL, ZERO_TOL,
};
pub(crate) use spectral::h2;

pub use num_complex::Complex64;
