//! Spectral calculus on Hermitian matrices: eigendecomposition, square
//! roots, trace norm, entropies and eigenspace projectors.

use faer::{Mat, Side};
use num_complex::Complex64;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Entries may deviate from Hermitian symmetry by at most this much.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues down to `-PSD_TOL` are accepted as round-off and clamped.
pub const PSD_TOL: f64 = 1e-10;
/// Default zero tolerance for eigenspace projectors.
pub const ZERO_TOL: f64 = 1e-10;
/// Eigenvalues at or below this contribute nothing to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

/// A matrix known to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Clone, Debug)]
pub struct HermitianMatrix(Matrix);

impl HermitianMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(HermitianMatrix(m))
    }

    pub(crate) fn new_unchecked(m: Matrix) -> Self {
        HermitianMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn neg(&self) -> Self {
        HermitianMatrix(self.0.scaled(-1.0))
    }
}

/// An orthogonal projector: Hermitian and idempotent.
#[derive(Clone, Debug)]
pub struct ProjectorMatrix(Matrix);

impl ProjectorMatrix {
    /// Validates `P = P†` and `‖P·P − P‖_F ≤ 1e-9`.
    pub fn new(m: Matrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::NotHermitian { defect });
        }
        let idem = m.matmul(&m)?.frobenius_distance(&m)?;
        if idem > 1e-9 {
            return Err(Error::InvalidState(format!("not idempotent: ‖P²−P‖ = {idem:e}")));
        }
        Ok(ProjectorMatrix(m))
    }

    pub(crate) fn new_unchecked(m: Matrix) -> Self {
        ProjectorMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        ProjectorMatrix(Matrix::identity(dim))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `I − P`.
    pub fn complement(&self) -> Self {
        let dim = self.dim();
        ProjectorMatrix(Matrix::identity(dim).sub(&self.0).expect("same dimension"))
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<Complex64>,
}

impl Eigen {
    /// ‖m − VΛV†‖_F.
    pub fn reconstruction_error(&self, m: &Matrix) -> f64 {
        let rebuilt = rebuild(&self.vectors, &self.values, |x| x);
        Matrix::Dense(rebuilt).frobenius_distance(m).unwrap_or(f64::INFINITY)
    }
}

/// V·diag(f(λ))·V†, skipping columns where f vanishes.
fn rebuild(vectors: &Mat<Complex64>, values: &[f64], f: impl Fn(f64) -> f64) -> Mat<Complex64> {
    let n = vectors.nrows();
    let kept: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .map(|(k, &x)| (k, f(x)))
        .filter(|&(_, y)| y != 0.0)
        .collect();
    if kept.is_empty() {
        return Mat::zeros(n, n);
    }
    let scaled = Mat::from_fn(n, kept.len(), |i, c| vectors[(i, kept[c].0)] * kept[c].1);
    let basis = Mat::from_fn(n, kept.len(), |i, c| vectors[(i, kept[c].0)]);
    &scaled * basis.adjoint()
}

pub(crate) fn dense_eigh(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailed)?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Ascending eigenvalues of a Hermitian matrix (no vectors).
pub(crate) fn eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    match m {
        Matrix::Diagonal(d) => {
            let mut v = d.clone();
            v.sort_by(f64::total_cmp);
            Ok(v)
        }
        Matrix::Dense(a) => {
            let vals = a.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailed)?;
            Ok(vals.into_iter().collect())
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Eigen> {
    match h.matrix() {
        Matrix::Diagonal(d) => {
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
            let n = d.len();
            let vectors = Mat::from_fn(n, n, |i, c| {
                if i == order[c] {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            Ok(Eigen {
                values: order.iter().map(|&k| d[k]).collect(),
                vectors,
            })
        }
        Matrix::Dense(a) => {
            let (values, vectors) = dense_eigh(a)?;
            Ok(Eigen { values, vectors })
        }
    }
}

/// Magnitude below which computed eigenvalues of a positive operator are
/// indistinguishable from zero.
pub(crate) fn noise_floor(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    8.0 * values.len() as f64 * f64::EPSILON * scale
}

/// Square root of a positive semidefinite matrix, clamping round-off.
/// Callers guarantee positivity.
pub(crate) fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    Ok(psd_sqrt_and_spectrum(m)?.0)
}

/// [`psd_sqrt`] together with the ascending spectrum it was built from.
pub(crate) fn psd_sqrt_and_spectrum(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    match m {
        Matrix::Diagonal(d) => {
            let root = Matrix::Diagonal(d.iter().map(|x| x.max(0.0).sqrt()).collect());
            let mut values = d.clone();
            values.sort_by(f64::total_cmp);
            Ok((root, values))
        }
        Matrix::Dense(a) => {
            let (values, vectors) = dense_eigh(a)?;
            let floor = noise_floor(&values);
            let root = Matrix::Dense(rebuild(&vectors, &values, |x| {
                if x > floor {
                    x.sqrt()
                } else {
                    0.0
                }
            }));
            Ok((root, values))
        }
    }
}

/// Positive square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn matrix_sqrt(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let min = eigenvalues(h.matrix())?.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(HermitianMatrix::new_unchecked(psd_sqrt(h.matrix())?))
}

/// Nuclear norm Tr{√(A†A)}: the sum of singular values.
pub fn trace_norm(m: &Matrix) -> Result<f64> {
    match m {
        Matrix::Diagonal(d) => Ok(d.iter().map(|x| x.abs()).sum()),
        Matrix::Dense(a) => singular_value_sum(a),
    }
}

/// Σ σ_k(A) as half the absolute eigenvalue sum of [[0, A], [A†, 0]].
///
/// The Hermitian route stays accurate when singular values cluster
/// heavily, which the SVD path of the backing library does not.
pub fn singular_value_sum(a: &Mat<Complex64>) -> Result<f64> {
    let (r, c) = (a.nrows(), a.ncols());
    let block = Mat::<Complex64>::from_fn(r + c, r + c, |i, j| match (i < r, j < r) {
        (true, false) => a[(i, j - r)],
        (false, true) => a[(j, i - r)].conj(),
        _ => Complex64::new(0.0, 0.0),
    });
    let values = block.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailed)?;
    Ok(values.iter().map(|x| x.abs()).sum::<f64>() / 2.0)
}

/// −Σ λ log₂ λ over a spectrum, ignoring eigenvalues ≤ 1e-12.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    -values
        .iter()
        .filter(|&&x| x > ENTROPY_CUTOFF)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Binary entropy H₂(x) in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            what: "binary entropy argument",
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(h2(x))
}

pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

fn eigenspace_projector(h: &HermitianMatrix, keep: impl Fn(f64) -> bool) -> Result<ProjectorMatrix> {
    match h.matrix() {
        Matrix::Diagonal(d) => Ok(ProjectorMatrix::new_unchecked(Matrix::Diagonal(
            d.iter().map(|&x| if keep(x) { 1.0 } else { 0.0 }).collect(),
        ))),
        Matrix::Dense(a) => {
            let (values, vectors) = dense_eigh(a)?;
            let n = values.len();
            let kept = values.iter().filter(|&&x| keep(x)).count();
            if kept == n {
                return Ok(ProjectorMatrix::identity(n));
            }
            if kept == 0 {
                return Ok(ProjectorMatrix::new_unchecked(Matrix::zeros(n)));
            }
            let p = rebuild(&vectors, &values, |x| if keep(x) { 1.0 } else { 0.0 });
            Ok(ProjectorMatrix::new_unchecked(Matrix::Dense(p)))
        }
    }
}

/// {B ≥ 0}: projector onto eigenvectors with eigenvalue ≥ −`zero_tolerance`.
/// The kernel belongs to this projector.
pub fn positive_eigenspace_projector(h: &HermitianMatrix, zero_tolerance: f64) -> Result<ProjectorMatrix> {
    eigenspace_projector(h, |x| x >= -zero_tolerance)
}

/// {B > 0}: projector onto eigenvectors with eigenvalue > `zero_tolerance`.
/// `strictly_positive(−B)` is the `{B < 0}` complement of
/// [`positive_eigenspace_projector`].
pub fn strictly_positive_eigenspace_projector(
    h: &HermitianMatrix,
    zero_tolerance: f64,
) -> Result<ProjectorMatrix> {
    eigenspace_projector(h, |x| x > zero_tolerance)
}

/// Kronecker product of two Hermitian matrices.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kron(b)
}
