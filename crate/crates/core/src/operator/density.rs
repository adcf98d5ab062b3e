//! Density operators, fidelity and von Neumann entropy.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::matrix::Matrix;
use super::spectral::{self, entropy_of_spectrum, noise_floor, HERMITIAN_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Trace must equal one within this tolerance.
pub const TRACE_TOL: f64 = 1e-10;

/// A unit-trace positive semidefinite Hermitian matrix.
///
/// The spectrum and square root are computed at most once. States built as
/// Kronecker products remember their factors, so both are derived from the
/// (much smaller) factors instead of a full eigendecomposition.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: Matrix,
    factors: Option<(Arc<DensityOperator>, Arc<DensityOperator>)>,
    spectrum: OnceLock<Vec<f64>>,
    sqrt: OnceLock<Matrix>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and eigenvalues
    /// ≥ −1e-10.
    pub fn new(matrix: Matrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let values = spectral::eigenvalues(&matrix)?;
        if let Some(&min) = values.first() {
            if min < -PSD_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        let rho = Self::new_unchecked(matrix);
        let _ = rho.spectrum.set(values);
        Ok(rho)
    }

    /// Wraps a matrix that is a valid state by construction (convex
    /// combinations and products of valid states).
    pub(crate) fn new_unchecked(matrix: Matrix) -> Self {
        DensityOperator {
            matrix,
            factors: None,
            spectrum: OnceLock::new(),
            sqrt: OnceLock::new(),
        }
    }

    pub fn from_diagonal(probabilities: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::diagonal(probabilities))
    }

    /// |ψ⟩⟨ψ| for a unit vector ψ.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("state vector has squared norm {norm}")));
        }
        Self::new(Matrix::outer(amplitudes))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(Matrix::diagonal(vec![1.0 / dim as f64; dim]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        self.matrix.is_diagonal()
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Result<&[f64]> {
        if let Some(v) = self.spectrum.get() {
            return Ok(v);
        }
        let values = match &self.factors {
            Some((a, b)) => {
                let (sa, sb) = (a.spectrum()?, b.spectrum()?);
                let mut v: Vec<f64> = sa.iter().flat_map(|x| sb.iter().map(move |y| x * y)).collect();
                v.sort_by(f64::total_cmp);
                v
            }
            None => spectral::eigenvalues(&self.matrix)?,
        };
        Ok(self.spectrum.get_or_init(|| values))
    }

    /// Positive square root √ρ.
    pub fn sqrt(&self) -> Result<&Matrix> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let root = match &self.factors {
            Some((a, b)) => a.sqrt()?.kron(b.sqrt()?),
            None => {
                let (root, values) = spectral::psd_sqrt_and_spectrum(&self.matrix)?;
                let _ = self.spectrum.set(values);
                root
            }
        };
        Ok(self.sqrt.get_or_init(|| root))
    }

    /// Whether √ρ is available without a fresh eigendecomposition.
    fn sqrt_is_cheap(&self) -> bool {
        self.sqrt.get().is_some() || self.factors.is_some() || self.is_diagonal()
    }

    /// ρ ⊗ σ.
    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        Self::new_unchecked(self.matrix.kron(&other.matrix))
    }

    /// ρ ⊗ σ for shared factors; spectrum and square root of the product
    /// are later derived from the factors.
    pub fn kron_shared(a: &Arc<DensityOperator>, b: &Arc<DensityOperator>) -> DensityOperator {
        DensityOperator {
            matrix: a.matrix.kron(&b.matrix),
            factors: Some((Arc::clone(a), Arc::clone(b))),
            spectrum: OnceLock::new(),
            sqrt: OnceLock::new(),
        }
    }

    /// Σ_k p_k ρ_k for probabilities p_k summing to one.
    pub fn mixture(terms: &[(f64, &DensityOperator)]) -> Result<DensityOperator> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut acc = first.1.matrix.scaled(first.0);
        for (p, rho) in rest {
            acc = acc.add_scaled(&rho.matrix, *p)?;
        }
        Ok(Self::new_unchecked(acc))
    }

    /// Frobenius distance below `tol`, checked with early exit.
    pub fn close_to(&self, other: &DensityOperator, tol: f64) -> bool {
        self.matrix.frobenius_close(&other.matrix, tol)
    }
}

/// von Neumann entropy −Tr{ρ log₂ ρ} in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(entropy_of_spectrum(rho.spectrum()?))
}

/// Root fidelity √F(ρ, σ) = ‖√ρ √σ‖₁.
///
/// Computed as Tr √(√ρ σ √ρ), taking the square root of whichever state
/// has one at hand. Commuting diagonal states reduce to the Bhattacharyya
/// overlap Σ √(p q).
pub fn root_fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if let (Matrix::Diagonal(p), Matrix::Diagonal(q)) = (a.matrix(), b.matrix()) {
        return Ok(p.iter().zip(q).map(|(x, y)| (x.max(0.0) * y.max(0.0)).sqrt()).sum());
    }
    let (root_side, other) = if !a.sqrt_is_cheap() && b.sqrt_is_cheap() { (b, a) } else { (a, b) };
    let s = root_side.sqrt()?;
    let m = s.matmul(other.matrix())?.matmul(s)?;
    let values = spectral::eigenvalues(&m)?;
    let floor = noise_floor(&values);
    Ok(values.iter().filter(|&&x| x > floor).map(|x| x.sqrt()).sum())
}

/// Fidelity F(ρ, σ) = ‖√ρ √σ‖₁².
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    Ok(root_fidelity(a, b)?.powi(2))
}
