//! Square complex matrices with a real-diagonal fast path.
//!
//! Classical channels embed as commuting diagonal states, and every
//! operation in the synthesis keeps them diagonal (Kronecker products,
//! convex combinations, projectors). Storing those as a plain vector lets
//! BEC/BSC embeddings reach output dimensions in the thousands.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, either diagonal with real entries or dense.
#[derive(Clone, Debug)]
pub enum Matrix {
    Diagonal(Vec<f64>),
    Dense(Mat<Complex64>),
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Matrix {
    pub fn identity(dim: usize) -> Self {
        Matrix::Diagonal(vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Matrix::Diagonal(vec![0.0; dim])
    }

    pub fn diagonal(entries: Vec<f64>) -> Self {
        Matrix::Diagonal(entries)
    }

    /// Builds a dense matrix from row-major rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        Ok(Matrix::Dense(Mat::from_fn(n, n, |i, j| rows[i][j])))
    }

    /// Builds a dense matrix from real row-major rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Matrix::Dense(Mat::from_fn(dim, dim, f))
    }

    /// The rank-one operator |v⟩⟨v|.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Matrix::Dense(Mat::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        match self {
            Matrix::Diagonal(d) => d.len(),
            Matrix::Dense(m) => m.nrows(),
        }
    }

    /// Number of stored scalars: `dim` for diagonal, `dim²` for dense.
    pub fn element_count(&self) -> usize {
        match self {
            Matrix::Diagonal(d) => d.len(),
            Matrix::Dense(m) => m.nrows() * m.ncols(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Matrix::Diagonal(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Matrix::Diagonal(d) => {
                if i == j {
                    Complex64::new(d[i], 0.0)
                } else {
                    ZERO
                }
            }
            Matrix::Dense(m) => m[(i, j)],
        }
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        match self {
            Matrix::Diagonal(d) => {
                let n = d.len();
                Mat::from_fn(n, n, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { ZERO })
            }
            Matrix::Dense(m) => m.clone(),
        }
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Matrix::Diagonal(d) => Matrix::Diagonal(d.iter().map(|x| x * s).collect()),
            Matrix::Dense(m) => {
                Matrix::Dense(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s))
            }
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Result<Self> {
        check_dims(self, other)?;
        Ok(match (self, other) {
            (Matrix::Diagonal(a), Matrix::Diagonal(b)) => {
                Matrix::Diagonal(a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            }
            (Matrix::Dense(a), Matrix::Dense(b)) => Matrix::Dense(Mat::from_fn(
                a.nrows(),
                a.ncols(),
                |i, j| a[(i, j)] + b[(i, j)] * s,
            )),
            (Matrix::Dense(a), Matrix::Diagonal(b)) => {
                let mut out = a.clone();
                for (i, y) in b.iter().enumerate() {
                    out[(i, i)] += *y * s;
                }
                Matrix::Dense(out)
            }
            (Matrix::Diagonal(a), Matrix::Dense(b)) => {
                let mut out = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * s);
                for (i, x) in a.iter().enumerate() {
                    out[(i, i)] += *x;
                }
                Matrix::Dense(out)
            }
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(match (self, other) {
            (Matrix::Diagonal(a), Matrix::Diagonal(b)) => {
                Matrix::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (Matrix::Diagonal(a), Matrix::Dense(b)) => {
                Matrix::Dense(Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * a[i]))
            }
            (Matrix::Dense(a), Matrix::Diagonal(b)) => {
                Matrix::Dense(Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * b[j]))
            }
            (Matrix::Dense(a), Matrix::Dense(b)) => Matrix::Dense(a * b),
        })
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Matrix::Diagonal(d) => Matrix::Diagonal(d.clone()),
            Matrix::Dense(m) => Matrix::Dense(m.adjoint().to_owned()),
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self {
            Matrix::Diagonal(d) => Complex64::new(d.iter().sum(), 0.0),
            Matrix::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).sum(),
        }
    }

    /// Tr{self · other} in O(dim²) without forming the product.
    pub fn trace_of_product(&self, other: &Matrix) -> Result<Complex64> {
        check_dims(self, other)?;
        Ok(match (self, other) {
            (Matrix::Diagonal(a), Matrix::Diagonal(b)) => {
                Complex64::new(a.iter().zip(b).map(|(x, y)| x * y).sum(), 0.0)
            }
            (Matrix::Diagonal(a), Matrix::Dense(b)) | (Matrix::Dense(b), Matrix::Diagonal(a)) => {
                a.iter().enumerate().map(|(i, x)| b[(i, i)] * *x).sum()
            }
            (Matrix::Dense(a), Matrix::Dense(b)) => {
                let n = a.nrows();
                let mut acc = ZERO;
                for j in 0..n {
                    for i in 0..n {
                        acc += a[(i, j)] * b[(j, i)];
                    }
                }
                acc
            }
        })
    }

    /// `p · self · p` for a (Hermitian) projector `p`.
    pub fn sandwich(&self, p: &Matrix) -> Result<Self> {
        p.matmul(self)?.matmul(p)
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Matrix::Diagonal(d) => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Matrix::Dense(m) => m.norm_l2(),
        }
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    /// Whether `‖self − other‖_F < tol`, bailing out at the first entries
    /// that already exceed it.
    pub fn frobenius_close(&self, other: &Matrix, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let budget = tol * tol;
        match (self, other) {
            (Matrix::Diagonal(a), Matrix::Diagonal(b)) => {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    acc += (x - y) * (x - y);
                    if acc >= budget {
                        return false;
                    }
                }
                true
            }
            _ => {
                let n = self.dim();
                let mut acc = 0.0;
                for j in 0..n {
                    for i in 0..n {
                        acc += (self.entry(i, j) - other.entry(i, j)).norm_sqr();
                        if acc >= budget {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// max |m_ij − conj(m_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        match self {
            Matrix::Diagonal(_) => 0.0,
            Matrix::Dense(m) => {
                let n = m.nrows();
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Matrix) -> Self {
        let m = other.dim();
        match (self, other) {
            (Matrix::Diagonal(a), Matrix::Diagonal(b)) => Matrix::Diagonal(
                a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect(),
            ),
            _ => {
                let n = self.dim() * m;
                Matrix::Dense(Mat::from_fn(n, n, |r, c| {
                    self.entry(r / m, c / m) * other.entry(r % m, c % m)
                }))
            }
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Matrix::Diagonal(d) => d.iter().zip(v).map(|(x, y)| y * *x).collect(),
            Matrix::Dense(m) => {
                let n = m.nrows();
                let mut out = vec![ZERO; n];
                for (j, vj) in v.iter().enumerate() {
                    if *vj == ZERO {
                        continue;
                    }
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += m[(i, j)] * vj;
                    }
                }
                out
            }
        }
    }
}

fn check_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identities_and_diagonals() {
        let i4 = Matrix::identity(2).kron(&Matrix::identity(2));
        assert!(i4.frobenius_close(&Matrix::identity(4), 1e-15));
        let d = Matrix::diagonal(vec![1.0, 0.0]).kron(&Matrix::diagonal(vec![0.0, 1.0]));
        match d {
            Matrix::Diagonal(v) => assert_eq!(v, vec![0.0, 1.0, 0.0, 0.0]),
            _ => panic!("diagonal kron should stay diagonal"),
        }
    }

    #[test]
    fn mixed_product_rule() {
        let a = Matrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 2.0)], vec![c(3.0, -1.0), c(0.5, 0.0)]])
            .unwrap();
        let b = Matrix::from_rows(&[vec![c(0.0, 1.0), c(1.0, 0.0)], vec![c(2.0, 0.0), c(-1.0, 1.0)]])
            .unwrap();
        let cm = Matrix::diagonal(vec![2.0, -1.0]);
        let d = Matrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let lhs = a.kron(&cm).matmul(&b.kron(&d)).unwrap();
        let rhs = a.matmul(&b).unwrap().kron(&cm.matmul(&d).unwrap());
        assert!(lhs.frobenius_distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn trace_of_product_matches_matmul() {
        let a = Matrix::from_rows(&[vec![c(1.0, 0.5), c(0.0, 2.0)], vec![c(3.0, -1.0), c(0.5, 0.0)]])
            .unwrap();
        let b = Matrix::from_rows(&[vec![c(0.0, 1.0), c(1.0, 0.0)], vec![c(2.0, 0.0), c(-1.0, 1.0)]])
            .unwrap();
        let direct = a.matmul(&b).unwrap().trace();
        assert!((a.trace_of_product(&b).unwrap() - direct).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Matrix::identity(2);
        let b = Matrix::identity(3);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_real_rows(&[vec![1.0, 0.0], vec![1.0]]).is_err());
    }
}
