//! Dense complex linear algebra on truncated Hilbert spaces.
//!
//! Everything downstream works with [`ComplexMatrix`], a plain
//! `nalgebra::DMatrix<Complex64>`. Hermitian spectral data is produced by
//! [`hermitian_eigen`] with ascending eigenvalues and phase-fixed
//! eigenvectors, so block identification downstream is reproducible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative symmetry defect accepted by [`hermitian_eigen`].
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors; first non-negligible component real positive.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) U*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_diag(|x| C64::new(x, 0.0))
    }

    fn map_diag(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = self.dim();
        let mut scaled = u.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * u.adjoint()
    }

    /// `U diag(f(λ)) U*` for a complex-valued `f`.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
        for &lam in &self.eigenvalues {
            let v = f(lam);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::DomainError { at: lam });
            }
        }
        Ok(self.map_diag(f))
    }
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigensystem> {
    let n = check_square(m)?;
    let scale = frobenius(m);
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::NotHermitian { defect });
    }
    if n == 0 {
        return Ok(HermitianEigensystem {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(ONE);
        let phase = pivot.conj() / pivot.norm();
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i] * phase;
        }
    }
    Ok(HermitianEigensystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral calculus with a real function: `U diag(f(λ)) U*`.
pub fn matrix_function(e: &HermitianEigensystem, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    e.apply_complex(|x| C64::new(f(x), 0.0))
}

/// Eigen-decomposes `r` and checks positive definiteness
/// (min eigenvalue above `1e-12` times the max).
pub fn positive_eigen(r: &ComplexMatrix) -> Result<HermitianEigensystem> {
    let e = hermitian_eigen(r)?;
    let min = e.eigenvalues.first().copied().unwrap_or(1.0);
    let max = e.eigenvalues.last().copied().unwrap_or(1.0);
    if !(min > 1e-12 * max.abs()) || max <= 0.0 {
        return Err(Error::NotPositiveDefinite { min, max });
    }
    Ok(e)
}

pub fn fractional_power(r: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let e = positive_eigen(r)?;
    matrix_function(&e, |x| x.powf(s))
}

fn conformable(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    conformable(a, b)?;
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    conformable(a, b)?;
    Ok(a * b + b * a)
}

pub fn trace(a: &ComplexMatrix) -> Result<C64> {
    check_square(a)?;
    Ok(a.diagonal().iter().copied().sum())
}

/// Largest singular value, from the top eigenvalue of `A* A`.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let sym = (&gram + gram.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x)).sqrt()
}

pub fn unitary_defect(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    frobenius(&(u.adjoint() * u - identity(n)))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Direct sum `diag(a, b)`.
pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// JSON form `{ "rows", "cols", "re", "im" }`, entries row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re,
            im,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let n = j.rows * j.cols;
        if j.rows == 0 || j.cols == 0 || j.re.len() != n || j.im.len() != n {
            return Err(Error::Serialization(format!(
                "matrix payload {}x{} has {} re / {} im entries",
                j.rows,
                j.cols,
                j.re.len(),
                j.im.len()
            )));
        }
        if j.re.iter().chain(&j.im).any(|x| !x.is_finite()) {
            return Err(Error::Serialization("non-finite matrix entry".into()));
        }
        Ok(ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            C64::new(j.re[r * j.cols + c], j.im[r * j.cols + c])
        }))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    j.try_into()
}
