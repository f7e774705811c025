//! Finitely based unital algebras with an automorphism.
//!
//! Elements are coordinate vectors over a fixed basis `e_0 … e_{m-1}`.
//! The automorphism acts through a matrix `S` with `σ(e_j) = Σ_k S[k][j] e_k`.

use crate::error::{Error, Result};
use crate::findim::{frobenius, identity, operator_norm, ComplexMatrix, C64, ZERO};

#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    m: usize,
    /// `c[(a*m + b)*m + g]`: coefficient of `e_g` in `e_a e_b`.
    structure: Vec<C64>,
    unit: Vec<C64>,
    sigma: ComplexMatrix,
    sigma_inv: ComplexMatrix,
    /// `twisted_mul[(i0*m + j)*m + g]` = coefficient of `e_g` in `σ(e_j) e_{i0}`.
    twisted_mul: Vec<C64>,
    norm_rep: Vec<ComplexMatrix>,
    /// Present when the algebra was built from concrete matrices.
    realization: Option<MatrixRealization>,
}

#[derive(Debug, Clone)]
struct MatrixRealization {
    basis: Vec<ComplexMatrix>,
    /// Rows map a vectorized matrix to basis coordinates.
    coord_map: ComplexMatrix,
}

fn vectorize(x: &ComplexMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_iterator(x.len(), x.iter().copied())
}

impl FiniteAlgebra {
    /// Builds an algebra from structure constants. Without `norm_rep` the
    /// left-regular representation is used.
    pub fn from_structure(
        m: usize,
        structure: Vec<C64>,
        unit: Vec<C64>,
        sigma: ComplexMatrix,
        norm_rep: Option<Vec<ComplexMatrix>>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if structure.len() != m * m * m || unit.len() != m || sigma.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "algebra of dim {m}: {} structure constants, {} unit coords, sigma {:?}",
                structure.len(),
                unit.len(),
                sigma.shape()
            )));
        }
        let sigma_inv = sigma
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidAlgebra("sigma is not invertible".into()))?;
        let norm_rep = match norm_rep {
            Some(rep) => {
                if rep.len() != m {
                    return Err(Error::DimensionMismatch("norm_rep length".into()));
                }
                rep
            }
            None => (0..m)
                .map(|a| ComplexMatrix::from_fn(m, m, |g, b| structure[(a * m + b) * m + g]))
                .collect(),
        };
        let mut alg = FiniteAlgebra {
            m,
            structure,
            unit,
            sigma,
            sigma_inv,
            twisted_mul: vec![],
            norm_rep,
            realization: None,
        };
        alg.twisted_mul = alg.build_twisted_mul();
        alg.validate()?;
        Ok(alg)
    }

    /// Builds the algebra spanned by `basis` (which must be closed under
    /// multiplication and contain the identity) with automorphism `sigma`.
    pub fn from_matrix_basis(
        basis: Vec<ComplexMatrix>,
        sigma: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let m = basis.len();
        if m == 0 {
            return Err(Error::InvalidAlgebra("empty basis".into()));
        }
        let d = basis[0].nrows();
        if basis.iter().any(|b| b.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(
                "basis matrices differ in shape".into(),
            ));
        }
        let mut v = ComplexMatrix::zeros(d * d, m);
        for (j, b) in basis.iter().enumerate() {
            v.set_column(j, &vectorize(b));
        }
        let svd = v.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-10 * smax {
            return Err(Error::InvalidAlgebra(
                "basis matrices are linearly dependent".into(),
            ));
        }
        let coord_map = svd
            .pseudo_inverse(1e-12 * smax)
            .map_err(|e| Error::InvalidAlgebra(e.to_string()))?;
        let real = MatrixRealization { basis, coord_map };

        let mut structure = vec![ZERO; m * m * m];
        for a in 0..m {
            for b in 0..m {
                let prod = &real.basis[a] * &real.basis[b];
                let c = real.coords_checked(&prod)?;
                structure[(a * m + b) * m..(a * m + b + 1) * m].copy_from_slice(&c);
            }
        }
        let unit = real.coords_checked(&identity(d))?;
        let mut s = ComplexMatrix::zeros(m, m);
        for j in 0..m {
            let c = real.coords_checked(&sigma(&real.basis[j]))?;
            for k in 0..m {
                s[(k, j)] = c[k];
            }
        }
        let sigma_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidAlgebra("sigma is not invertible".into()))?;
        let norm_rep = real.basis.clone();
        let mut alg = FiniteAlgebra {
            m,
            structure,
            unit,
            sigma: s,
            sigma_inv,
            twisted_mul: vec![],
            norm_rep,
            realization: Some(real),
        };
        alg.twisted_mul = alg.build_twisted_mul();
        alg.validate()?;
        Ok(alg)
    }

    fn build_twisted_mul(&self) -> Vec<C64> {
        let m = self.m;
        let mut out = vec![ZERO; m * m * m];
        for i0 in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let s = self.sigma[(k, j)];
                    if s == ZERO {
                        continue;
                    }
                    for g in 0..m {
                        out[(i0 * m + j) * m + g] += s * self.structure[(k * m + i0) * m + g];
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let scale = 1.0 + self.structure.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let assoc = self.associativity_defect();
        if assoc > 1e-12 * scale * scale {
            return Err(Error::InvalidAlgebra(format!(
                "associativity defect {assoc:.3e}"
            )));
        }
        let unit = self.unit_defect();
        if unit > 1e-12 * scale {
            return Err(Error::InvalidAlgebra(format!("unit defect {unit:.3e}")));
        }
        let hom = self.sigma_hom_defect();
        if hom > 1e-10 * scale * (1.0 + operator_norm(&self.sigma)).powi(2) {
            return Err(Error::InvalidAlgebra(format!(
                "sigma is not multiplicative ({hom:.3e})"
            )));
        }
        let s1 = self.apply_sigma(&self.unit);
        let d1 = s1
            .iter()
            .zip(&self.unit)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        if d1 > 1e-10 {
            return Err(Error::InvalidAlgebra(format!("sigma(1) != 1 ({d1:.3e})")));
        }
        let inv = frobenius(&(&self.sigma * &self.sigma_inv - identity(self.m)));
        if inv > 1e-12 * (1.0 + frobenius(&self.sigma) * frobenius(&self.sigma_inv)) {
            return Err(Error::InvalidAlgebra(format!(
                "sigma inverse defect {inv:.3e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn structure_constants(&self) -> &[C64] {
        &self.structure
    }

    pub fn unit_coords(&self) -> &[C64] {
        &self.unit
    }

    pub fn sigma(&self) -> &ComplexMatrix {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &ComplexMatrix {
        &self.sigma_inv
    }

    pub fn norm_rep(&self) -> &[ComplexMatrix] {
        &self.norm_rep
    }

    pub(crate) fn twisted_mul(&self) -> &[C64] {
        &self.twisted_mul
    }

    /// Basis matrices, when built by [`FiniteAlgebra::from_matrix_basis`].
    pub fn matrix_basis(&self) -> Option<&[ComplexMatrix]> {
        self.realization.as_ref().map(|r| r.basis.as_slice())
    }

    /// Coordinates of a matrix in the span of the basis, with the
    /// Frobenius residual of the least-squares fit.
    pub fn matrix_coords(&self, x: &ComplexMatrix) -> Result<(Vec<C64>, f64)> {
        let real = self
            .realization
            .as_ref()
            .ok_or_else(|| Error::InvalidAlgebra("algebra has no matrix realization".into()))?;
        Ok(real.coords(x))
    }

    pub fn mul(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let m = self.m;
        let mut out = vec![ZERO; m];
        for a in 0..m {
            if x[a] == ZERO {
                continue;
            }
            for b in 0..m {
                let xy = x[a] * y[b];
                if xy == ZERO {
                    continue;
                }
                for g in 0..m {
                    out[g] += xy * self.structure[(a * m + b) * m + g];
                }
            }
        }
        out
    }

    pub fn apply_sigma(&self, x: &[C64]) -> Vec<C64> {
        (0..self.m)
            .map(|k| (0..self.m).map(|j| self.sigma[(k, j)] * x[j]).sum())
            .collect()
    }

    /// Matrix of `x` in the norm representation.
    pub fn represent(&self, x: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.norm_rep[0].nrows(), self.norm_rep[0].ncols());
        for (c, b) in x.iter().zip(&self.norm_rep) {
            out += b * *c;
        }
        out
    }

    /// `‖x‖_*`, the operator norm in the norm representation.
    pub fn element_norm(&self, x: &[C64]) -> f64 {
        operator_norm(&self.represent(x))
    }

    fn basis_vec(&self, a: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.m];
        v[a] = C64::new(1.0, 0.0);
        v
    }

    pub fn associativity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.m {
            let ea = self.basis_vec(a);
            for b in 0..self.m {
                let eb = self.basis_vec(b);
                let ab = self.mul(&ea, &eb);
                for g in 0..self.m {
                    let eg = self.basis_vec(g);
                    let l = self.mul(&ab, &eg);
                    let r = self.mul(&ea, &self.mul(&eb, &eg));
                    worst = l
                        .iter()
                        .zip(&r)
                        .fold(worst, |w, (x, y)| w.max((x - y).norm()));
                }
            }
        }
        worst
    }

    pub fn unit_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.m {
            let ea = self.basis_vec(a);
            for p in [self.mul(&self.unit, &ea), self.mul(&ea, &self.unit)] {
                worst = p
                    .iter()
                    .zip(&ea)
                    .fold(worst, |w, (x, y)| w.max((x - y).norm()));
            }
        }
        worst
    }

    pub fn sigma_hom_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.m {
            let ea = self.basis_vec(a);
            for b in 0..self.m {
                let eb = self.basis_vec(b);
                let l = self.apply_sigma(&self.mul(&ea, &eb));
                let r = self.mul(&self.apply_sigma(&ea), &self.apply_sigma(&eb));
                worst = l
                    .iter()
                    .zip(&r)
                    .fold(worst, |w, (x, y)| w.max((x - y).norm()));
            }
        }
        worst
    }
}

impl MatrixRealization {
    fn coords(&self, x: &ComplexMatrix) -> (Vec<C64>, f64) {
        let v = vectorize(x);
        let c = &self.coord_map * &v;
        let mut back = ComplexMatrix::zeros(x.nrows(), x.ncols());
        for (coef, b) in c.iter().zip(&self.basis) {
            back += b * *coef;
        }
        (c.iter().copied().collect(), frobenius(&(back - x)))
    }

    fn coords_checked(&self, x: &ComplexMatrix) -> Result<Vec<C64>> {
        let (c, resid) = self.coords(x);
        if resid > 1e-9 * (1.0 + frobenius(x)) {
            return Err(Error::InvalidAlgebra(format!(
                "span of the basis is not closed (residual {resid:.3e})"
            )));
        }
        Ok(c)
    }
}
