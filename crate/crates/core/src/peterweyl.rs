//! Peter–Weyl data for compact matrix pseudogroups.
//!
//! An [`IrrepTable`] lists, for each irreducible corepresentation `t^n`, its
//! dimension and the positive matrix `F_n` that measures how far the Haar
//! state is from a trace. Everything in this module works at the level of
//! single matrix coefficients and pairs of them; products of several
//! coefficients need Clebsch–Gordan data and are supplied from outside
//! through [`CoefficientProducts`].
//!
//! Conventions: `φ_z(t_ij) = F^z(j, i)`, the operator `F_φ` acts inside each
//! isotypic block by `F_φ e_j = Σ_i φ(t_ij) e_i`, and the Haar state pairs
//! coefficients by `h(t_ij t_kl^*) = δ_ik F(j, l) / M`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::findim::{
    check_square, frobenius, hermitian_eigen, positive_eigen, unitary_defect, ComplexMatrix, C64,
    ONE, ZERO,
};

/// Tolerance on `Tr F = Tr F^{-1}`, relative to `M`.
pub const TRACE_BALANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IrrepDatum {
    pub label: usize,
    pub dim: usize,
    pub f: ComplexMatrix,
    /// `Tr F = Tr F^{-1}`.
    pub m: f64,
}

impl IrrepDatum {
    pub fn new(label: usize, f: ComplexMatrix) -> Result<Self> {
        let dim = check_square(&f)?;
        let e = positive_eigen(&f)?;
        let tr: f64 = e.eigenvalues.iter().sum();
        let tr_inv: f64 = e.eigenvalues.iter().map(|x| 1.0 / x).sum();
        if (tr - tr_inv).abs() > TRACE_BALANCE_TOL * tr {
            return Err(Error::InconsistentDecomposition(format!(
                "irrep {label}: Tr F = {tr} but Tr F^-1 = {tr_inv}"
            )));
        }
        Ok(Self {
            label,
            dim,
            f,
            m: tr,
        })
    }

    /// `F^z` by spectral calculus.
    pub fn f_power(&self, z: C64) -> ComplexMatrix {
        let e = hermitian_eigen(&self.f).expect("validated at construction");
        e.apply_complex(|x| (z * x.ln()).exp())
            .expect("positive spectrum")
    }

    /// Matrix of values `Φ[(i, j)] = φ_z(t_ij) = F^z(j, i)`.
    pub fn phi_values(&self, z: C64) -> ComplexMatrix {
        self.f_power(z).transpose()
    }
}

#[derive(Debug, Clone, Default)]
pub struct IrrepTable {
    irreps: BTreeMap<usize, IrrepDatum>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrrepJson {
    pub label: usize,
    pub dim: usize,
    #[serde(rename = "F_re")]
    pub f_re: Vec<Vec<f64>>,
    #[serde(rename = "F_im")]
    pub f_im: Vec<Vec<f64>>,
}

impl IrrepTable {
    pub fn new(irreps: Vec<IrrepDatum>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for d in irreps {
            let label = d.label;
            if map.insert(label, d).is_some() {
                return Err(Error::InconsistentDecomposition(format!(
                    "duplicate irrep label {label}"
                )));
            }
        }
        Ok(Self { irreps: map })
    }

    /// Every `F_n = I`, the classical (Kac) case.
    pub fn classical(dims: &[(usize, usize)]) -> Result<Self> {
        let irreps = dims
            .iter()
            .map(|&(label, d)| IrrepDatum::new(label, ComplexMatrix::identity(d, d)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(irreps)
    }

    /// SU_q(2) up to spin `max_twice_spin / 2`. The label is twice the spin
    /// and `F = diag(q^{-2l}, q^{-2l+2}, ..., q^{2l})`.
    pub fn suq2(q: f64, max_twice_spin: usize) -> Result<Self> {
        let irreps = (0..=max_twice_spin)
            .map(|n| {
                let diag: Vec<C64> = (0..=n)
                    .map(|j| C64::new(q.powi(2 * j as i32 - n as i32), 0.0))
                    .collect();
                IrrepDatum::new(n, ComplexMatrix::from_diagonal(&DVector::from_vec(diag)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(irreps)
    }

    pub fn get(&self, label: usize) -> Result<&IrrepDatum> {
        self.irreps
            .get(&label)
            .ok_or_else(|| Error::UnknownIrrep(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.irreps.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IrrepDatum> {
        self.irreps.values()
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn to_json(&self) -> Vec<IrrepJson> {
        self.iter()
            .map(|d| {
                let rows = |part: fn(&C64) -> f64| {
                    (0..d.dim)
                        .map(|i| (0..d.dim).map(|j| part(&d.f[(i, j)])).collect())
                        .collect()
                };
                IrrepJson {
                    label: d.label,
                    dim: d.dim,
                    f_re: rows(|z| z.re),
                    f_im: rows(|z| z.im),
                }
            })
            .collect()
    }

    pub fn from_json(entries: &[IrrepJson]) -> Result<Self> {
        let irreps = entries
            .iter()
            .map(|e| {
                let shape_ok = e.f_re.len() == e.dim
                    && e.f_im.len() == e.dim
                    && e.f_re.iter().chain(&e.f_im).all(|r| r.len() == e.dim);
                if !shape_ok {
                    return Err(Error::DimensionMismatch(format!(
                        "irrep {}: F is not {}x{}",
                        e.label, e.dim, e.dim
                    )));
                }
                let f = ComplexMatrix::from_fn(e.dim, e.dim, |i, j| {
                    C64::new(e.f_re[i][j], e.f_im[i][j])
                });
                IrrepDatum::new(e.label, f)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(irreps)
    }
}

/// `φ_z(t^n_ij)`.
pub fn phi_z(table: &IrrepTable, label: usize, i: usize, j: usize, z: C64) -> Result<C64> {
    let d = table.get(label)?;
    if i >= d.dim || j >= d.dim {
        return Err(Error::UnknownIrrep(format!("{label}[{i},{j}]")));
    }
    Ok(d.f_power(z)[(j, i)])
}

/// One isotypic block `H_{n,k}`: columns `start..start + len` of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub label: usize,
    pub multiplicity: usize,
    pub start: usize,
    pub len: usize,
}

/// Block layout of the regular representation: every irrep repeated as
/// many times as its dimension.
pub fn regular_blocks(table: &IrrepTable) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for d in table.iter() {
        for k in 0..d.dim {
            blocks.push(Block {
                label: d.label,
                multiplicity: k,
                start,
                len: d.dim,
            });
            start += d.dim;
        }
    }
    blocks
}

#[derive(Debug, Clone)]
pub struct RepDecomposition {
    pub blocks: Vec<Block>,
    /// Unitary; column `start + j` of block `(n, k)` is `e_j^{n,k}`.
    pub basis: ComplexMatrix,
}

impl RepDecomposition {
    pub fn new(blocks: Vec<Block>, basis: ComplexMatrix, table: &IrrepTable) -> Result<Self> {
        let dim = check_square(&basis)?;
        let mut next = 0;
        for b in &blocks {
            let d = table.get(b.label)?;
            if b.len != d.dim || b.start != next {
                return Err(Error::InconsistentDecomposition(format!(
                    "block ({}, {}) at {} has length {}, expected contiguous length {}",
                    b.label, b.multiplicity, b.start, b.len, d.dim
                )));
            }
            next += b.len;
        }
        if next != dim {
            return Err(Error::InconsistentDecomposition(format!(
                "blocks cover {next} of {dim} basis vectors"
            )));
        }
        let defect = unitary_defect(&basis);
        if defect > 1e-10 {
            return Err(Error::InconsistentDecomposition(format!(
                "basis is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(Self { blocks, basis })
    }

    /// Every irrep of the table with multiplicity equal to its dimension,
    /// in the standard basis: the isotypic layout of the regular
    /// representation.
    pub fn regular(table: &IrrepTable) -> Result<Self> {
        let blocks = regular_blocks(table);
        let dim = blocks.last().map_or(0, |b| b.start + b.len);
        Self::new(blocks, ComplexMatrix::identity(dim, dim), table)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `X` in the `e_j^{n,k}` coordinates.
    pub fn to_blocks(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.basis.adjoint() * x * &self.basis
    }

    pub fn from_blocks(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.basis * x * self.basis.adjoint()
    }

    /// Block-diagonal operator with `scalar(block)` on each block.
    pub fn block_scalar(&self, scalar: impl Fn(&Block) -> f64) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim(), self.dim());
        for b in &self.blocks {
            let v = scalar(b);
            for j in b.start..b.start + b.len {
                m[(j, j)] = C64::new(v, 0.0);
            }
        }
        self.from_blocks(&m)
    }
}

/// `F_φ` for functional values `values[n][(i, j)] = φ(t^n_ij)`.
pub fn build_f_phi(
    dec: &RepDecomposition,
    table: &IrrepTable,
    values: &BTreeMap<usize, ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let mut m = ComplexMatrix::zeros(dec.dim(), dec.dim());
    for b in &dec.blocks {
        let d = table.get(b.label)?;
        let phi = values.get(&b.label).ok_or_else(|| {
            Error::InconsistentDecomposition(format!("no functional values for irrep {}", b.label))
        })?;
        if phi.nrows() != d.dim || phi.ncols() != d.dim {
            return Err(Error::InconsistentDecomposition(format!(
                "functional values for irrep {} are {}x{}",
                b.label,
                phi.nrows(),
                phi.ncols()
            )));
        }
        m.view_mut((b.start, b.start), (b.len, b.len))
            .copy_from(phi);
    }
    Ok(dec.from_blocks(&m))
}

/// `F_{φ_z}`.
pub fn build_f_phi_z(dec: &RepDecomposition, table: &IrrepTable, z: C64) -> Result<ComplexMatrix> {
    let values = table.iter().map(|d| (d.label, d.phi_values(z))).collect();
    build_f_phi(dec, table, &values)
}

/// The canonical twist `R = F_{φ_1}`, checked positive definite.
pub fn canonical_twist(dec: &RepDecomposition, table: &IrrepTable) -> Result<ComplexMatrix> {
    let r = build_f_phi_z(dec, table, ONE)?;
    positive_eigen(&r)?;
    Ok(r)
}

/// A matrix coefficient `t^n_ij` as `(n, i, j)`.
pub type Symbol = (usize, usize, usize);

/// `h(t^n_ij (t^m_kl)^*)`.
pub fn haar_pair(table: &IrrepTable, x: Symbol, y: Symbol) -> Result<C64> {
    let (n, i, j) = x;
    let (m, k, l) = y;
    let dn = table.get(n)?;
    let dm = table.get(m)?;
    if i.max(j) >= dn.dim || k.max(l) >= dm.dim {
        return Err(Error::UnknownIrrep(format!("{x:?} or {y:?}")));
    }
    if n != m || i != k {
        return Ok(ZERO);
    }
    Ok(dn.f[(j, l)] / dn.m)
}

/// `λ_{n,k} = e^{-β d²}` per block, where `d` is the scalar by which `D`
/// acts on the block. Fails if `D` is not block-scalar.
pub fn heat_weights(dec: &RepDecomposition, d: &ComplexMatrix, beta: f64) -> Result<Vec<f64>> {
    let db = dec.to_blocks(d);
    let scale = frobenius(d).max(1.0);
    let mut weights = Vec::with_capacity(dec.blocks.len());
    let mut defect = 0.0f64;
    for b in &dec.blocks {
        let lam = db[(b.start, b.start)].re;
        for i in 0..dec.dim() {
            for j in b.start..b.start + b.len {
                let expect = if i == j { lam } else { 0.0 };
                defect = defect.max((db[(i, j)] - expect).norm());
            }
        }
        weights.push((-beta * lam * lam).exp());
    }
    if defect > 1e-10 * scale {
        return Err(Error::BlockStructureViolation { defect });
    }
    Ok(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugationCheck {
    /// `χ(a) = Tr(a R Λ)`.
    pub direct: C64,
    /// `(χ ⊗ h)(V(a ⊗ 1)V^*)` through the explicit coefficient sum.
    pub averaged: C64,
    pub defect: f64,
}

/// Compares `Tr(a R Λ)` with `(χ ⊗ h)(V(a ⊗ 1)V^*)`, where `Λ` is the
/// block-scalar operator with the given per-block weights and the right
/// side is expanded as
/// `Σ ⟨e_j^b, a e_l^c⟩ ⟨e_r^c, RΛ e_i^b⟩ h(t_ij t_rl^*)`.
pub fn chi_conjugation_check(
    dec: &RepDecomposition,
    table: &IrrepTable,
    weights: &[f64],
    a: &ComplexMatrix,
) -> Result<ConjugationCheck> {
    if weights.len() != dec.blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} blocks",
            weights.len(),
            dec.blocks.len()
        )));
    }
    let r = canonical_twist(dec, table)?;
    let lambda = {
        let mut m = ComplexMatrix::zeros(dec.dim(), dec.dim());
        for (b, &w) in dec.blocks.iter().zip(weights) {
            for j in b.start..b.start + b.len {
                m[(j, j)] = C64::new(w, 0.0);
            }
        }
        dec.from_blocks(&m)
    };
    let r_lambda = &r * &lambda;
    let direct = (a * &r_lambda).trace();

    let ab = dec.to_blocks(a);
    let rb = dec.to_blocks(&r_lambda);
    let mut averaged = ZERO;
    for b in &dec.blocks {
        for c in &dec.blocks {
            for i in 0..b.len {
                for r_ in 0..c.len {
                    let chi = rb[(c.start + r_, b.start + i)];
                    if chi == ZERO {
                        continue;
                    }
                    for j in 0..b.len {
                        for l in 0..c.len {
                            let h = haar_pair(table, (b.label, i, j), (c.label, r_, l))?;
                            averaged += ab[(b.start + j, c.start + l)] * chi * h;
                        }
                    }
                }
            }
        }
    }
    Ok(ConjugationCheck {
        direct,
        averaged,
        defect: (direct - averaged).norm(),
    })
}

/// Products of matrix coefficients as coefficient vectors in an
/// orthonormal truncated basis.
pub trait CoefficientProducts {
    /// Coordinates of `t_{s_1} t_{s_2} ⋯`. Fails with
    /// [`Error::TruncationOverflow`] when the product leaves the basis.
    fn product(&self, symbols: &[Symbol]) -> Result<DVector<C64>>;
    /// Coordinates of the unit.
    fn unit(&self) -> DVector<C64>;
}

/// Norm of `χ(a_{1(1)}, …, a_{m(1)}) a_{1(2)} ⋯ a_{m(2)} − χ(a_1, …, a_m) 1`
/// for matrix-coefficient arguments, using `Δ(t_ij) = Σ_k t_ik ⊗ t_kj`.
pub fn invariance_defect(
    table: &IrrepTable,
    chi: impl Fn(&[Symbol]) -> Result<C64>,
    args: &[Symbol],
    oracle: &impl CoefficientProducts,
) -> Result<f64> {
    let mut dims = Vec::with_capacity(args.len());
    for &(n, i, j) in args {
        let d = table.get(n)?.dim;
        if i >= d || j >= d {
            return Err(Error::UnknownIrrep(format!("{n}[{i},{j}]")));
        }
        dims.push(d);
    }
    let mut acc = oracle.unit() * (-chi(args)?);
    let mut ks = vec![0usize; args.len()];
    let mut left = vec![(0, 0, 0); args.len()];
    let mut right = vec![(0, 0, 0); args.len()];
    loop {
        for (p, &(n, i, j)) in args.iter().enumerate() {
            left[p] = (n, i, ks[p]);
            right[p] = (n, ks[p], j);
        }
        let c = chi(&left)?;
        if c != ZERO {
            acc += oracle.product(&right)? * c;
        }
        // odometer over the summation indices
        let mut p = 0;
        loop {
            if p == ks.len() {
                return Ok(acc.norm());
            }
            ks[p] += 1;
            if ks[p] < dims[p] {
                break;
            }
            ks[p] = 0;
            p += 1;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthPoint {
    /// Geometric midpoint of the consecutive grid pair.
    pub t: f64,
    /// Local exponent `-d log Tr(R e^{-tD²}) / d log t`.
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub traces: Vec<(f64, f64)>,
    pub points: Vec<GrowthPoint>,
}

impl GrowthReport {
    /// Whether the exponent strictly increases over the last `window` points.
    pub fn increasing_tail(&self, window: usize) -> bool {
        let n = self.points.len();
        n >= window
            && self.points[n - window..]
                .windows(2)
                .all(|w| w[1].exponent > w[0].exponent)
    }

    /// Spread (max − min) of the exponent over the last `window` points.
    pub fn tail_spread(&self, window: usize) -> f64 {
        let n = self.points.len();
        let tail = &self.points[n.saturating_sub(window)..];
        let hi = tail.iter().map(|p| p.exponent).fold(f64::MIN, f64::max);
        let lo = tail.iter().map(|p| p.exponent).fold(f64::MAX, f64::min);
        if tail.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Local growth exponents of `Tr(R e^{-tD²})` for the canonical `R` and a
/// block-scalar `D` given by one value per block. Only the layout is
/// needed, so large truncations never materialize a basis.
pub fn growth_probe(
    blocks: &[Block],
    table: &IrrepTable,
    block_values: &[f64],
    t_grid: &[f64],
) -> Result<GrowthReport> {
    if block_values.len() != blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} Dirac values for {} blocks",
            block_values.len(),
            blocks.len()
        )));
    }
    let mut pairs = Vec::with_capacity(blocks.len());
    for (b, &v) in blocks.iter().zip(block_values) {
        pairs.push((table.get(b.label)?.m, v * v));
    }
    let traces: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| (t, pairs.iter().map(|(m, d2)| m * (-t * d2).exp()).sum()))
        .collect();
    let points = traces
        .windows(2)
        .map(|w| {
            let (t0, f0) = w[0];
            let (t1, f1) = w[1];
            GrowthPoint {
                t: (t0 * t1).sqrt(),
                exponent: -(f1.ln() - f0.ln()) / (t1.ln() - t0.ln()),
            }
        })
        .collect();
    Ok(GrowthReport { traces, points })
}
