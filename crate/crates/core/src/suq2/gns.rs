//! Truncated GNS space of the Haar state.
//!
//! The Haar state is a vector state in the standard faithful representation
//! `α e_{k,n} = √(1 - q^{2k}) e_{k-1,n}`, `β e_{k,n} = q^k e_{k,n+1}`:
//! `h(x) = Σ_k (1 - q²) q^{2k} ⟨e_{k,0}, x e_{k,0}⟩`. A monomial of weight
//! `(a, s)` sends `e_{k,0}` to a multiple of `e_{k-a,s}`, so the GNS vector
//! of every monomial in a weight class is a sequence indexed by `k`, and
//! distinct classes are orthogonal. Orthonormalizing each class by QR on
//! these sequences gives the same basis as a Cholesky factorization of the
//! Gram matrix `h(x* y)` without ever forming its square-conditioned
//! moments.
//!
//! Inside a weight class the `i`-th orthonormal vector has degree
//! `|a| + |s| + 2i`; it is the matrix coefficient `t^l_{row,col}` (up to a
//! positive factor) with `2l = |a| + |s| + 2i`, `col = l - (a+s)/2` and
//! `row = l - (a-s)/2`. Basis vectors are ordered by `(2l, row, col)`, so
//! the isotypic blocks `H_{l,row}` are contiguous.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::element::{comultiply, Monomial, QAlgebraElement};
use crate::error::{Error, Result};
use crate::findim::{positive_eigen, ComplexMatrix, C64, ONE, ZERO};
use crate::peterweyl::{Block, IrrepDatum, IrrepTable, RepDecomposition};

/// Minimum accepted `λ_min / λ_max` of the Gram matrix.
pub const GRAM_RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct WeightClass {
    monomials: Vec<Monomial>,
    /// `depth × n`, orthonormal columns.
    onb: DMatrix<f64>,
    /// Upper triangular: sequence of monomial `j` is `Σ_i onb_i r[(i, j)]`.
    r: DMatrix<f64>,
    /// Global basis index of each column.
    index: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLabel {
    pub twice_spin: usize,
    pub row: usize,
    pub col: usize,
    pub weight: (i32, i32),
}

#[derive(Debug, Clone)]
pub struct GnsTruncation {
    pub q: f64,
    pub degree_cutoff: usize,
    /// Monomials of degree at most the cutoff, by degree.
    pub basis: Vec<Monomial>,
    /// `gram[(x, y)] = h(x* y)`.
    pub gram: ComplexMatrix,
    /// Column `I` holds the monomial coefficients of the orthonormal vector `e_I`.
    pub onb_map: ComplexMatrix,
    pub labels: Vec<BasisLabel>,
    pub pw_blocks: RepDecomposition,
    /// Smallest over largest eigenvalue of the Gram matrix after scaling
    /// every monomial to unit norm.
    pub gram_ratio: f64,
    classes: BTreeMap<(i32, i32), WeightClass>,
    depth: usize,
}

fn apply_generator(q: f64, g: char, weight: (i32, i32), u: &[f64]) -> ((i32, i32), Vec<f64>) {
    let (a, s) = weight;
    let mult = |k: usize| -> f64 {
        let pos = k as i64 - a as i64;
        match g {
            'a' if pos >= 1 => (1.0 - q.powi(2 * pos as i32)).sqrt(),
            'A' if pos >= 0 => (1.0 - q.powi(2 * (pos as i32 + 1))).sqrt(),
            'b' | 'B' if pos >= 0 => q.powi(pos as i32),
            _ => 0.0,
        }
    };
    let out = u.iter().enumerate().map(|(k, &x)| x * mult(k)).collect();
    let next = match g {
        'a' => (a + 1, s),
        'A' => (a - 1, s),
        'b' => (a, s + 1),
        'B' => (a, s - 1),
        _ => unreachable!(),
    };
    (next, out)
}

fn apply_monomial(q: f64, mono: Monomial, weight: (i32, i32), u: &[f64]) -> ((i32, i32), Vec<f64>) {
    let mut w = weight;
    let mut v = u.to_vec();
    for _ in 0..mono.p {
        (w, v) = apply_generator(q, 'B', w, &v);
    }
    for _ in 0..mono.m {
        (w, v) = apply_generator(q, 'b', w, &v);
    }
    let g = if mono.a >= 0 { 'a' } else { 'A' };
    for _ in 0..mono.a.unsigned_abs() {
        (w, v) = apply_generator(q, g, w, &v);
    }
    (w, v)
}

impl GnsTruncation {
    pub fn build(q: f64, degree_cutoff: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidAlgebra(format!("q = {q} must lie in (0, 1)")));
        }
        let nd = degree_cutoff as i32;
        // Sequence length: the Haar weights q^{2k} drop below 1e-40.
        let depth = (40.0 * 10f64.ln() / (-2.0 * q.ln())).ceil() as usize + degree_cutoff + 1;
        let omega: Vec<f64> = (0..depth)
            .map(|k| ((1.0 - q * q) * q.powi(2 * k as i32)).sqrt())
            .collect();

        let mut raw = Vec::new();
        let mut max_eig = 0.0f64;
        let mut min_eig = f64::INFINITY;
        for a in -nd..=nd {
            let rest = nd - a.abs();
            for s in -rest..=rest {
                let n = ((rest - s.abs()) / 2 + 1) as usize;
                let monomials: Vec<Monomial> = (0..n as u32)
                    .map(|j| Monomial::new(a, s.max(0) as u32 + j, (-s).max(0) as u32 + j))
                    .collect();
                let mut v = DMatrix::<f64>::zeros(depth, n);
                for (j, &m) in monomials.iter().enumerate() {
                    let (w, seq) = apply_monomial(q, m, (0, 0), &omega);
                    debug_assert_eq!(w, (a, s));
                    v.set_column(j, &DVector::from_vec(seq));
                }
                let mut scaled = v.clone();
                for mut c in scaled.column_iter_mut() {
                    let n = c.norm();
                    c /= n;
                }
                let sv = scaled.svd(false, false).singular_values;
                max_eig = max_eig.max(sv.max().powi(2));
                min_eig = min_eig.min(sv.min().powi(2));
                let qr = v.clone().qr();
                let mut onb = qr.q();
                let mut r = qr.r();
                for i in 0..n {
                    if r[(i, i)] < 0.0 {
                        onb.column_mut(i).neg_mut();
                        r.row_mut(i).neg_mut();
                    }
                }
                raw.push(((a, s), monomials, onb, r, v));
            }
        }
        let gram_ratio = min_eig / max_eig;
        if !(gram_ratio > GRAM_RATIO_TOL) {
            return Err(Error::GramSingular { ratio: gram_ratio });
        }

        // Global ordering of the orthonormal vectors by (2l, row, col).
        let mut labels = Vec::new();
        for ((a, s), monos, ..) in &raw {
            for i in 0..monos.len() {
                let n = (a.abs() + s.abs()) as usize + 2 * i;
                labels.push(BasisLabel {
                    twice_spin: n,
                    col: (n as i32 - (a + s)) as usize / 2,
                    row: (n as i32 - (a - s)) as usize / 2,
                    weight: (*a, *s),
                });
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| (labels[i].twice_spin, labels[i].row, labels[i].col));
        let mut global = vec![0; labels.len()];
        for (g, &i) in order.iter().enumerate() {
            global[i] = g;
        }
        let sorted_labels: Vec<BasisLabel> = order.iter().map(|&i| labels[i]).collect();

        let basis = Monomial::up_to_degree(degree_cutoff);
        let mono_index: BTreeMap<Monomial, usize> =
            basis.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let dim = basis.len();
        let mut gram = ComplexMatrix::zeros(dim, dim);
        let mut onb_map = ComplexMatrix::zeros(dim, dim);
        let mut classes = BTreeMap::new();
        let mut cursor = 0;
        for (weight, monomials, onb, r, v) in raw {
            let n = monomials.len();
            let g = v.transpose() * &v;
            let r_inv = r
                .clone()
                .try_inverse()
                .ok_or(Error::GramSingular { ratio: 0.0 })?;
            let index: Vec<usize> = (0..n).map(|i| global[cursor + i]).collect();
            for (j1, m1) in monomials.iter().enumerate() {
                for (j2, m2) in monomials.iter().enumerate() {
                    gram[(mono_index[m1], mono_index[m2])] = C64::new(g[(j1, j2)], 0.0);
                }
                for i in 0..n {
                    onb_map[(mono_index[m1], index[i])] = C64::new(r_inv[(j1, i)], 0.0);
                }
            }
            cursor += n;
            classes.insert(
                weight,
                WeightClass {
                    monomials,
                    onb,
                    r,
                    index,
                },
            );
        }

        let pw_blocks = Self::identify_blocks(&sorted_labels, degree_cutoff)?;
        Ok(Self {
            q,
            degree_cutoff,
            basis,
            gram,
            onb_map,
            labels: sorted_labels,
            pw_blocks,
            gram_ratio,
            classes,
            depth,
        })
    }

    fn identify_blocks(labels: &[BasisLabel], cutoff: usize) -> Result<RepDecomposition> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for n in 0..=cutoff {
            for row in 0..=n {
                for col in 0..=n {
                    let want = BasisLabel {
                        twice_spin: n,
                        row,
                        col,
                        weight: labels.get(start + col).map(|l| l.weight).unwrap_or((0, 0)),
                    };
                    if labels.get(start + col) != Some(&want) {
                        return Err(Error::BlockIdentificationFailed(format!(
                            "expected t^{n}/2 entry ({row}, {col}) at basis index {}",
                            start + col
                        )));
                    }
                }
                blocks.push(Block {
                    label: n,
                    multiplicity: row,
                    start,
                    len: n + 1,
                });
                start += n + 1;
            }
        }
        if start != labels.len() {
            return Err(Error::BlockIdentificationFailed(format!(
                "{} basis vectors left unassigned",
                labels.len() - start
            )));
        }
        let dims: Vec<(usize, usize)> = (0..=cutoff).map(|n| (n, n + 1)).collect();
        RepDecomposition::new(
            blocks,
            ComplexMatrix::identity(start, start),
            &IrrepTable::classical(&dims)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Basis index of `t^{n/2}_{row,col}`.
    pub fn index_of(&self, twice_spin: usize, row: usize, col: usize) -> Option<usize> {
        self.pw_blocks
            .blocks
            .iter()
            .find(|b| b.label == twice_spin && b.multiplicity == row)
            .filter(|b| col < b.len)
            .map(|b| b.start + col)
    }

    /// Orthonormal coordinates of the GNS vector of `x`.
    pub fn coords(&self, x: &QAlgebraElement) -> Result<DVector<C64>> {
        let mut out = DVector::from_element(self.dim(), ZERO);
        for (m, &c) in x.terms() {
            if m.degree() > self.degree_cutoff {
                return Err(Error::TruncationOverflow(format!(
                    "monomial {m:?} above degree cutoff {}",
                    self.degree_cutoff
                )));
            }
            let class = &self.classes[&m.weight()];
            let j = class
                .monomials
                .iter()
                .position(|x| x == m)
                .expect("classes cover every monomial");
            for (i, &g) in class.index.iter().enumerate() {
                out[g] += c * class.r[(i, j)];
            }
        }
        Ok(out)
    }

    /// `e_I` as a polynomial.
    pub fn element(&self, index: usize) -> QAlgebraElement {
        let mut x = QAlgebraElement::zero(self.q);
        for (k, m) in self.basis.iter().enumerate() {
            let c = self.onb_map[(k, index)];
            if c != ZERO {
                x = &x + &QAlgebraElement::monomial(self.q, *m, c);
            }
        }
        x
    }

    /// `P π(x) P`: left multiplication compressed to the truncation, in the
    /// orthonormal basis. Exactly multiplicative on vectors whose degree
    /// leaves room for the product.
    pub fn represent(&self, x: &QAlgebraElement) -> ComplexMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for (&weight, class) in &self.classes {
            for (i, &col) in class.index.iter().enumerate() {
                let u: Vec<f64> = class.onb.column(i).iter().copied().collect();
                for (mono, &c) in x.terms() {
                    let (target, w) = apply_monomial(self.q, *mono, weight, &u);
                    let Some(tc) = self.classes.get(&target) else {
                        continue;
                    };
                    for (i2, &row) in tc.index.iter().enumerate() {
                        let dot: f64 = tc.onb.column(i2).iter().zip(&w).map(|(a, b)| a * b).sum();
                        m[(row, col)] += c * dot;
                    }
                }
            }
        }
        m
    }

    fn leg_operator(&self, z: f64, left: bool) -> Result<ComplexMatrix> {
        let n = self.dim();
        let mut cache: BTreeMap<Monomial, QAlgebraElement> = BTreeMap::new();
        let mut m = ComplexMatrix::zeros(n, n);
        for col in 0..n {
            let e = self.element(col);
            let mut image = QAlgebraElement::zero(self.q);
            for (mono, &c) in e.terms() {
                if !cache.contains_key(mono) {
                    let delta = comultiply(&QAlgebraElement::monomial(self.q, *mono, ONE))?;
                    let acted = if left {
                        delta.contract_left(|x| x.phi(z))
                    } else {
                        delta.contract_right(|x| x.phi(z))
                    };
                    cache.insert(*mono, acted);
                }
                image = &image + &cache[mono].scale(c);
            }
            m.set_column(col, &self.coords(&image)?);
        }
        Ok(m)
    }

    /// `x ↦ (id ⊗ φ_z)Δ(x)` on the truncation.
    pub fn right_leg_operator(&self, z: f64) -> Result<ComplexMatrix> {
        self.leg_operator(z, false)
    }

    /// `x ↦ (φ_z ⊗ id)Δ(x)` on the truncation.
    pub fn left_leg_operator(&self, z: f64) -> Result<ComplexMatrix> {
        self.leg_operator(z, true)
    }

    /// Canonical twist `R`: the right-leg action of `φ_1`. Acts on `t^l_{ij}`
    /// by `F_l(j, j) = q^{2j - 2l}`.
    pub fn build_r(&self) -> Result<ComplexMatrix> {
        let r = self.right_leg_operator(1.0)?;
        positive_eigen(&r)?;
        Ok(r)
    }

    /// `R'`: the left-leg action of `φ_1`, with eigenvalue `μ_k = q^{-2k}` on
    /// `t^l_{ij}` for the magnetic row index `k = l - i`.
    pub fn build_rprime(&self) -> Result<ComplexMatrix> {
        let r = self.left_leg_operator(1.0)?;
        positive_eigen(&r)?;
        Ok(r)
    }

    /// `R_1 = R R'`; acts on monomials of `α`-exponent `a` by `q^{-2a}`.
    pub fn build_r1(&self) -> Result<ComplexMatrix> {
        let r1 = self.build_r()? * self.build_rprime()?;
        positive_eigen(&r1)?;
        Ok(r1)
    }

    /// Block-scalar Dirac operator `D e^{l,row}_j = f(2l, row) e^{l,row}_j`.
    pub fn build_dirac(&self, f: impl Fn(usize, usize) -> f64) -> ComplexMatrix {
        self.pw_blocks.block_scalar(|b| f(b.label, b.multiplicity))
    }

    /// `F_l` read off from `R` on the block `(l, 0)`.
    pub fn identified_table(&self, r: &ComplexMatrix) -> Result<IrrepTable> {
        let mut irreps = Vec::new();
        for b in self.pw_blocks.blocks.iter().filter(|b| b.multiplicity == 0) {
            let f = r.view((b.start, b.start), (b.len, b.len)).into_owned();
            irreps.push(IrrepDatum::new(b.label, f)?);
        }
        IrrepTable::new(irreps)
    }

    /// The matrix coefficients `t^{n/2}_{ij}` themselves.
    ///
    /// Each basis vector `e_{ij}` is a positive multiple of some
    /// corepresentation coefficient. The multiples `c_{ij}` are fixed, up to
    /// a diagonal gauge, by `Δ(t_kj) = Σ_i t_ki ⊗ t_ij` and `ε(t_ii) = 1`;
    /// the gauge moduli are then chosen so that `Σ_k h(t_ki^* t_ki) = 1`,
    /// the Haar image of unitarity.
    pub fn matrix_coefficients(&self, twice_spin: usize) -> Result<Vec<Vec<QAlgebraElement>>> {
        let n = twice_spin + 1;
        let idx = |i: usize, j: usize| {
            self.index_of(twice_spin, i, j).ok_or_else(|| {
                Error::BlockIdentificationFailed(format!("spin {twice_spin}/2 beyond the cutoff"))
            })
        };
        let mut e = vec![Vec::with_capacity(n); n];
        for (i, row) in e.iter_mut().enumerate() {
            for j in 0..n {
                row.push(self.element(idx(i, j)?));
            }
        }
        // coefficient of e_ki ⊗ e_ij in Δ(e_kj)
        let split = |k: usize, j: usize, i: usize| -> Result<C64> {
            let delta = comultiply(&e[k][j])?;
            let (left, right) = (idx(k, i)?, idx(i, j)?);
            let mut acc = ZERO;
            for (&(l, r), &c) in delta.terms() {
                let cl = self.coords(&QAlgebraElement::monomial(self.q, l, ONE))?[left];
                if cl == ZERO {
                    continue;
                }
                let cr = self.coords(&QAlgebraElement::monomial(self.q, r, ONE))?[right];
                acc += c * cl * cr;
            }
            Ok(acc)
        };
        let mut c0 = DMatrix::from_element(n, n, ZERO);
        c0[(0, 0)] = ONE / e[0][0].counit();
        for k in 1..n {
            c0[(k, 0)] = ONE;
        }
        for i in 1..n {
            c0[(0, i)] = c0[(0, 0)] * split(0, 0, i)? / c0[(i, 0)];
        }
        for k in 1..n {
            for j in 1..n {
                let d = split(k, j, 0)?;
                if d.norm() < 1e-300 {
                    return Err(Error::BlockIdentificationFailed(format!(
                        "vanishing coproduct component for t^{twice_spin}/2_({k},{j})"
                    )));
                }
                c0[(k, j)] = c0[(k, 0)] * c0[(0, j)] / d;
            }
        }
        // A x = x with A_ik = |c0_ki|²
        let a = DMatrix::from_fn(n, n, |i, k| {
            c0[(k, i)].norm_sqr() - if i == k { 1.0 } else { 0.0 }
        });
        let svd = a.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (imin, smin) =
            svd.singular_values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
                );
        if smin > 1e-8 * (1.0 + a.norm()) {
            return Err(Error::BlockIdentificationFailed(format!(
                "no unitary normalization for spin {twice_spin}/2 (residual {smin:.3e})"
            )));
        }
        let x: Vec<f64> = v_t.row(imin).iter().map(|v| v.abs()).collect();
        let mut t = vec![Vec::with_capacity(n); n];
        for (k, row) in t.iter_mut().enumerate() {
            for j in 0..n {
                let c = c0[(k, j)] * (x[k] / x[j]).sqrt();
                row.push(e[k][j].scale(c));
            }
        }
        Ok(t)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_vector_is_first() {
        let g = GnsTruncation::build(0.5, 2).unwrap();
        assert_eq!(g.labels[0].twice_spin, 0);
        let one = g.coords(&QAlgebraElement::one(0.5)).unwrap();
        assert!((one[0] - ONE).norm() < 1e-14);
        assert!(g.depth() > 50);
    }
}
