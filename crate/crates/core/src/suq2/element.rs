//! Polynomial SU_q(2) in PBW normal form.
//!
//! Relations, with `t = [[α, -qβ*], [β, α*]]` unitary:
//! `αβ = qβα`, `αβ* = qβ*α`, `ββ* = β*β`, `α*α + β*β = 1`, `αα* + q²ββ* = 1`.
//! Normal-form monomials are `α^k β^m β*^p` or `α*^k β^m β*^p`; the signed
//! exponent `a` of [`Monomial`] encodes which power of `α` comes first.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::findim::{C64, ONE, ZERO};

/// Degree limit for coproduct expansion.
pub const MAX_COPRODUCT_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    /// `α^a` for `a ≥ 0`, `α*^{-a}` for `a < 0`.
    pub a: i32,
    pub m: u32,
    pub p: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { a: 0, m: 0, p: 0 };

    pub fn new(a: i32, m: u32, p: u32) -> Self {
        Self { a, m, p }
    }

    pub fn degree(&self) -> usize {
        self.a.unsigned_abs() as usize + (self.m + self.p) as usize
    }

    /// Weight class `(a, m - p)`; the Haar state and all twists respect it.
    pub fn weight(&self) -> (i32, i32) {
        (self.a, self.m as i32 - self.p as i32)
    }

    /// All monomials of degree at most `max_degree`, ordered by degree.
    pub fn up_to_degree(max_degree: usize) -> Vec<Monomial> {
        let mut out = Vec::new();
        for d in 0..=max_degree as i32 {
            for a in -d..=d {
                let rest = (d - a.abs()) as u32;
                for m in 0..=rest {
                    out.push(Monomial::new(a, m, rest - m));
                }
            }
        }
        out
    }
}

/// `α^{a1} α^{a2}` (signed exponents) as `α^{a1 + a2} Σ_j c_j N^j` with
/// `N = β*β`.
fn alpha_product(q: f64, a1: i32, a2: i32) -> Vec<f64> {
    if a1.signum() * a2.signum() >= 0 {
        return vec![1.0];
    }
    // Peel one α α* (or α* α) pair from the middle and move the resulting
    // factor in N past the remaining α-power: N α^b = q^{-2b} α^b N.
    let (inner, factor) = if a1 > 0 {
        // α α* = 1 - q² N, and α^{k-1} N = q^{2(k-1)} N α^{k-1}
        (alpha_product(q, a1 - 1, a2 + 1), q.powi(2 * a1))
    } else {
        // α* α = 1 - N, and α*^{k-1} N = q^{-2(k-1)} N α*^{k-1}
        (alpha_product(q, a1 + 1, a2 - 1), q.powi(2 * (a1 + 1)))
    };
    let b = a1 + a2;
    let shift = factor * q.powi(-2 * b);
    let mut out = vec![0.0; inner.len() + 1];
    for (j, c) in inner.into_iter().enumerate() {
        out[j] += c;
        out[j + 1] -= c * shift;
    }
    out
}

fn monomial_product(q: f64, x: Monomial, y: Monomial) -> Vec<(Monomial, f64)> {
    // β^m β*^p α^b = q^{-b(m+p)} α^b β^m β*^p for signed b
    let swap = q.powi(-y.a * (x.m + x.p) as i32);
    alpha_product(q, x.a, y.a)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .map(|(j, c)| {
            let j = j as u32;
            (
                Monomial::new(x.a + y.a, x.m + y.m + j, x.p + y.p + j),
                c * swap,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QAlgebraElement {
    q: f64,
    terms: BTreeMap<Monomial, C64>,
}

impl QAlgebraElement {
    pub fn zero(q: f64) -> Self {
        Self {
            q,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(q: f64, mono: Monomial, c: C64) -> Self {
        let mut x = Self::zero(q);
        x.add_term(mono, c);
        x
    }

    pub fn one(q: f64) -> Self {
        Self::monomial(q, Monomial::ONE, ONE)
    }

    pub fn alpha(q: f64) -> Self {
        Self::monomial(q, Monomial::new(1, 0, 0), ONE)
    }

    pub fn alpha_star(q: f64) -> Self {
        Self::monomial(q, Monomial::new(-1, 0, 0), ONE)
    }

    pub fn beta(q: f64) -> Self {
        Self::monomial(q, Monomial::new(0, 1, 0), ONE)
    }

    pub fn beta_star(q: f64) -> Self {
        Self::monomial(q, Monomial::new(0, 0, 1), ONE)
    }

    /// Entry `(i, j)` of the fundamental corepresentation
    /// `[[α, -qβ*], [β, α*]]`.
    pub fn fundamental(q: f64, i: usize, j: usize) -> Self {
        match (i, j) {
            (0, 0) => Self::alpha(q),
            (0, 1) => Self::beta_star(q).scale(C64::new(-q, 0.0)),
            (1, 0) => Self::beta(q),
            (1, 1) => Self::alpha_star(q),
            _ => panic!("fundamental corepresentation index ({i}, {j}) out of range"),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, C64> {
        &self.terms
    }

    pub fn coeff(&self, mono: &Monomial) -> C64 {
        self.terms.get(mono).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, mono: Monomial, c: C64) {
        if c == ZERO {
            return;
        }
        let e = self.terms.entry(mono).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.terms.remove(&mono);
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.q);
        for (&m, &v) in &self.terms {
            out.add_term(m, v * c);
        }
        out
    }

    /// Sum of absolute coefficients; bounds the C*-norm since every
    /// normal-form monomial has norm at most one.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn pruned(&self, tol: f64) -> Self {
        let cut = tol * self.max_coeff();
        Self {
            q: self.q,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > cut)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let q = self.q;
        let mut out = Self::zero(q);
        for (&mono, &c) in &self.terms {
            // (α^a β^m β*^p)* = β^p β*^m α^{-a}
            let back = Self::monomial(q, Monomial::new(0, mono.p, mono.m), ONE)
                * Self::monomial(q, Monomial::new(-mono.a, 0, 0), ONE);
            for (&m2, &c2) in &back.terms {
                out.add_term(m2, c.conj() * c2);
            }
        }
        out
    }

    /// `ε`: `α, α* ↦ 1`, `β, β* ↦ 0`.
    pub fn counit(&self) -> C64 {
        self.terms
            .iter()
            .filter(|(m, _)| m.m == 0 && m.p == 0)
            .map(|(_, &c)| c)
            .sum()
    }

    /// `φ_z`, the multiplicative functional with `φ_z(α) = q^{-z}`,
    /// `φ_z(α*) = q^z` and `φ_z(β) = φ_z(β*) = 0`.
    pub fn phi(&self, z: f64) -> C64 {
        self.terms
            .iter()
            .filter(|(m, _)| m.m == 0 && m.p == 0)
            .map(|(m, &c)| c * self.q.powf(-z * m.a as f64))
            .sum()
    }

    /// Largest coefficient difference from `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for m in self.terms.keys().chain(other.terms.keys()) {
            worst = worst.max((self.coeff(m) - other.coeff(m)).norm());
        }
        worst
    }
}

/// Product in normal form.
pub fn normal_order(x: &QAlgebraElement, y: &QAlgebraElement) -> QAlgebraElement {
    let q = x.q;
    let mut out = QAlgebraElement::zero(q);
    for (&mx, &cx) in &x.terms {
        for (&my, &cy) in &y.terms {
            for (m, c) in monomial_product(q, mx, my) {
                out.add_term(m, cx * cy * c);
            }
        }
    }
    out
}

impl Mul for &QAlgebraElement {
    type Output = QAlgebraElement;
    fn mul(self, rhs: Self) -> QAlgebraElement {
        normal_order(self, rhs)
    }
}

impl Mul for QAlgebraElement {
    type Output = QAlgebraElement;
    fn mul(self, rhs: Self) -> QAlgebraElement {
        normal_order(&self, &rhs)
    }
}

impl Add for &QAlgebraElement {
    type Output = QAlgebraElement;
    fn add(self, rhs: Self) -> QAlgebraElement {
        let mut out = self.clone();
        for (&m, &c) in &rhs.terms {
            out.add_term(m, c);
        }
        out
    }
}

impl Sub for &QAlgebraElement {
    type Output = QAlgebraElement;
    fn sub(self, rhs: Self) -> QAlgebraElement {
        let mut out = self.clone();
        for (&m, &c) in &rhs.terms {
            out.add_term(m, -c);
        }
        out
    }
}

/// Haar state through the moment formula
/// `h(α^a β^m β*^p) = δ_{a0} δ_{mp} (1 - q²)/(1 - q^{2m+2})`.
pub fn haar(x: &QAlgebraElement) -> C64 {
    let q = x.q;
    x.terms
        .iter()
        .filter(|(m, _)| m.a == 0 && m.m == m.p)
        .map(|(m, &c)| c * (1.0 - q * q) / (1.0 - q.powi(2 * m.m as i32 + 2)))
        .sum()
}

/// Element of the algebraic tensor square, in normal form on both legs.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    q: f64,
    terms: BTreeMap<(Monomial, Monomial), C64>,
}

impl Tensor {
    pub fn unit(q: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((Monomial::ONE, Monomial::ONE), ONE);
        Self { q, terms }
    }

    pub fn terms(&self) -> &BTreeMap<(Monomial, Monomial), C64> {
        &self.terms
    }

    fn add_term(&mut self, key: (Monomial, Monomial), c: C64) {
        if c == ZERO {
            return;
        }
        let e = self.terms.entry(key).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.terms.remove(&key);
        }
    }

    fn from_pairs(q: f64, pairs: &[(Monomial, Monomial, f64)]) -> Self {
        let mut t = Self {
            q,
            terms: BTreeMap::new(),
        };
        for &(l, r, c) in pairs {
            t.add_term((l, r), C64::new(c, 0.0));
        }
        t
    }

    /// `x ⊗ y`.
    pub fn simple(x: &QAlgebraElement, y: &QAlgebraElement) -> Self {
        let mut t = Self {
            q: x.q,
            terms: BTreeMap::new(),
        };
        for (&l, &cl) in &x.terms {
            for (&r, &cr) in &y.terms {
                t.add_term((l, r), cl * cr);
            }
        }
        t
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        let q = self.q;
        let mut out = Tensor {
            q,
            terms: BTreeMap::new(),
        };
        for (&(l1, r1), &c1) in &self.terms {
            for (&(l2, r2), &c2) in &other.terms {
                let left = monomial_product(q, l1, l2);
                let right = monomial_product(q, r1, r2);
                for &(l, cl) in &left {
                    for &(r, cr) in &right {
                        out.add_term((l, r), c1 * c2 * (cl * cr));
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Tensor {
        Tensor {
            q: self.q,
            terms: self.terms.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }

    pub fn add(&mut self, other: &Tensor) {
        for (&k, &v) in &other.terms {
            self.add_term(k, v);
        }
    }

    /// `(f ⊗ id)`: contracts the left leg.
    pub fn contract_left(&self, f: impl Fn(&QAlgebraElement) -> C64) -> QAlgebraElement {
        let mut out = QAlgebraElement::zero(self.q);
        for (&(l, r), &c) in &self.terms {
            let v = f(&QAlgebraElement::monomial(self.q, l, ONE));
            out.add_term(r, c * v);
        }
        out
    }

    /// `(id ⊗ f)`: contracts the right leg.
    pub fn contract_right(&self, f: impl Fn(&QAlgebraElement) -> C64) -> QAlgebraElement {
        let mut out = QAlgebraElement::zero(self.q);
        for (&(l, r), &c) in &self.terms {
            let v = f(&QAlgebraElement::monomial(self.q, r, ONE));
            out.add_term(l, c * v);
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Tensor) -> f64 {
        let mut worst = 0.0f64;
        for k in self.terms.keys().chain(other.terms.keys()) {
            let a = self.terms.get(k).copied().unwrap_or(ZERO);
            let b = other.terms.get(k).copied().unwrap_or(ZERO);
            worst = worst.max((a - b).norm());
        }
        worst
    }
}

fn generator_coproduct(q: f64, which: char) -> Tensor {
    let a = Monomial::new(1, 0, 0);
    let a_s = Monomial::new(-1, 0, 0);
    let b = Monomial::new(0, 1, 0);
    let b_s = Monomial::new(0, 0, 1);
    match which {
        // Δα = α⊗α - qβ*⊗β
        'a' => Tensor::from_pairs(q, &[(a, a, 1.0), (b_s, b, -q)]),
        // Δα* = α*⊗α* - qβ⊗β*
        'A' => Tensor::from_pairs(q, &[(a_s, a_s, 1.0), (b, b_s, -q)]),
        // Δβ = β⊗α + α*⊗β
        'b' => Tensor::from_pairs(q, &[(b, a, 1.0), (a_s, b, 1.0)]),
        // Δβ* = β*⊗α* + α⊗β*
        'B' => Tensor::from_pairs(q, &[(b_s, a_s, 1.0), (a, b_s, 1.0)]),
        _ => unreachable!(),
    }
}

fn monomial_coproduct(q: f64, mono: Monomial) -> Tensor {
    let mut t = Tensor::unit(q);
    let alpha = generator_coproduct(q, if mono.a >= 0 { 'a' } else { 'A' });
    for _ in 0..mono.a.unsigned_abs() {
        t = t.mul(&alpha);
    }
    let beta = generator_coproduct(q, 'b');
    for _ in 0..mono.m {
        t = t.mul(&beta);
    }
    let beta_s = generator_coproduct(q, 'B');
    for _ in 0..mono.p {
        t = t.mul(&beta_s);
    }
    t
}

/// `Δ`, extended multiplicatively from the generators.
pub fn comultiply(x: &QAlgebraElement) -> Result<Tensor> {
    if x.degree() > MAX_COPRODUCT_DEGREE {
        return Err(Error::TruncationOverflow(format!(
            "coproduct of a degree-{} element (limit {MAX_COPRODUCT_DEGREE})",
            x.degree()
        )));
    }
    let mut out = Tensor {
        q: x.q,
        terms: BTreeMap::new(),
    };
    for (&m, &c) in &x.terms {
        out.add(&monomial_coproduct(x.q, m).scale(c));
    }
    Ok(out)
}

/// `κ(t_ij) = t_ji^*` on the fundamental corepresentation.
pub fn antipode_fundamental(q: f64, i: usize, j: usize) -> QAlgebraElement {
    QAlgebraElement::fundamental(q, j, i).adjoint()
}

/// Haar values obtained without the moment formula: the unknowns `h(x)` for
/// all monomials up to `max_degree` solve `(id ⊗ h)Δ(x) = h(x) 1` together
/// with `h(1) = 1`, in the least-squares sense.
#[derive(Debug, Clone)]
pub struct HaarOracle {
    pub values: BTreeMap<Monomial, f64>,
    /// Max residual of the invariance equations at the solution.
    pub residual: f64,
}

impl HaarOracle {
    pub fn solve(q: f64, max_degree: usize) -> Result<Self> {
        let monos = Monomial::up_to_degree(max_degree);
        let index: BTreeMap<Monomial, usize> =
            monos.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let n = monos.len();
        // All coefficients are real, so the system is assembled over f64;
        // rows are accumulated into the normal equations.
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for &x in &monos {
            let delta = monomial_coproduct(q, x);
            let mut by_left: BTreeMap<Monomial, Vec<(usize, f64)>> = BTreeMap::new();
            for (&(l, r), &c) in &delta.terms {
                by_left.entry(l).or_default().push((index[&r], c.re));
            }
            by_left.entry(Monomial::ONE).or_default();
            for (l, mut row) in by_left {
                if l == Monomial::ONE {
                    row.push((index[&x], -1.0));
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }
        rows.push(vec![(index[&Monomial::ONE], 1.0)]);
        rhs.push(1.0);

        // The system is consistent, so row weights do not move the
        // solution; unit rows keep the normal equations well conditioned
        // despite the q^{-k} growth of coproduct coefficients.
        for (row, b) in rows.iter_mut().zip(rhs.iter_mut()) {
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
                *b /= norm;
            }
        }
        let mut normal = DMatrix::<f64>::zeros(n, n);
        let mut target = DVector::<f64>::zeros(n);
        for (row, &b) in rows.iter().zip(&rhs) {
            for &(i, vi) in row {
                target[i] += vi * b;
                for &(j, vj) in row {
                    normal[(i, j)] += vi * vj;
                }
            }
        }
        let sol = normal
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min: 0.0, max: 0.0 })?
            .solve(&target);
        let residual = rows
            .iter()
            .zip(&rhs)
            .map(|(row, &b)| (row.iter().map(|&(i, v)| v * sol[i]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            values: monos.iter().map(|&m| (m, sol[index[&m]])).collect(),
            residual,
        })
    }

    pub fn haar(&self, x: &QAlgebraElement) -> Result<C64> {
        let mut acc = ZERO;
        for (m, &c) in x.terms() {
            let v = self.values.get(m).ok_or_else(|| {
                Error::TruncationOverflow(format!("monomial {m:?} beyond the oracle degree"))
            })?;
            acc += c * v;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defining_relations() {
        let q = 0.5;
        let a = QAlgebraElement::alpha(q);
        let a_s = QAlgebraElement::alpha_star(q);
        let b = QAlgebraElement::beta(q);
        let b_s = QAlgebraElement::beta_star(q);
        let one = QAlgebraElement::one(q);
        let qq = C64::new(q, 0.0);
        assert!((&a * &b).distance(&(&b * &a).scale(qq)) < 1e-15);
        assert!((&a * &b_s).distance(&(&b_s * &a).scale(qq)) < 1e-15);
        assert!((&b * &b_s).distance(&(&b_s * &b)) < 1e-15);
        assert!((&(&a_s * &a) + &(&b_s * &b)).distance(&one) < 1e-15);
        let lhs = &(&a * &a_s) + &(&b * &b_s).scale(qq * qq);
        assert!(lhs.distance(&one) < 1e-15);
    }

    #[test]
    fn adjoint_is_involutive() {
        let q = 0.7;
        let x = QAlgebraElement::monomial(q, Monomial::new(-2, 1, 3), C64::new(0.3, 1.2));
        assert!(x.adjoint().adjoint().distance(&x) < 1e-12);
    }

    #[test]
    fn monomial_count() {
        assert_eq!(Monomial::up_to_degree(6).len(), 140);
    }
}
