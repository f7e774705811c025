//! Cochains as dense coefficient tensors and the twisted cyclic operators.
//!
//! A degree-`n` cochain over an algebra of dimension `m` stores its values on
//! basis tuples `(e_{i0}, …, e_{in})` in row-major order, `i0` most
//! significant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::error::{Error, Result};
use crate::findim::{C64, ZERO};

/// Relative tolerance for the constructor-checked invariance flag.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Seed of the sampled lower bound in [`cochain_norm`].
pub const NORM_SAMPLE_SEED: u64 = 0x5eed_c0c4a1;
pub const NORM_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    degree: usize,
    dim: usize,
    coeffs: Vec<C64>,
    invariant: bool,
}

impl Cochain {
    /// Unflagged cochain.
    pub fn new(dim: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = dim.checked_pow(degree as u32 + 1).unwrap_or(usize::MAX);
        if dim == 0 || coeffs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "degree {degree} cochain over dim {dim} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Cochain {
            degree,
            dim,
            coeffs,
            invariant: false,
        })
    }

    /// Cochain whose invariance flag is set after checking the defect.
    pub fn new_invariant(alg: &FiniteAlgebra, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        Cochain::new_invariant_at_scale(alg, degree, coeffs, 0.0)
    }

    /// As [`Cochain::new_invariant`], measuring the defect against
    /// `max(‖φ‖, scale)` so that numerically vanishing cochains with a known
    /// natural magnitude are not rejected for roundoff.
    pub fn new_invariant_at_scale(
        alg: &FiniteAlgebra,
        degree: usize,
        coeffs: Vec<C64>,
        scale: f64,
    ) -> Result<Self> {
        let mut c = Cochain::new(alg.dim(), degree, coeffs)?;
        if invariance_defect(alg, &c)? > INVARIANCE_TOL * c.max_norm().max(scale) {
            return Err(Error::NotInvariant);
        }
        c.invariant = true;
        Ok(c)
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Cochain {
            degree,
            dim,
            coeffs: vec![ZERO; dim.pow(degree as u32 + 1)],
            invariant: true,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    /// Drops the invariance flag.
    pub fn forget_invariance(mut self) -> Self {
        self.invariant = false;
        self
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.coeffs[flat_index(self.dim, idx)]
    }

    /// Value on arbitrary elements given in coordinates.
    pub fn evaluate(&self, args: &[Vec<C64>]) -> C64 {
        assert_eq!(args.len(), self.degree + 1);
        let mut cur = self.coeffs.clone();
        // Contract the last slot first so that the leading block shrinks.
        for a in args.iter().rev() {
            let next_len = cur.len() / self.dim;
            cur = (0..next_len)
                .map(|r| (0..self.dim).map(|k| cur[r * self.dim + k] * a[k]).sum())
                .collect();
        }
        cur[0]
    }

    pub fn scale(&self, s: C64) -> Cochain {
        Cochain {
            coeffs: self.coeffs.iter().map(|z| z * s).collect(),
            ..self.clone()
        }
    }

    /// Sum; the flag survives only if both summands carry it.
    pub fn add(&self, other: &Cochain) -> Result<Cochain> {
        same_shape(self, other)?;
        Ok(Cochain {
            degree: self.degree,
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            invariant: self.invariant && other.invariant,
        })
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn max_diff(&self, other: &Cochain) -> Result<f64> {
        same_shape(self, other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |a, (x, y)| a.max((x - y).norm())))
    }

    fn with(&self, degree: usize, coeffs: Vec<C64>, invariant: bool) -> Cochain {
        Cochain {
            degree,
            dim: self.dim,
            coeffs,
            invariant,
        }
    }
}

fn same_shape(a: &Cochain, b: &Cochain) -> Result<()> {
    if a.degree != b.degree || a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "cochains of degree {} / dim {} vs degree {} / dim {}",
            a.degree, a.dim, b.degree, b.dim
        )));
    }
    Ok(())
}

/// All index tuples of length `len` over `0..m` in row-major order.
pub fn tuples(m: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = m.pow(len as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; len];
        for slot in (0..len).rev() {
            idx[slot] = flat % m;
            flat /= m;
        }
        idx
    })
}

pub fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn check_dim(alg: &FiniteAlgebra, phi: &Cochain) -> Result<()> {
    if alg.dim() != phi.dim {
        return Err(Error::DimensionMismatch(format!(
            "cochain over dim {} applied to algebra of dim {}",
            phi.dim,
            alg.dim()
        )));
    }
    Ok(())
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Applies `out[.., j, ..] = Σ_k mat[k][j] t[.., k, ..]` in every slot.
pub fn contract_all_slots(
    t: &[C64],
    m: usize,
    slots: u32,
    mat: &crate::findim::ComplexMatrix,
) -> Vec<C64> {
    let mut cur = t.to_vec();
    for slot in 0..slots {
        let inner = m.pow(slots - 1 - slot);
        let outer = cur.len() / (inner * m);
        let mut next = vec![ZERO; cur.len()];
        for o in 0..outer {
            for j in 0..m {
                for k in 0..m {
                    let w = mat[(k, j)];
                    if w == ZERO {
                        continue;
                    }
                    let src = (o * m + k) * inner;
                    let dst = (o * m + j) * inner;
                    for r in 0..inner {
                        next[dst + r] += w * cur[src + r];
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// `(φ∘σ^{⊗(n+1)})` coefficientwise.
pub fn apply_sigma_all(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    check_dim(alg, phi)?;
    let out = contract_all_slots(&phi.coeffs, phi.dim, phi.degree as u32 + 1, alg.sigma());
    Ok(phi.with(phi.degree, out, phi.invariant))
}

/// Max-norm of `φ∘σ − φ`.
pub fn invariance_defect(alg: &FiniteAlgebra, phi: &Cochain) -> Result<f64> {
    apply_sigma_all(alg, phi)?.max_diff(phi)
}

/// `(T_n f)(a_0, …, a_n) = (−1)^n f(σ(a_n), a_0, …, a_{n−1})`.
pub fn op_t(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    check_dim(alg, phi)?;
    let m = phi.dim;
    let n = phi.degree;
    let rest = m.pow(n as u32);
    let s = alg.sigma();
    let sg = sign(n);
    let mut out = vec![ZERO; phi.coeffs.len()];
    for r in 0..rest {
        for last in 0..m {
            let mut acc = ZERO;
            for k in 0..m {
                acc += s[(k, last)] * phi.coeffs[k * rest + r];
            }
            out[r * m + last] = acc * sg;
        }
    }
    Ok(phi.with(n, out, phi.invariant))
}

/// Inverse of [`op_t`].
pub fn op_t_inv(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    check_dim(alg, phi)?;
    let m = phi.dim;
    let n = phi.degree;
    let rest = m.pow(n as u32);
    let si = alg.sigma_inv();
    let sg = sign(n);
    let mut out = vec![ZERO; phi.coeffs.len()];
    for b0 in 0..m {
        for r in 0..rest {
            let mut acc = ZERO;
            for l in 0..m {
                acc += si[(l, b0)] * phi.coeffs[r * m + l];
            }
            out[b0 * rest + r] = acc * sg;
        }
    }
    Ok(phi.with(n, out, phi.invariant))
}

/// `N_n = Σ_{j=0}^n T_n^j`.
pub fn op_n(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    let mut acc = phi.clone();
    let mut cur = phi.clone();
    for _ in 0..phi.degree {
        cur = op_t(alg, &cur)?;
        acc = acc.add(&cur)?;
    }
    acc.invariant = phi.invariant;
    Ok(acc)
}

/// `(U_n f)(a_0, …, a_{n−1}) = (−1)^n f(a_0, …, a_{n−1}, 1)`.
/// Degree 0 maps to the zero space, reported as `None`.
pub fn op_u(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Option<Cochain>> {
    check_dim(alg, phi)?;
    if phi.degree == 0 {
        return Ok(None);
    }
    let m = phi.dim;
    let u = alg.unit_coords();
    let sg = sign(phi.degree);
    let out = phi
        .coeffs
        .chunks(m)
        .map(|c| c.iter().zip(u).map(|(a, b)| a * b).sum::<C64>() * sg)
        .collect();
    Ok(Some(phi.with(phi.degree - 1, out, phi.invariant)))
}

/// `(V_n f)(a_0, …, a_{n+1}) = (−1)^{n+1} f(σ(a_{n+1})a_0, a_1, …, a_n)`.
pub fn op_v(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    check_dim(alg, phi)?;
    let m = phi.dim;
    let n = phi.degree;
    let mid = m.pow(n as u32);
    let tm = alg.twisted_mul();
    let sg = sign(n + 1);
    let mut out = vec![ZERO; mid * m * m];
    for i0 in 0..m {
        for last in 0..m {
            let w = &tm[(i0 * m + last) * m..(i0 * m + last + 1) * m];
            for r in 0..mid {
                let mut acc = ZERO;
                for (g, wg) in w.iter().enumerate() {
                    if *wg != ZERO {
                        acc += wg * phi.coeffs[g * mid + r];
                    }
                }
                out[(i0 * mid + r) * m + last] = acc * sg;
            }
        }
    }
    Ok(phi.with(n + 1, out, false))
}

fn require_invariant(phi: &Cochain) -> Result<()> {
    if !phi.invariant {
        return Err(Error::NotInvariant);
    }
    Ok(())
}

/// `B_n = N_{n−1}U_n(T_n − I)`; degree 0 maps to the zero space (`None`).
pub fn op_big_b(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Option<Cochain>> {
    require_invariant(phi)?;
    check_dim(alg, phi)?;
    if phi.degree == 0 {
        return Ok(None);
    }
    let diff = op_t(alg, phi)?.sub(phi)?;
    let u = op_u(alg, &diff)?.expect("degree is positive");
    let mut out = op_n(alg, &u)?;
    out.invariant = true;
    Ok(Some(out))
}

/// `b_n = Σ_{j=0}^{n+1} T_{n+1}^{−j−1} V_n T_n^j`.
pub fn op_b(alg: &FiniteAlgebra, phi: &Cochain) -> Result<Cochain> {
    require_invariant(phi)?;
    check_dim(alg, phi)?;
    let mut acc = Cochain::zero(phi.dim, phi.degree + 1);
    let mut tj = phi.clone();
    for j in 0..=phi.degree + 1 {
        let mut h = op_v(alg, &tj)?;
        for _ in 0..=j {
            h = op_t_inv(alg, &h)?;
        }
        acc = acc.add(&h)?;
        if j <= phi.degree {
            tj = op_t(alg, &tj)?;
        }
    }
    acc.invariant = true;
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `(φ_{2n})` or `(φ_{2n+1})` for `n = 0 … n_max`.
#[derive(Debug, Clone)]
pub struct EntireCochainSequence {
    pub parity: Parity,
    pub components: Vec<Cochain>,
    /// Coefficient max-norms of the components.
    pub norms: Vec<f64>,
    /// Set when the top component is known to miss a contribution from
    /// the degree above the truncation.
    pub top_incomplete: bool,
}

impl EntireCochainSequence {
    pub fn new(parity: Parity, components: Vec<Cochain>) -> Result<Self> {
        for (n, c) in components.iter().enumerate() {
            if c.degree != 2 * n + parity.offset() {
                return Err(Error::DimensionMismatch(format!(
                    "component {n} has degree {}, expected {}",
                    c.degree,
                    2 * n + parity.offset()
                )));
            }
        }
        if components.windows(2).any(|w| w[0].dim != w[1].dim) {
            return Err(Error::DimensionMismatch(
                "components over different algebras".into(),
            ));
        }
        let norms = components.iter().map(Cochain::max_norm).collect();
        Ok(EntireCochainSequence {
            parity,
            components,
            norms,
            top_incomplete: false,
        })
    }

    pub fn n_max(&self) -> usize {
        self.components.len().saturating_sub(1)
    }

    /// Multiplies component `k` (of degree `d`) by `d!`.
    pub fn factorial_scaled(&self) -> EntireCochainSequence {
        let comps: Vec<Cochain> = self
            .components
            .iter()
            .map(|c| c.scale(C64::new(factorial(c.degree), 0.0)))
            .collect();
        let norms = comps.iter().map(Cochain::max_norm).collect();
        EntireCochainSequence {
            components: comps,
            norms,
            ..self.clone()
        }
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(b + B)Φ`: the component of degree `k` is `bφ_{k−1} + Bφ_{k+1}`.
/// The top output misses `Bφ_{top+2}` and is flagged incomplete.
pub fn total_boundary(
    alg: &FiniteAlgebra,
    seq: &EntireCochainSequence,
) -> Result<EntireCochainSequence> {
    let m = alg.dim();
    let comps = &seq.components;
    let mut out = Vec::new();
    match seq.parity {
        Parity::Even => {
            // Degrees 1, 3, …, 2n_max+1.
            for (n, phi) in comps.iter().enumerate() {
                let mut acc = op_b(alg, phi)?;
                if let Some(next) = comps.get(n + 1) {
                    let bb = op_big_b(alg, next)?.expect("positive degree");
                    acc = acc.add(&bb)?;
                }
                out.push(acc);
            }
        }
        Parity::Odd => {
            // Degrees 0, 2, …, 2n_max+2.
            let first = match comps.first() {
                Some(c) => op_big_b(alg, c)?.expect("positive degree"),
                None => Cochain::zero(m, 0),
            };
            out.push(first);
            for (n, phi) in comps.iter().enumerate() {
                let mut acc = op_b(alg, phi)?;
                if let Some(next) = comps.get(n + 1) {
                    acc = acc.add(&op_big_b(alg, next)?.expect("positive degree"))?;
                }
                out.push(acc);
            }
        }
    }
    let mut res = EntireCochainSequence::new(seq.parity.flip(), out)?;
    res.top_incomplete = true;
    Ok(res)
}

/// `(upper, lower)` bounds for `sup_{‖a_j‖_* ≤ 1} |φ(a_0, …, a_n)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CochainNorm {
    pub upper: f64,
    pub lower: f64,
}

/// Norms of the coordinate functionals `a ↦ a_α` on the `‖·‖_*` unit ball.
pub fn coordinate_functional_norms(alg: &FiniteAlgebra) -> Vec<f64> {
    let m = alg.dim();
    let rep = alg.norm_rep();
    let d = rep[0].nrows();
    // The dual functionals are rows of the pseudo-inverse of the vectorized
    // representation; their norm against the operator norm is the trace norm.
    let mut v = crate::findim::ComplexMatrix::zeros(d * rep[0].ncols(), m);
    for (j, b) in rep.iter().enumerate() {
        for (i, z) in b.iter().enumerate() {
            v[(i, j)] = *z;
        }
    }
    let pinv = v.pseudo_inverse(1e-13).expect("pseudo-inverse");
    (0..m)
        .map(|a| {
            let y = crate::findim::ComplexMatrix::from_iterator(
                d,
                rep[0].ncols(),
                pinv.row(a).iter().copied(),
            );
            y.svd(false, false).singular_values.sum()
        })
        .collect()
}

pub fn cochain_norm(alg: &FiniteAlgebra, phi: &Cochain) -> Result<CochainNorm> {
    check_dim(alg, phi)?;
    let m = alg.dim();
    let kappa = coordinate_functional_norms(alg);
    let upper: f64 = tuples(m, phi.degree + 1)
        .zip(&phi.coeffs)
        .map(|(idx, c)| c.norm() * idx.iter().map(|&i| kappa[i]).product::<f64>())
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SAMPLE_SEED);
    let mut lower = 0.0f64;
    for _ in 0..NORM_SAMPLES {
        let args: Vec<Vec<C64>> = (0..=phi.degree)
            .map(|_| {
                let x: Vec<C64> = (0..m)
                    .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect();
                let nrm = alg.element_norm(&x).max(f64::MIN_POSITIVE);
                x.into_iter().map(|z| z / nrm).collect()
            })
            .collect();
        lower = lower.max(phi.evaluate(&args).norm());
    }
    // Basis elements normalized to unit norm are natural extremal candidates.
    let unit_basis: Vec<Vec<C64>> = (0..m)
        .map(|a| {
            let mut e = vec![ZERO; m];
            e[a] = C64::new(1.0, 0.0);
            let nrm = alg.element_norm(&e).max(f64::MIN_POSITIVE);
            e.into_iter().map(|z| z / nrm).collect()
        })
        .collect();
    if m.pow(phi.degree as u32 + 1) <= 4096 {
        for idx in tuples(m, phi.degree + 1) {
            let args: Vec<Vec<C64>> = idx.iter().map(|&i| unit_basis[i].clone()).collect();
            lower = lower.max(phi.evaluate(&args).norm());
        }
    }
    Ok(CochainNorm {
        upper: upper.max(lower),
        lower,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// `(‖φ_k‖/n!)^{1/n}` from the upper norm bound, for `n ≥ 1`.
    pub rates: Vec<f64>,
    pub norms: Vec<CochainNorm>,
    /// True when the rates are non-increasing.
    pub decaying: bool,
}

pub fn entire_growth_report(
    alg: &FiniteAlgebra,
    seq: &EntireCochainSequence,
) -> Result<GrowthReport> {
    let norms = seq
        .components
        .iter()
        .map(|c| cochain_norm(alg, c))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = norms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, nm)| (nm.upper / factorial(n)).powf(1.0 / n as f64))
        .collect();
    let decaying = rates.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok(GrowthReport {
        rates,
        norms,
        decaying,
    })
}

/// JSON form `{ "degree", "dim", "coeffs_re", "coeffs_im", "invariant" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CochainJson {
    pub degree: usize,
    pub dim: usize,
    pub coeffs_re: Vec<f64>,
    pub coeffs_im: Vec<f64>,
    pub invariant: bool,
}

impl From<&Cochain> for CochainJson {
    fn from(c: &Cochain) -> Self {
        CochainJson {
            degree: c.degree,
            dim: c.dim,
            coeffs_re: c.coeffs.iter().map(|z| z.re).collect(),
            coeffs_im: c.coeffs.iter().map(|z| z.im).collect(),
            invariant: c.invariant,
        }
    }
}

impl CochainJson {
    /// Restores the cochain; a set flag is re-checked against `alg` when given.
    pub fn into_cochain(self, alg: Option<&FiniteAlgebra>) -> Result<Cochain> {
        if self.coeffs_re.len() != self.coeffs_im.len() {
            return Err(Error::Serialization("re/im length mismatch".into()));
        }
        let coeffs: Vec<C64> = self
            .coeffs_re
            .iter()
            .zip(&self.coeffs_im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        match (self.invariant, alg) {
            (true, Some(a)) => Cochain::new_invariant(a, self.degree, coeffs),
            (flag, _) => {
                let mut c = Cochain::new(self.dim, self.degree, coeffs)?;
                c.invariant = flag;
                Ok(c)
            }
        }
    }
}
