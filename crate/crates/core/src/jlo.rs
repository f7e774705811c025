//! Twisted JLO functionals
//! `F_n^β(A_0, …, A_n) = ∫_{0≤t_1≤…≤t_n≤β} Tr(γ A_0 A_1(t_1) … A_n(t_n) R e^{−βH}) dt`
//! with `A(t) = e^{−tH} A e^{tH}`.
//!
//! The exact path works in a joint eigenbasis of `H`, `R` and `γ`, where each
//! index tuple contributes a simplex weight. The quadrature path integrates
//! the time-ordered trace directly and serves as an independent check.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::findim::{
    frobenius, hermitian_eigen, max_abs, operator_norm, ComplexMatrix, C64, I, ZERO,
};
use crate::simplex::{duffy_map, exp_divided_difference, gauss_legendre_unit};

/// Hard cap on `d^{n+1}` (and on intermediate tensor sizes) for the exact path.
pub const EXACT_TERM_BUDGET: usize = 100_000_000;
/// Relative tolerance on the commutation of `H`, `R` and `γ`.
pub const COMMUTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct JloContext {
    beta: f64,
    /// Eigenvalues of `H` in the joint basis (ascending within clusters).
    lambda: Vec<f64>,
    r: Vec<f64>,
    gamma: Option<Vec<f64>>,
    /// Columns form the joint eigenbasis.
    basis: ComplexMatrix,
    /// `D` in the joint basis, when the context was built from a Dirac operator.
    dirac: Option<ComplexMatrix>,
    /// Index of the distinct `H`-eigenvalue cluster of each basis vector.
    class: Vec<usize>,
}

fn clusters(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Refines an orthonormal basis so that it diagonalizes `op` restricted to
/// each group of columns.
fn refine(
    basis: &ComplexMatrix,
    groups: &[std::ops::Range<usize>],
    op: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let mut out = basis.clone();
    let mut diag = vec![0.0; basis.ncols()];
    for g in groups {
        let v = basis.columns(g.start, g.len()).into_owned();
        let block = v.adjoint() * op * &v;
        let e = hermitian_eigen(&((&block + block.adjoint()).scale(0.5)))?;
        out.columns_mut(g.start, g.len())
            .copy_from(&(&v * &e.eigenvectors));
        diag[g.clone()].copy_from_slice(&e.eigenvalues);
    }
    Ok((out, diag))
}

fn commutation_defect(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    frobenius(&(a * b - b * a)) / (1.0 + frobenius(a) * frobenius(b))
}

impl JloContext {
    /// Context for `H = D²`; `D` is kept for the identities involving `[D, ·]`.
    pub fn from_dirac(
        d: &ComplexMatrix,
        r: &ComplexMatrix,
        gamma: Option<&ComplexMatrix>,
        beta: f64,
    ) -> Result<Self> {
        let h = d * d;
        let mut ctx = JloContext::new(&h, r, gamma, beta)?;
        ctx.dirac = Some(ctx.basis.adjoint() * d * &ctx.basis);
        Ok(ctx)
    }

    pub fn new(
        h: &ComplexMatrix,
        r: &ComplexMatrix,
        gamma: Option<&ComplexMatrix>,
        beta: f64,
    ) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::DimensionMismatch(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let n = h.nrows();
        if r.shape() != (n, n) || gamma.is_some_and(|g| g.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(
                "H, R and gamma must share a dimension".into(),
            ));
        }
        if commutation_defect(h, r) > COMMUTATION_TOL {
            return Err(Error::IncompatibleOperators("[R, H] != 0".into()));
        }
        if let Some(g) = gamma {
            if commutation_defect(h, g) > COMMUTATION_TOL
                || commutation_defect(r, g) > COMMUTATION_TOL
            {
                return Err(Error::IncompatibleOperators(
                    "gamma does not commute with H and R".into(),
                ));
            }
        }
        let he = hermitian_eigen(h)?;
        let scale = 1.0 + he.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let h_groups = clusters(&he.eigenvalues, 1e-9 * scale);
        let (basis, r_diag) = refine(&he.eigenvectors, &h_groups, r)?;
        if r_diag.iter().any(|&x| !(x > 0.0)) {
            let min = r_diag.iter().copied().fold(f64::INFINITY, f64::min);
            let max = r_diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::NotPositiveDefinite { min, max });
        }
        let r_scale = r_diag.iter().fold(0.0f64, |a, x| a.max(*x));
        let mut hr_groups = Vec::new();
        for g in &h_groups {
            for sub in clusters(&r_diag[g.clone()], 1e-9 * r_scale) {
                hr_groups.push(g.start + sub.start..g.start + sub.end);
            }
        }
        let (basis, gamma_diag) = match gamma {
            Some(g) => {
                let (b, gd) = refine(&basis, &hr_groups, g)?;
                if gd.iter().any(|x| (x.abs() - 1.0).abs() > 1e-8) {
                    return Err(Error::IncompatibleOperators(
                        "gamma is not a symmetry".into(),
                    ));
                }
                (b, Some(gd.iter().map(|x| x.signum()).collect()))
            }
            None => (basis, None),
        };
        let lambda: Vec<f64> = (0..n)
            .map(|i| (basis.column(i).adjoint() * h * basis.column(i))[(0, 0)].re)
            .collect();
        let r_diag: Vec<f64> = (0..n)
            .map(|i| (basis.column(i).adjoint() * r * basis.column(i))[(0, 0)].re)
            .collect();
        let mut class = vec![0; n];
        for (c, g) in h_groups.iter().enumerate() {
            for i in g.clone() {
                class[i] = c;
            }
        }
        let ctx = JloContext {
            beta,
            lambda,
            r: r_diag,
            gamma: gamma_diag,
            basis,
            dirac: None,
            class,
        };
        // The joint basis must reproduce the source operators.
        let rebuilt_h = ctx.from_eigen(&ComplexMatrix::from_diagonal(
            &nalgebra::DVector::from_iterator(n, ctx.lambda.iter().map(|&x| C64::new(x, 0.0))),
        ));
        if frobenius(&(rebuilt_h - h)) > 1e-9 * (1.0 + frobenius(h)) {
            return Err(Error::IncompatibleOperators(
                "joint diagonalization failed for H".into(),
            ));
        }
        Ok(ctx)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        JloContext {
            beta,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h_spectrum(&self) -> &[f64] {
        &self.lambda
    }

    pub fn r_diag(&self) -> &[f64] {
        &self.r
    }

    pub fn gamma_diag(&self) -> Option<&[f64]> {
        self.gamma.as_deref()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn to_eigen(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.basis.adjoint() * a * &self.basis
    }

    pub fn from_eigen(&self, a: &ComplexMatrix) -> ComplexMatrix {
        &self.basis * a * self.basis.adjoint()
    }

    /// `σ_s(A) = R^{−s} A R^{s}`.
    pub fn sigma(&self, a: &ComplexMatrix, s: f64) -> ComplexMatrix {
        let mut b = self.to_eigen(a);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                b[(i, j)] *= (self.r[j] / self.r[i]).powf(s);
            }
        }
        self.from_eigen(&b)
    }

    /// `Ȧ = −[H, A]`.
    pub fn dot(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut b = self.to_eigen(a);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                b[(i, j)] *= -(self.lambda[i] - self.lambda[j]);
            }
        }
        self.from_eigen(&b)
    }

    /// `dA = i[D, A]`.
    pub fn d_op(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self
            .dirac
            .as_ref()
            .ok_or_else(|| Error::IncompatibleOperators("context was built without D".into()))?;
        let b = self.to_eigen(a);
        Ok(self.from_eigen(&((d * &b - &b * d) * I)))
    }

    /// `Tr(R e^{−βH})`.
    pub fn heat_trace(&self) -> f64 {
        self.lambda
            .iter()
            .zip(&self.r)
            .map(|(l, r)| r * (-self.beta * l).exp())
            .sum()
    }

    fn check_args(&self, args: &[ComplexMatrix]) -> Result<()> {
        if args.is_empty() {
            return Err(Error::DimensionMismatch(
                "F_n needs at least one argument".into(),
            ));
        }
        let d = self.dim();
        if let Some(a) = args.iter().find(|a| a.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(format!(
                "argument {:?} in context of dim {d}",
                a.shape()
            )));
        }
        Ok(())
    }

    /// Weight tensor `γ_{i0} R_{i0} β^n w(λ_{i1}, …, λ_{in}, λ_{i0})` over
    /// tuples `(i0, …, in)` in row-major order.
    pub fn weight_tensor(&self, n: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        let total = d
            .checked_pow(n as u32 + 1)
            .filter(|&t| t <= EXACT_TERM_BUDGET)
            .ok_or_else(|| {
                Error::MethodBudgetExceeded(format!(
                    "{d}^{} index tuples exceed the exact-path cap",
                    n + 1
                ))
            })?;
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let beta_n = self.beta.powi(n as i32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n + 1];
        let mut key = vec![0usize; n + 1];
        for flat in 0..total {
            let mut f = flat;
            for slot in (0..=n).rev() {
                idx[slot] = f % d;
                f /= d;
            }
            for (k, &i) in idx.iter().enumerate() {
                key[k] = self.class[i];
            }
            key.sort_unstable();
            let w = match cache.get(&key) {
                Some(&w) => w,
                None => {
                    let z: Vec<f64> = idx.iter().map(|&i| -self.beta * self.lambda[i]).collect();
                    let w = exp_divided_difference(&z).0;
                    cache.insert(key.clone(), w);
                    w
                }
            };
            let g = self.gamma.as_ref().map_or(1.0, |g| g[idx[0]]);
            out.push(g * self.r[idx[0]] * beta_n * w);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JloMethod {
    Exact,
    Quadrature,
}

pub fn jlo_f(ctx: &JloContext, args: &[ComplexMatrix], method: JloMethod) -> Result<C64> {
    match method {
        JloMethod::Exact => jlo_f_exact(ctx, args),
        JloMethod::Quadrature => {
            Ok(jlo_f_quadrature(ctx, args, &QuadratureOptions::default())?.value)
        }
    }
}

pub fn jlo_f_exact(ctx: &JloContext, args: &[ComplexMatrix]) -> Result<C64> {
    ctx.check_args(args)?;
    let slots: Vec<Vec<ComplexMatrix>> = args.iter().map(|a| vec![ctx.to_eigen(a)]).collect();
    let w = ctx.weight_tensor(args.len() - 1)?;
    Ok(jlo_tensor_eigen(ctx, &w, &slots)?[0])
}

/// Evaluates `F_n` on every combination of slot operators at once.
///
/// `slots[k]` lists the candidates for argument `k`, already in the joint
/// eigenbasis; `weights` is [`JloContext::weight_tensor`] for `n = slots.len() − 1`.
/// The result is indexed row-major by the candidate indices.
pub fn jlo_tensor_eigen(
    ctx: &JloContext,
    weights: &[f64],
    slots: &[Vec<ComplexMatrix>],
) -> Result<Vec<C64>> {
    let d = ctx.dim();
    let n = slots.len() - 1;
    if weights.len() != d.pow(n as u32 + 1) {
        return Err(Error::DimensionMismatch(
            "weight tensor does not match the slot count".into(),
        ));
    }
    let ms: Vec<usize> = slots.iter().map(Vec::len).collect();
    if n == 0 {
        return Ok(slots[0]
            .iter()
            .map(|x| (0..d).map(|i| x[(i, i)] * weights[i]).sum())
            .collect());
    }
    // G_0[(α0), i0, i1, rest] = W[i0, i1, rest] X0[α0][i0, i1].
    let inner0 = d.pow(n as u32 - 1);
    let budget_check = |len: usize| {
        if len > EXACT_TERM_BUDGET {
            Err(Error::MethodBudgetExceeded(format!(
                "intermediate tensor of {len} entries"
            )))
        } else {
            Ok(())
        }
    };
    budget_check(ms[0] * weights.len())?;
    let mut g = vec![ZERO; ms[0] * weights.len()];
    for (a0, x) in slots[0].iter().enumerate() {
        for i0 in 0..d {
            for i1 in 0..d {
                let xv = x[(i0, i1)];
                if xv == ZERO {
                    continue;
                }
                let src = (i0 * d + i1) * inner0;
                let dst = ((a0 * d + i0) * d + i1) * inner0;
                for r in 0..inner0 {
                    g[dst + r] = xv * weights[src + r];
                }
            }
        }
    }
    let mut alpha_count = ms[0];
    for k in 1..n {
        // Contract i_k; remaining inner block is (i_{k+1}, rest).
        let inner = d.pow((n - k) as u32);
        let rest = inner / d;
        let mk = ms[k];
        budget_check(alpha_count * mk * d * inner)?;
        let mut next = vec![ZERO; alpha_count * mk * d * inner];
        for af in 0..alpha_count {
            for (ak, x) in slots[k].iter().enumerate() {
                for i0 in 0..d {
                    let dst_base = ((af * mk + ak) * d + i0) * inner;
                    for ik in 0..d {
                        let src_base = ((af * d + i0) * d + ik) * inner;
                        for ik1 in 0..d {
                            let xv = x[(ik, ik1)];
                            if xv == ZERO {
                                continue;
                            }
                            let s = src_base + ik1 * rest;
                            let t = dst_base + ik1 * rest;
                            for r in 0..rest {
                                next[t + r] += xv * g[s + r];
                            }
                        }
                    }
                }
            }
        }
        g = next;
        alpha_count *= mk;
    }
    let mn = ms[n];
    let mut out = vec![ZERO; alpha_count * mn];
    for af in 0..alpha_count {
        for (an, x) in slots[n].iter().enumerate() {
            let mut acc = ZERO;
            for i0 in 0..d {
                for i_n in 0..d {
                    acc += g[(af * d + i0) * d + i_n] * x[(i_n, i0)];
                }
            }
            out[af * mn + an] = acc;
        }
    }
    Ok(out)
}

/// `F_k^β(A_0, L_1, …, L_k)` for every prefix `k = 0…N` of `links = (L_1, …, L_N)`.
///
/// The `(0, k)` block of the exponential of the block-bidiagonal operator with
/// `−βH` on the diagonal and `βL_k` above it is the time-ordered integral of
/// length `k`. Only that first block row is propagated, by scaled Taylor
/// steps, so the cost is linear in `N`: this is the path for long chains
/// such as pairing expansions.
pub fn jlo_chain(
    ctx: &JloContext,
    a0: &ComplexMatrix,
    links: &[ComplexMatrix],
) -> Result<Vec<C64>> {
    let mut all = vec![a0.clone()];
    all.extend_from_slice(links);
    ctx.check_args(&all)?;
    let d = ctx.dim();
    let big_n = links.len();
    if (d * d * d).saturating_mul(big_n + 1) > EXACT_TERM_BUDGET {
        return Err(Error::MethodBudgetExceeded(format!(
            "chain of {big_n} links in dimension {d}"
        )));
    }
    // Shifting by the bottom of the spectrum keeps the exponential bounded.
    let shift = ctx.lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let diag: Vec<C64> = (0..d)
        .map(|i| C64::new(-ctx.beta * (ctx.lambda[i] - shift), 0.0))
        .collect();
    let eigen_links: Vec<ComplexMatrix> = links
        .iter()
        .map(|l| ctx.to_eigen(l) * C64::new(ctx.beta, 0.0))
        .collect();
    // Only the first block row of exp(M) is needed. It is Y(1) for
    // Y' = Y M, Y(0) = [I 0 ... 0], and Y M costs one d×d product per link.
    let apply = |y: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
        (0..=big_n)
            .map(|k| {
                let mut out = y[k].clone();
                for j in 0..d {
                    out.column_mut(j).scale_mut(diag[j].re);
                }
                if k > 0 {
                    out += &y[k - 1] * &eigen_links[k - 1];
                }
                out
            })
            .collect()
    };
    let col_norm = (0..=big_n)
        .flat_map(|k| {
            let diag = &diag;
            let eigen_links = &eigen_links;
            (0..d).map(move |j| {
                diag[j].norm()
                    + if k > 0 {
                        eigen_links[k - 1].column(j).iter().map(|z| z.norm()).sum()
                    } else {
                        0.0
                    }
            })
        })
        .fold(0.0, f64::max);
    let steps = (col_norm / 0.5).ceil().max(1.0) as usize;
    let inv_steps = 1.0 / steps as f64;
    let mut y: Vec<ComplexMatrix> = (0..=big_n)
        .map(|k| {
            if k == 0 {
                ComplexMatrix::identity(d, d)
            } else {
                ComplexMatrix::zeros(d, d)
            }
        })
        .collect();
    for _ in 0..steps {
        let mut term = y.clone();
        let mut sum = y.clone();
        for j in 1..=40 {
            term = apply(&term);
            let f = inv_steps / j as f64;
            let mut size = 0.0f64;
            for (s, t) in sum.iter_mut().zip(term.iter_mut()) {
                *t *= C64::new(f, 0.0);
                *s += &*t;
                size = size.max(max_abs(t));
            }
            let total = sum.iter().map(max_abs).fold(0.0, f64::max);
            if size <= 1e-18 * total {
                break;
            }
        }
        y = sum;
    }
    let b0 = ctx.to_eigen(a0);
    let scale = (-ctx.beta * shift).exp();
    let weight0: Vec<f64> = (0..d)
        .map(|i| ctx.gamma.as_ref().map_or(1.0, |g| g[i]) * ctx.r[i])
        .collect();
    Ok((0..=big_n)
        .map(|k| {
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    acc += weight0[i] * b0[(i, j)] * y[k][(j, i)];
                }
            }
            acc * scale
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub initial_order: usize,
    pub max_order: usize,
    /// Upper limit on the number of cube nodes of a single rule.
    pub node_budget: usize,
    /// Stop when successive rules differ by at most
    /// `rel_tol·|Q| + abs_tol·scale`, with `scale` the a-priori bound.
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            initial_order: 4,
            max_order: 256,
            node_budget: 1 << 22,
            rel_tol: 1e-11,
            abs_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: C64,
    pub order: usize,
    pub change: f64,
}

pub fn jlo_f_quadrature(
    ctx: &JloContext,
    args: &[ComplexMatrix],
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    ctx.check_args(args)?;
    let n = args.len() - 1;
    let b: Vec<ComplexMatrix> = args.iter().map(|a| ctx.to_eigen(a)).collect();
    let d = ctx.dim();
    let weight0: Vec<f64> = (0..d)
        .map(|i| ctx.gamma.as_ref().map_or(1.0, |g| g[i]) * ctx.r[i])
        .collect();
    let integrand = |t: &[f64]| -> C64 {
        let mut p = b[0].clone();
        let mut prev = 0.0;
        for k in 1..=n {
            let dt = t[k - 1] - prev;
            prev = t[k - 1];
            for j in 0..d {
                let e = (-dt * ctx.lambda[j]).exp();
                for i in 0..d {
                    p[(i, j)] *= e;
                }
            }
            p = &p * &b[k];
        }
        let dt = ctx.beta - prev;
        (0..d)
            .map(|i| p[(i, i)] * weight0[i] * (-dt * ctx.lambda[i]).exp())
            .sum()
    };
    if n == 0 {
        return Ok(QuadratureResult {
            value: integrand(&[]),
            order: 0,
            change: 0.0,
        });
    }
    let scale = ctx.beta.powi(n as i32) / crate::cochain::factorial(n)
        * ctx.heat_trace()
        * args.iter().map(operator_norm).product::<f64>();
    let rule = |order: usize| -> Result<C64> {
        let nodes = order
            .checked_pow(n as u32)
            .filter(|&c| c <= opts.node_budget)
            .ok_or_else(|| {
                Error::MethodBudgetExceeded(format!(
                    "order {order} in {n} dimensions exceeds the node budget"
                ))
            })?;
        let (x, w) = gauss_legendre_unit(order);
        let mut u = vec![0.0; n];
        let mut acc = ZERO;
        for flat in 0..nodes {
            let mut f = flat;
            let mut wt = 1.0;
            for slot in 0..n {
                let q = f % order;
                f /= order;
                u[slot] = x[q];
                wt *= w[q];
            }
            let (t, jac) = duffy_map(&u, ctx.beta);
            acc += integrand(&t) * (wt * jac);
        }
        Ok(acc)
    };
    let mut order = opts.initial_order.max(1);
    let mut prev = rule(order)?;
    loop {
        let next_order = order * 2;
        if next_order > opts.max_order {
            return Err(Error::MethodBudgetExceeded(format!(
                "no convergence up to order {order}"
            )));
        }
        let cur = rule(next_order)?;
        let change = (cur - prev).norm();
        if change <= opts.rel_tol * cur.norm() + opts.abs_tol * scale {
            return Ok(QuadratureResult {
                value: cur,
                order: next_order,
                change,
            });
        }
        prev = cur;
        order = next_order;
    }
}

/// Grid `s ∈ {−1, −0.9, …, 1}` used to approximate `sup_s ‖σ_s(A)‖`.
pub fn sigma_grid() -> Vec<f64> {
    (0..=20).map(|k| -1.0 + 0.1 * k as f64).collect()
}

pub fn sup_sigma_norm(ctx: &JloContext, a: &ComplexMatrix) -> f64 {
    sigma_grid()
        .into_iter()
        .map(|s| operator_norm(&ctx.sigma(a, s)))
        .fold(0.0, f64::max)
}

/// `(β^n/n!) Tr(R e^{−βH}) Π C_j − |F_n^β(A_0, …, A_n)|`.
pub fn jlo_bound_defect(ctx: &JloContext, args: &[ComplexMatrix], c: &[f64]) -> Result<f64> {
    if c.len() != args.len() {
        return Err(Error::DimensionMismatch("one constant per argument".into()));
    }
    let n = args.len() - 1;
    let f = jlo_f_exact(ctx, args)?;
    let bound = ctx.beta.powi(n as i32) / crate::cochain::factorial(n)
        * ctx.heat_trace()
        * c.iter().product::<f64>();
    Ok(bound - f.norm())
}

fn rel(lhs: C64, rhs: C64, terms: &[C64], floor: f64) -> f64 {
    let scale = terms
        .iter()
        .map(|z| z.norm())
        .fold(lhs.norm().max(floor), f64::max);
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / scale
    }
}

/// Relative residuals of the six heat-functional identities, for
/// `args = (A_0, …, A_{n+1})` with `n ≥ 1`. Each residual is relative to the
/// largest of the terms involved and the operator-norm bound
/// `(β^k/k!) Tr(Re^{−βH}) Π ‖X_j‖` of the left-hand arguments `X_j`.
///
/// 1. `F_{n+1}(…, Ȧ_j, …) = F_n(…, A_jA_{j+1}, …) − F_n(…, A_{j−1}A_j, …)`, max over `j = 1…n`.
/// 2. `F_{n+1}(Ȧ_0, A_1, …) = F_n(A_0A_1, …) − F_n(A_1, …, A_{n+1}σ_{−1}(A_0))`.
/// 3. `F_{n+1}(A_0, …, A_n, Ȧ_{n+1}) = F_n(σ_1(A_{n+1})A_0, …, A_n) − F_n(A_0, …, A_nA_{n+1})`.
/// 4. Twisted cyclicity and σ-invariance on `(A_0, …, A_n)`, worse of the two.
/// 5. `Σ_j F_n(A_0, …, A_j, 1, …, A_{n−1}) = β F_{n−1}(A_0, …, A_{n−1})`.
/// 6. `F_n(dA_0, …, dA_n) = Σ_j (−1)^j F_n(A_0, dA_1, …, Ȧ_j, …, dA_n)` with
///    `dA = i[D, A]`; needs a context built by [`JloContext::from_dirac`].
///    It holds for graded data with even `A_j`, and for ungraded data with `n` even.
pub fn lemma24_defects(ctx: &JloContext, args: &[ComplexMatrix]) -> Result<[f64; 6]> {
    ctx.check_args(args)?;
    if args.len() < 3 {
        return Err(Error::DimensionMismatch(
            "need A_0 … A_{n+1} with n ≥ 1".into(),
        ));
    }
    let n = args.len() - 2;
    // Sides that vanish by symmetry are measured against the norm bound of
    // the left-hand arguments rather than their own roundoff.
    let natural = |xs: &[ComplexMatrix]| {
        let k = xs.len() - 1;
        ctx.beta.powi(k as i32) / crate::cochain::factorial(k)
            * ctx.heat_trace()
            * xs.iter().map(operator_norm).product::<f64>()
    };
    let f = |xs: &[ComplexMatrix]| jlo_f_exact(ctx, xs);
    let a = args;
    let replaced = |j: usize, x: ComplexMatrix| -> Vec<ComplexMatrix> {
        let mut v = a.to_vec();
        v[j] = x;
        v
    };
    let merged = |j: usize| -> Vec<ComplexMatrix> {
        // (A_0, …, A_jA_{j+1}, …, A_{n+1})
        let mut v: Vec<ComplexMatrix> = a[..j].to_vec();
        v.push(&a[j] * &a[j + 1]);
        v.extend_from_slice(&a[j + 2..]);
        v
    };

    let mut d1 = 0.0f64;
    for j in 1..=n {
        let args_l = replaced(j, ctx.dot(&a[j]));
        let lhs = f(&args_l)?;
        let t1 = f(&merged(j))?;
        let t2 = f(&merged(j - 1))?;
        d1 = d1.max(rel(lhs, t1 - t2, &[t1, t2], natural(&args_l)));
    }

    let args_l = replaced(0, ctx.dot(&a[0]));
    let lhs = f(&args_l)?;
    let t1 = f(&merged(0))?;
    let mut cyc: Vec<ComplexMatrix> = a[1..].to_vec();
    let last = cyc.len() - 1;
    cyc[last] = &a[n + 1] * ctx.sigma(&a[0], -1.0);
    let t2 = f(&cyc)?;
    let d2 = rel(lhs, t1 - t2, &[t1, t2], natural(&args_l));

    let args_l = replaced(n + 1, ctx.dot(&a[n + 1]));
    let lhs = f(&args_l)?;
    let mut front: Vec<ComplexMatrix> = vec![ctx.sigma(&a[n + 1], 1.0) * &a[0]];
    front.extend_from_slice(&a[1..=n]);
    let t1 = f(&front)?;
    let t2 = f(&merged(n))?;
    let d3 = rel(lhs, t1 - t2, &[t1, t2], natural(&args_l));

    let base = &a[..=n];
    let lhs = f(base)?;
    let mut rot = vec![ctx.sigma(&a[n], 1.0)];
    rot.extend_from_slice(&a[..n]);
    let r1 = f(&rot)?;
    let sig: Vec<ComplexMatrix> = base.iter().map(|x| ctx.sigma(x, 1.0)).collect();
    let r2 = f(&sig)?;
    let nb = natural(base);
    let d4 = rel(lhs, r1, &[r1], nb).max(rel(lhs, r2, &[r2], nb));

    let id = ComplexMatrix::identity(ctx.dim(), ctx.dim());
    let mut sum = ZERO;
    let mut terms = Vec::new();
    for j in 0..n {
        let mut v: Vec<ComplexMatrix> = a[..=j].to_vec();
        v.push(id.clone());
        v.extend_from_slice(&a[j + 1..n]);
        let t = f(&v)?;
        terms.push(t);
        sum += t;
    }
    let rhs = f(&a[..n])? * ctx.beta;
    terms.push(rhs);
    let d5 = rel(sum, rhs, &terms, natural(&a[..n]) * ctx.beta);

    let da: Vec<ComplexMatrix> = base.iter().map(|x| ctx.d_op(x)).collect::<Result<_>>()?;
    let lhs = f(&da)?;
    let mut rhs = ZERO;
    let mut terms = Vec::new();
    for j in 1..=n {
        let mut v = da.clone();
        v[0] = a[0].clone();
        v[j] = ctx.dot(&a[j]);
        let t = f(&v)?;
        terms.push(t);
        rhs += if j % 2 == 0 { t } else { -t };
    }
    let d6 = rel(lhs, rhs, &terms, natural(&da));

    Ok([d1, d2, d3, d4, d5, d6])
}
