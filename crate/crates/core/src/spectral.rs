//! Twisted spectral data, their Chern characters and K-theory pairings.

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::cochain::{
    factorial, total_boundary, tuples, Cochain, CochainJson, EntireCochainSequence, Parity,
};
use crate::error::{Error, Result};
use crate::findim::{
    fractional_power, frobenius, hermitian_defect, identity, operator_norm, positive_eigen,
    unitary_defect, ComplexMatrix, C64,
};
use crate::jlo::{jlo_chain, jlo_f_exact, jlo_tensor_eigen, JloContext};

/// The quadruple `(A, H, D, R)` with optional grading, in finite dimension.
#[derive(Debug, Clone)]
pub struct TwistedSpectralData {
    pub algebra_basis: Vec<ComplexMatrix>,
    pub d: ComplexMatrix,
    pub r: ComplexMatrix,
    pub gamma: Option<ComplexMatrix>,
    pub parity: Parity,
}

impl TwistedSpectralData {
    pub fn new(
        algebra_basis: Vec<ComplexMatrix>,
        d: ComplexMatrix,
        r: ComplexMatrix,
        gamma: Option<ComplexMatrix>,
        parity: Parity,
    ) -> Result<Self> {
        let n = d.nrows();
        let square = |m: &ComplexMatrix| m.shape() == (n, n);
        if !square(&d)
            || !square(&r)
            || !gamma.as_ref().is_none_or(square)
            || !algebra_basis.iter().all(square)
        {
            return Err(Error::DimensionMismatch(
                "all operators must act on the same space".into(),
            ));
        }
        if algebra_basis.is_empty() {
            return Err(Error::InvalidAlgebra("empty algebra basis".into()));
        }
        Ok(TwistedSpectralData {
            algebra_basis,
            d,
            r,
            gamma,
            parity,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    /// The algebra spanned by the basis with `σ = σ_1`; fails unless the span
    /// is closed under products and `σ`.
    pub fn finite_algebra(&self) -> Result<FiniteAlgebra> {
        let r_inv = fractional_power(&self.r, -1.0)?;
        let r = self.r.clone();
        FiniteAlgebra::from_matrix_basis(self.algebra_basis.clone(), move |x| &r_inv * x * &r)
    }

    pub fn context(&self, beta: f64) -> Result<JloContext> {
        JloContext::from_dirac(&self.d, &self.r, self.gamma.as_ref(), beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationEntry {
    pub name: &'static str,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn entry(&self, name: &str) -> Option<&ValidationEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn rel_defect(x: &ComplexMatrix, scale: f64) -> f64 {
    let f = frobenius(x);
    if f == 0.0 {
        0.0
    } else {
        f / scale.max(f64::MIN_POSITIVE)
    }
}

/// Relative distance of `x` from the span of `basis`.
pub fn span_projection_defect(basis: &[ComplexMatrix], x: &ComplexMatrix) -> f64 {
    let d2 = x.len();
    let mut v = ComplexMatrix::zeros(d2, basis.len());
    for (j, b) in basis.iter().enumerate() {
        v.set_column(j, &nalgebra::DVector::from_column_slice(b.as_slice()));
    }
    let target = nalgebra::DVector::from_column_slice(x.as_slice());
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    let coeffs = svd.solve(&target, 1e-12 * smax).expect("svd with vectors");
    let resid = (&svd.u.expect("u")
        * nalgebra::DMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(s, 0.0)))
        * svd.v_t.expect("v_t")
        * coeffs
        - &target)
        .norm();
    let norm = target.norm();
    if norm == 0.0 {
        0.0
    } else {
        resid / norm
    }
}

pub fn validate(data: &TwistedSpectralData) -> ValidationReport {
    let mut entries = Vec::new();
    let mut push = |name, defect: f64, tolerance| {
        entries.push(ValidationEntry {
            name,
            defect,
            tolerance,
            pass: defect.is_finite() && defect <= tolerance,
        });
    };
    let d = &data.d;
    let r = &data.r;
    let dn = frobenius(d);
    let rn = frobenius(r);

    let comm_max = data
        .algebra_basis
        .iter()
        .map(|a| frobenius(&(d * a - a * d)))
        .fold(0.0, f64::max);
    push(
        "bounded-commutators",
        if comm_max.is_finite() {
            0.0
        } else {
            f64::INFINITY
        },
        0.0,
    );
    push("dirac-hermitian", rel_defect(&(d - d.adjoint()), dn), 1e-10);
    let r_pos = match positive_eigen(r) {
        Ok(e) => {
            let min = e.eigenvalues[0];
            let max = *e.eigenvalues.last().expect("nonempty");
            if min > 1e-12 * max {
                0.0
            } else {
                1.0
            }
        }
        Err(_) => 1.0,
    };
    push("twist-positive", r_pos, 0.0);
    push(
        "twist-commutes-with-dirac",
        rel_defect(&(d * r - r * d), dn * rn),
        1e-10,
    );

    let closure = if r_pos == 0.0 {
        let mut worst = 0.0f64;
        for s in [1.0, -1.0, 0.5, -0.5] {
            let (Ok(rm), Ok(rp)) = (fractional_power(r, -s), fractional_power(r, s)) else {
                worst = f64::INFINITY;
                break;
            };
            for a in &data.algebra_basis {
                worst = worst.max(span_projection_defect(
                    &data.algebra_basis,
                    &(&rm * a * &rp),
                ));
            }
        }
        worst
    } else {
        f64::INFINITY
    };
    push("sigma-closure", closure, 1e-8);

    if data.parity == Parity::Even {
        match &data.gamma {
            None => push("grading-present", 1.0, 0.0),
            Some(g) => {
                let n = g.nrows();
                let gn = frobenius(g);
                let invol =
                    hermitian_defect(g).max(frobenius(&(g * g - identity(n))) / (n as f64).sqrt());
                push("grading-involution", invol, 1e-10);
                push(
                    "grading-anticommutes-with-dirac",
                    rel_defect(&(g * d + d * g), gn * dn),
                    1e-10,
                );
                push(
                    "grading-commutes-with-twist",
                    rel_defect(&(g * r - r * g), gn * rn),
                    1e-10,
                );
                let alg = data
                    .algebra_basis
                    .iter()
                    .map(|a| rel_defect(&(g * a - a * g), gn * frobenius(a)))
                    .fold(0.0, f64::max);
                push("grading-commutes-with-algebra", alg, 1e-10);
            }
        }
    }
    let valid = entries.iter().all(|e| e.pass);
    ValidationReport { entries, valid }
}

/// `σ_s(a) = R^{−s} a R^{s}`.
pub fn sigma_auto(data: &TwistedSpectralData, a: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    Ok(fractional_power(&data.r, -s)? * a * fractional_power(&data.r, s)?)
}

/// Which formula defines the odd Chern character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OddReading {
    /// Odd (ungraded) data, `F_{2n+1}(a_0, [D, a_1], …)`.
    Ungraded,
    /// Even data with `γa_0` in the first slot of the graded functional.
    GammaInserted,
}

/// The cochains `φ_k`, tabulated on basis tuples, together with the data
/// needed to evaluate them on arbitrary operators.
#[derive(Debug, Clone)]
pub struct ChernCharacter {
    pub parity: Parity,
    pub beta: f64,
    pub odd_reading: Option<OddReading>,
    /// Unnormalized `(φ_k)`; see [`ChernCharacter::normalized`] for `(k! φ_k)`.
    pub components: EntireCochainSequence,
    pub algebra: FiniteAlgebra,
    ctx: JloContext,
    dirac: ComplexMatrix,
}

/// Principal `√(2i) = √2 e^{iπ/4} = 1 + i`.
pub fn sqrt_2i() -> C64 {
    C64::new(1.0, 1.0)
}

impl ChernCharacter {
    /// `ψ_k = k! φ_k`.
    pub fn normalized(&self) -> EntireCochainSequence {
        self.components.factorial_scaled()
    }

    pub fn context(&self) -> &JloContext {
        &self.ctx
    }

    /// Scalar prefactor of `φ_k` in front of `F_k`.
    fn prefactor(&self, k: usize) -> C64 {
        let beta = self.beta;
        match self.parity {
            Parity::Even => C64::new(beta.powi(-((k / 2) as i32)), 0.0),
            Parity::Odd => sqrt_2i() * beta.powf(-((k / 2) as f64) - 0.5),
        }
    }

    fn first_slot(&self, a0: &ComplexMatrix) -> ComplexMatrix {
        match (self.odd_reading, &self.gamma()) {
            (Some(OddReading::GammaInserted), Some(g)) => g * a0,
            _ => a0.clone(),
        }
    }

    fn gamma(&self) -> Option<ComplexMatrix> {
        self.ctx.gamma_diag().map(|g| {
            let diag =
                nalgebra::DVector::from_iterator(g.len(), g.iter().map(|&x| C64::new(x, 0.0)));
            self.ctx.from_eigen(&ComplexMatrix::from_diagonal(&diag))
        })
    }

    /// `φ_k(a_0, …, a_k)` evaluated directly on operators.
    pub fn evaluate(&self, args: &[ComplexMatrix]) -> Result<C64> {
        let k = args.len() - 1;
        if k % 2 != self.parity.offset() {
            return Err(Error::DimensionMismatch(format!(
                "degree {k} has the wrong parity"
            )));
        }
        let mut ops = vec![self.first_slot(&args[0])];
        for a in &args[1..] {
            ops.push(&self.dirac * a - a * &self.dirac);
        }
        Ok(self.prefactor(k) * jlo_f_exact(&self.ctx, &ops)?)
    }
}

pub fn chern(data: &TwistedSpectralData, beta: f64, n_max: usize) -> Result<ChernCharacter> {
    match data.parity {
        Parity::Even => chern_with_parity(data, beta, n_max, Parity::Even, None),
        Parity::Odd => {
            chern_with_parity(data, beta, n_max, Parity::Odd, Some(OddReading::Ungraded))
        }
    }
}

/// The odd sequence under a chosen reading of its defining formula.
pub fn chern_odd(
    data: &TwistedSpectralData,
    beta: f64,
    n_max: usize,
    reading: OddReading,
) -> Result<ChernCharacter> {
    match (reading, data.parity) {
        (OddReading::GammaInserted, Parity::Odd) => Err(Error::IncompatibleOperators(
            "the graded reading needs even data".into(),
        )),
        _ => chern_with_parity(data, beta, n_max, Parity::Odd, Some(reading)),
    }
}

fn chern_with_parity(
    data: &TwistedSpectralData,
    beta: f64,
    n_max: usize,
    parity: Parity,
    odd_reading: Option<OddReading>,
) -> Result<ChernCharacter> {
    if n_max < 1 {
        return Err(Error::DimensionMismatch("n_max must be at least 1".into()));
    }
    let algebra = data.finite_algebra()?;
    let gamma = match odd_reading {
        Some(OddReading::Ungraded) => None,
        _ => data.gamma.as_ref(),
    };
    let ctx = JloContext::from_dirac(&data.d, &data.r, gamma, beta)?;
    let mut ch = ChernCharacter {
        parity,
        beta,
        odd_reading,
        components: EntireCochainSequence::new(parity, vec![])?,
        algebra,
        ctx,
        dirac: data.d.clone(),
    };
    let first: Vec<ComplexMatrix> = data
        .algebra_basis
        .iter()
        .map(|a| ch.ctx.to_eigen(&ch.first_slot(a)))
        .collect();
    let commutators: Vec<ComplexMatrix> = data
        .algebra_basis
        .iter()
        .map(|a| ch.ctx.to_eigen(&(&data.d * a - a * &data.d)))
        .collect();
    let m = data.algebra_basis.len();
    let first_norm = first.iter().map(operator_norm).fold(0.0, f64::max);
    let comm_norm = commutators.iter().map(operator_norm).fold(0.0, f64::max);
    let mut comps = Vec::new();
    for n in 0..=n_max {
        let k = 2 * n + parity.offset();
        let mut slots = vec![first.clone()];
        slots.extend(std::iter::repeat_n(commutators.clone(), k));
        let w = ch.ctx.weight_tensor(k)?;
        let pre = ch.prefactor(k);
        let coeffs: Vec<C64> = jlo_tensor_eigen(&ch.ctx, &w, &slots)?
            .into_iter()
            .map(|z| z * pre)
            .collect();
        debug_assert_eq!(coeffs.len(), m.pow(k as u32 + 1));
        // Norm bound of F_k on these arguments, for the roundoff floor.
        let bound = pre.norm() * ch.beta.powi(k as i32) / factorial(k)
            * ch.ctx.heat_trace()
            * first_norm
            * comm_norm.powi(k as i32);
        comps.push(Cochain::new_invariant_at_scale(
            &ch.algebra,
            k,
            coeffs,
            bound,
        )?);
    }
    ch.components = EntireCochainSequence::new(parity, comps)?;
    Ok(ch)
}

/// Max coefficient of `bφ_{k−1} + Bφ_{k+1}` for every output degree `k`
/// below the truncation top, in increasing degree.
pub fn cocycle_defect(ch: &ChernCharacter) -> Result<Vec<f64>> {
    let out = total_boundary(&ch.algebra, &ch.components)?;
    let mut defects: Vec<f64> = out.components.iter().map(Cochain::max_norm).collect();
    defects.pop();
    Ok(defects)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pairing {
    pub value: C64,
    /// Magnitude of the last term kept.
    pub tail: f64,
    pub terms: usize,
}

fn check_fixed(ch: &ChernCharacter, x: &ComplexMatrix) -> Result<()> {
    let r = ch.ctx.from_eigen(&ComplexMatrix::from_diagonal(
        &nalgebra::DVector::from_iterator(
            ch.ctx.dim(),
            ch.ctx.r_diag().iter().map(|&v| C64::new(v, 0.0)),
        ),
    ));
    let defect = frobenius(&(x * &r - &r * x)) / frobenius(&r);
    if defect > 1e-8 {
        return Err(Error::NotFixed { defect });
    }
    Ok(())
}

/// `Σ_{n ≤ terms} (−1)^n ((2n)!/n!) φ_{2n}(p − ½, p, …, p)`.
pub fn pair_even(ch: &ChernCharacter, p: &ComplexMatrix, terms: usize) -> Result<Pairing> {
    if ch.parity != Parity::Even {
        return Err(Error::DimensionMismatch(
            "even pairing needs the even character".into(),
        ));
    }
    let dim = ch.ctx.dim();
    if p.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(
            "projection of the wrong size".into(),
        ));
    }
    let defect = hermitian_defect(p).max(frobenius(&(p * p - p)));
    if defect > 1e-8 {
        return Err(Error::NotIdempotent { defect });
    }
    check_fixed(ch, p)?;
    let a0 = p - identity(dim) * C64::new(0.5, 0.0);
    let dp = &ch.dirac * p - p * &ch.dirac;
    let links = vec![dp; 2 * terms];
    let chain = jlo_chain(&ch.ctx, &a0, &links)?;
    let mut value = C64::new(0.0, 0.0);
    let mut tail = 0.0;
    for n in 0..=terms {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let t = chain[2 * n] * (sign * factorial(2 * n) / factorial(n) * ch.beta.powi(-(n as i32)));
        value += t;
        tail = t.norm();
    }
    Ok(Pairing { value, tail, terms })
}

/// `(2i)^{−1/2} Σ_{n ≤ terms} (−1)^n n! φ_{2n+1}(u*, u, u*, …, u)`.
pub fn pair_odd(ch: &ChernCharacter, u: &ComplexMatrix, terms: usize) -> Result<Pairing> {
    if ch.parity != Parity::Odd {
        return Err(Error::DimensionMismatch(
            "odd pairing needs the odd character".into(),
        ));
    }
    let dim = ch.ctx.dim();
    if u.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch("unitary of the wrong size".into()));
    }
    let defect = unitary_defect(u);
    if defect > 1e-8 {
        return Err(Error::NotUnitary { defect });
    }
    check_fixed(ch, u)?;
    odd_pairing_series(
        &ch.ctx,
        &ch.dirac,
        &ch.first_slot(&u.adjoint()),
        u,
        ch.beta,
        terms,
    )
}

/// The series of [`pair_odd`] for ungraded data, with no unitarity or
/// fixed-point precondition on `u`. `first` is the operator in the first
/// slot, normally `u*`.
pub fn odd_pairing_series(
    ctx: &JloContext,
    dirac: &ComplexMatrix,
    first: &ComplexMatrix,
    u: &ComplexMatrix,
    beta: f64,
    terms: usize,
) -> Result<Pairing> {
    let ustar = u.adjoint();
    let du = dirac * u - u * dirac;
    let dus = dirac * &ustar - &ustar * dirac;
    let links: Vec<ComplexMatrix> = (0..2 * terms + 1)
        .map(|j| if j % 2 == 0 { du.clone() } else { dus.clone() })
        .collect();
    let chain = jlo_chain(ctx, first, &links)?;
    let mut value = C64::new(0.0, 0.0);
    let mut tail = 0.0;
    for n in 0..=terms {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        // (2i)^{-1/2} cancels the √(2i) in φ_{2n+1}.
        let t = chain[2 * n + 1] * (sign * factorial(n) * beta.powf(-(n as f64) - 0.5));
        value += t;
        tail = t.norm();
    }
    Ok(Pairing { value, tail, terms })
}

/// Serialized form: the component sequence plus metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernJson {
    pub beta: f64,
    pub parity: Parity,
    pub normalization: String,
    pub odd_reading: Option<OddReading>,
    pub components: Vec<CochainJson>,
}

impl ChernCharacter {
    pub fn to_json(&self, normalized: bool) -> ChernJson {
        let seq = if normalized {
            self.normalized()
        } else {
            self.components.clone()
        };
        ChernJson {
            beta: self.beta,
            parity: self.parity,
            normalization: if normalized {
                "factorial".into()
            } else {
                "none".into()
            },
            odd_reading: self.odd_reading,
            components: seq.components.iter().map(CochainJson::from).collect(),
        }
    }
}

/// `max_tuple |φ(σ(a_0), …, σ(a_k)) − φ(a_0, …, a_k)|` over basis tuples of
/// the given degree, evaluated on operators; usable when the basis does not
/// span a closed algebra.
pub fn operator_invariance_defect(
    ch: &ChernCharacter,
    basis: &[ComplexMatrix],
    degree: usize,
) -> Result<f64> {
    let r = ch.ctx.from_eigen(&ComplexMatrix::from_diagonal(
        &nalgebra::DVector::from_iterator(
            ch.ctx.dim(),
            ch.ctx.r_diag().iter().map(|&v| C64::new(v, 0.0)),
        ),
    ));
    let r_inv = fractional_power(&r, -1.0)?;
    let sigma: Vec<ComplexMatrix> = basis.iter().map(|a| &r_inv * a * &r).collect();
    let mut worst = 0.0f64;
    for idx in tuples(basis.len(), degree + 1) {
        let plain: Vec<ComplexMatrix> = idx.iter().map(|&i| basis[i].clone()).collect();
        let moved: Vec<ComplexMatrix> = idx.iter().map(|&i| sigma[i].clone()).collect();
        let a = ch.evaluate(&plain)?;
        let b = ch.evaluate(&moved)?;
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::findim::{real_diag, ONE};

    fn commuting_data() -> TwistedSpectralData {
        let basis = vec![
            real_diag(&[1.0, 0.0, 1.0, 0.0]),
            real_diag(&[0.0, 1.0, 0.0, 1.0]),
        ];
        TwistedSpectralData::new(
            basis,
            ComplexMatrix::zeros(4, 4),
            identity(4),
            Some(real_diag(&[1.0, 1.0, -1.0, -1.0])),
            Parity::Even,
        )
        .unwrap()
    }

    #[test]
    fn zero_dirac_is_valid() {
        let report = validate(&commuting_data());
        assert!(report.valid, "{report:?}");
    }

    #[test]
    fn sigma_of_rank_one() {
        let mut data = commuting_data();
        data.r = real_diag(&[4.0, 1.0, 1.0, 1.0]);
        let mut a = ComplexMatrix::zeros(4, 4);
        a[(0, 1)] = ONE;
        let s = sigma_auto(&data, &a, 1.0).unwrap();
        assert!((s[(0, 1)] - C64::new(0.25, 0.0)).norm() < 1e-14);
        assert!(frobenius(&(sigma_auto(&data, &a, 0.0).unwrap() - &a)) < 1e-14);
    }

    #[test]
    fn zero_dirac_character() {
        let data = commuting_data();
        let ch = chern(&data, 1.0, 1).unwrap();
        // φ_0(a) = Tr(γ a R); higher components vanish.
        let g = data.gamma.clone().unwrap();
        for (j, a) in data.algebra_basis.iter().enumerate() {
            let expected = (&g * a).trace();
            assert!((ch.components.components[0].coeffs()[j] - expected).norm() < 1e-13);
        }
        assert_eq!(ch.components.components[1].max_norm(), 0.0);
        assert!(cocycle_defect(&ch).unwrap().iter().all(|&x| x == 0.0));
        let p = real_diag(&[1.0, 1.0, 0.0, 0.0]);
        let v = pair_even(&ch, &p, 3).unwrap();
        assert!((v.value - C64::new(2.0, 0.0)).norm() < 1e-12);
        let one = pair_even(&ch, &identity(4), 3).unwrap();
        assert!(one.value.norm() < 1e-12);
    }
}
