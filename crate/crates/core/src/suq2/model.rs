//! Operations on a concrete SU_q(2) model: Haar recovery from the twisted
//! trace, the fixed-point algebra of the twist `R_1`, the `K_1` unitary, the
//! invariant functional `η` and the model file format.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::element::{normal_order, QAlgebraElement};
use super::gns::GnsTruncation;
use crate::error::{Error, Result};
use crate::findim::{
    frobenius, hermitian_eigen, identity, operator_norm, unitary_defect, ComplexMatrix, C64, ZERO,
};
use crate::peterweyl::{CoefficientProducts, IrrepTable, Symbol};

/// Model file: `{ "q": 0.5, "degree_cutoff": 6, "dirac": [[l, value, sign], ...], "epsilon_u": 0.05 }`.
///
/// `l` is a spin (half-integers allowed). Spins not listed use `2l + 1` with
/// sign `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suq2Config {
    pub q: f64,
    pub degree_cutoff: usize,
    #[serde(default)]
    pub dirac: Vec<(f64, f64, f64)>,
    #[serde(default = "default_epsilon_u")]
    pub epsilon_u: f64,
}

fn default_epsilon_u() -> f64 {
    0.05
}

impl Default for Suq2Config {
    fn default() -> Self {
        Self {
            q: 0.5,
            degree_cutoff: 6,
            dirac: Vec::new(),
            epsilon_u: default_epsilon_u(),
        }
    }
}

/// Dirac spectrum per spin: value times sign, default `2l + 1`.
#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct DiracSpectrum {
    entries: Vec<(usize, f64, f64)>,
}

impl DiracSpectrum {
    pub fn from_table(table: &[(f64, f64, f64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(table.len());
        for &(l, value, sign) in table {
            let twice = 2.0 * l;
            if l < 0.0 || (twice - twice.round()).abs() > 1e-9 {
                return Err(Error::InvalidAlgebra(format!(
                    "spin {l} is not a half-integer"
                )));
            }
            if sign != 1.0 && sign != -1.0 {
                return Err(Error::InvalidAlgebra(format!(
                    "sign {sign} must be +1 or -1"
                )));
            }
            entries.push((twice.round() as usize, value, sign));
        }
        Ok(Self { entries })
    }

    pub fn value(&self, twice_spin: usize, _row: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == twice_spin)
            .map(|&(_, v, s)| v * s)
            .unwrap_or(twice_spin as f64 + 1.0)
    }
}


/// Truncation plus the operators every computation needs.
#[derive(Debug, Clone)]
pub struct Suq2Model {
    pub config: Suq2Config,
    pub gns: GnsTruncation,
    pub r: ComplexMatrix,
    pub r_prime: ComplexMatrix,
    pub r1: ComplexMatrix,
    pub dirac: ComplexMatrix,
    pub spectrum: DiracSpectrum,
}

impl Suq2Model {
    pub fn new(config: Suq2Config) -> Result<Self> {
        let gns = GnsTruncation::build(config.q, config.degree_cutoff)?;
        let spectrum = DiracSpectrum::from_table(&config.dirac)?;
        let r = gns.build_r()?;
        let r_prime = gns.build_rprime()?;
        let r1 = &r * &r_prime;
        let dirac = gns.build_dirac(|n, row| spectrum.value(n, row));
        Ok(Self {
            config,
            gns,
            r,
            r_prime,
            r1,
            dirac,
            spectrum,
        })
    }

    pub fn q(&self) -> f64 {
        self.config.q
    }

    pub fn represent(&self, x: &QAlgebraElement) -> ComplexMatrix {
        self.gns.represent(x)
    }

    /// `R_1^{-1} X R_1`, using that `R_1` is diagonal in the GNS basis.
    pub fn sigma(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = x.nrows();
        ComplexMatrix::from_fn(n, n, |i, j| x[(i, j)] * self.r1[(j, j)] / self.r1[(i, i)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HaarRecovery {
    pub value: C64,
    /// Bound on the change from including all spins above the cutoff.
    pub tail: f64,
}

/// `Tr(π(a) R L) / Tr(R L)` with `L = λ(2l)` on spin `l`.
///
/// The tail bound is `2‖a‖ Σ_{l > cutoff} (2l+1) M_l λ_l / Tr(R L)`, with
/// `‖a‖` bounded by the coefficient sum; the series is summed until its terms
/// fall below `1e-300` or fail to decrease.
pub fn haar_recovery(
    model: &Suq2Model,
    a: &QAlgebraElement,
    lambda: impl Fn(usize) -> f64,
    tol: f64,
) -> Result<HaarRecovery> {
    let gns = &model.gns;
    let pa = gns.represent(a);
    let mut num = ZERO;
    let mut den = 0.0;
    for (i, l) in gns.labels.iter().enumerate() {
        let w = model.r[(i, i)].re * lambda(l.twice_spin);
        num += pa[(i, i)] * w;
        den += w;
    }
    let q = model.q();
    let qdim = |n: usize| {
        (0..=n)
            .map(|j| q.powi(2 * j as i32 - n as i32))
            .sum::<f64>()
    };
    let mut tail_sum = 0.0;
    let mut prev = f64::INFINITY;
    for n in gns.degree_cutoff + 1.. {
        let term = (n as f64 + 1.0) * qdim(n) * lambda(n);
        if !term.is_finite() || term > prev {
            return Err(Error::TailTooLarge {
                tail: f64::INFINITY,
                tol,
            });
        }
        tail_sum += term;
        if term < 1e-300 || term < 1e-17 * tail_sum {
            break;
        }
        prev = term;
    }
    let tail = 2.0 * a.l1_norm() * tail_sum / den;
    if tail > tol {
        return Err(Error::TailTooLarge { tail, tol });
    }
    Ok(HaarRecovery {
        value: num / den,
        tail,
    })
}

/// Basis of the `σ`-fixed part of `span{π(x)}` for the given candidates.
#[derive(Debug, Clone)]
pub struct FixedPointBasis {
    /// Orthonormal (Frobenius) operators with `‖σ(X) − X‖ ≤ tol·‖X‖`.
    pub elements: Vec<ComplexMatrix>,
    pub tol: f64,
}

impl FixedPointBasis {
    /// Relative distance of `x` from the span of the fixed elements.
    pub fn projection_defect(&self, x: &ComplexMatrix) -> f64 {
        let mut rest = x.clone();
        for e in &self.elements {
            let c = e.dotc(&rest);
            rest -= e * c;
        }
        frobenius(&rest) / frobenius(x).max(f64::MIN_POSITIVE)
    }
}

pub fn fixed_point_basis(
    model: &Suq2Model,
    candidates: &[QAlgebraElement],
    tol: f64,
) -> Result<FixedPointBasis> {
    let n = model.gns.dim();
    let cols: Vec<ComplexMatrix> = candidates.iter().map(|x| model.represent(x)).collect();
    let mut stacked = DMatrix::<C64>::zeros(n * n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        stacked.set_column(j, &DVector::from_column_slice(c.as_slice()));
    }
    // Orthonormal basis of the candidate span, dropping dependent directions.
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("requested");
    let top = svd.singular_values.max();
    let span: Vec<ComplexMatrix> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * top)
        .map(|i| ComplexMatrix::from_column_slice(n, n, u.column(i).as_slice()))
        .collect();
    let mut defect = DMatrix::<C64>::zeros(n * n, span.len());
    for (j, x) in span.iter().enumerate() {
        let d = model.sigma(x) - x;
        defect.set_column(j, &DVector::from_column_slice(d.as_slice()));
    }
    let svd = defect.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut elements = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            let mut x = ComplexMatrix::zeros(n, n);
            for (j, b) in span.iter().enumerate() {
                x += b * v_t[(i, j)].conj();
            }
            elements.push(x);
        }
    }
    // Rows of V* beyond the number of singular values span the kernel too.
    for i in svd.singular_values.len()..span.len() {
        let mut x = ComplexMatrix::zeros(n, n);
        for (j, b) in span.iter().enumerate() {
            x += b * v_t[(i, j)].conj();
        }
        elements.push(x);
    }
    Ok(FixedPointBasis { elements, tol })
}

#[derive(Debug, Clone)]
pub struct UnitaryElement {
    pub u: ComplexMatrix,
    /// `‖u*u − I‖` in operator norm. Of order one at any cutoff: the
    /// compressed `π(β)` loses its shift property on the top degree.
    pub unitarity_defect: f64,
    /// Largest column norm of `u*u − I` on each spin `2l = 0, 1, …`.
    pub defect_by_spin: Vec<f64>,
    /// Distance from the cut `1 − ε_u` to the nearest eigenvalue of `π(β*β)`.
    pub gap: f64,
    /// Rank of the spectral projection `I_1`.
    pub rank: usize,
}

/// `u = I_1(π(β*β))(π(β) − I) + I` with `I_1` the spectral projection on
/// `{s ≥ 1 − ε_u}`.
pub fn u_element(model: &Suq2Model, epsilon_u: f64) -> Result<UnitaryElement> {
    let q = model.q();
    let beta = QAlgebraElement::beta(q);
    let n_op = model.represent(&normal_order(&QAlgebraElement::beta_star(q), &beta));
    let e = hermitian_eigen(&n_op)?;
    let cut = 1.0 - epsilon_u;
    let gap = e
        .eigenvalues
        .iter()
        .map(|&s| (s - cut).abs())
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-6 {
        return Err(Error::SpectralGapTooSmall { cut, gap });
    }
    let rank = e.eigenvalues.iter().filter(|&&s| s >= cut).count();
    let proj = e.apply_complex(|s| C64::new(if s >= cut { 1.0 } else { 0.0 }, 0.0))?;
    let dim = n_op.nrows();
    let u = &proj * (model.represent(&beta) - identity(dim)) + identity(dim);
    let uu = u.adjoint() * &u - identity(dim);
    let mut defect_by_spin = vec![0.0f64; model.gns.degree_cutoff + 1];
    for (i, l) in model.gns.labels.iter().enumerate() {
        let d = &mut defect_by_spin[l.twice_spin];
        *d = d.max(uu.column(i).norm());
    }
    Ok(UnitaryElement {
        defect_by_spin,
        unitarity_defect: unitary_defect(&u),
        u,
        gap,
        rank,
    })
}

/// Column-compressed operator; the represented generators only move
/// between weight classes, so almost all entries vanish exactly.
#[derive(Debug, Clone)]
struct SparseOp {
    cols: Vec<Vec<(usize, C64)>>,
    norm: f64,
}

impl SparseOp {
    fn new(m: &ComplexMatrix) -> Self {
        let cols = (0..m.ncols())
            .map(|j| {
                m.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != ZERO)
                    .map(|(i, v)| (i, *v))
                    .collect()
            })
            .collect();
        Self {
            cols,
            norm: operator_norm(m),
        }
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::from_element(v.len(), ZERO);
        for (j, col) in self.cols.iter().enumerate() {
            if v[j] != ZERO {
                for &(i, x) in col {
                    out[i] += x * v[j];
                }
            }
        }
        out
    }
}

/// `η(a_0, …, a_n) = Tr(π(a_0) e^{-s_0 D²} [D, π(a_1)] e^{-s_1 D²} ⋯ [D, π(a_n)] e^{-s_n D²} T)`
/// for a twist `T`, with the heat budget `β` split evenly.
#[derive(Debug, Clone)]
pub struct Eta<'a> {
    model: &'a Suq2Model,
    twist: ComplexMatrix,
    beta: f64,
    /// `π(t^{1/2}_{ij})` and `[D, π(t^{1/2}_{ij})]` in row-major order.
    fundamental: Vec<SparseOp>,
    commutators: Vec<SparseOp>,
    d_sq: Vec<f64>,
}

fn slot(&(n, i, j): &Symbol) -> Result<usize> {
    if n != 1 || i > 1 || j > 1 {
        return Err(Error::UnknownIrrep(format!("{n}[{i},{j}]")));
    }
    Ok(2 * i + j)
}

impl<'a> Eta<'a> {
    pub fn new(model: &'a Suq2Model, twist: ComplexMatrix, beta: f64) -> Self {
        let q = model.q();
        let d = &model.dirac;
        let mut fundamental = Vec::new();
        let mut commutators = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                let p = model.represent(&QAlgebraElement::fundamental(q, i, j));
                commutators.push(SparseOp::new(&(d * &p - &p * d)));
                fundamental.push(SparseOp::new(&p));
            }
        }
        let d_sq = (0..d.nrows()).map(|i| d[(i, i)].re.powi(2)).collect();
        Self {
            model,
            twist,
            beta,
            fundamental,
            commutators,
            d_sq,
        }
    }

    fn heat(&self, v: &mut DVector<C64>, s: f64) {
        for (x, &d2) in v.iter_mut().zip(&self.d_sq) {
            *x *= (-s * d2).exp();
        }
    }

    /// Value on spin-1/2 coefficient symbols `(1, i, j)`.
    pub fn eval(&self, args: &[Symbol]) -> Result<C64> {
        let slots = args.iter().map(slot).collect::<Result<Vec<_>>>()?;
        let s = self.beta / args.len() as f64;
        let mut acc = ZERO;
        for i in 0..self.twist.ncols() {
            let mut v: DVector<C64> = self.twist.column(i).into_owned();
            for &k in slots[1..].iter().rev() {
                self.heat(&mut v, s);
                v = self.commutators[k].apply(&v);
            }
            self.heat(&mut v, s);
            acc += self.fundamental[slots[0]].apply(&v)[i];
        }
        Ok(acc)
    }

    /// Bound on the change of `η` from the spins above the cutoff.
    ///
    /// Only trace paths that visit a spin above the cutoff differ from the
    /// untruncated value. Such a path moves by one half-spin per argument, so
    /// it stays at twice-spin `≥ N_d + 1 − ⌊len/2⌋` and every heat factor is at
    /// most `e^{-s d_min²}`. Blocks are weighted by `(Tr F_l)²`, the trace of
    /// `R_1` on spin `l`, which dominates `R`, `R'` and the identity.
    pub fn tail_bound(&self, args: &[Symbol]) -> Result<f64> {
        let mut norm = 1.0;
        for (p, a) in args.iter().enumerate() {
            let k = slot(a)?;
            norm *= if p == 0 {
                self.fundamental[k].norm
            } else {
                self.commutators[k].norm
            };
        }
        let q = self.model.q();
        let half = args.len() / 2;
        let floor = (self.model.gns.degree_cutoff + 1).saturating_sub(half);
        let spectrum = &self.model.spectrum;
        let d_abs = |n: usize| {
            (0..=n)
                .map(|r| spectrum.value(n, r).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let mut total = 0.0;
        for n in floor.. {
            let d_min = (n.saturating_sub(half).max(floor)..=n + half)
                .map(d_abs)
                .fold(f64::INFINITY, f64::min);
            let qdim: f64 = (0..=n).map(|j| q.powi(2 * j as i32 - n as i32)).sum();
            let term = qdim * qdim * (-self.beta * d_min * d_min).exp();
            if !term.is_finite() || n > floor + 10_000 {
                return Ok(f64::INFINITY);
            }
            total += term;
            if n > floor + args.len() && term < 1e-18 * total {
                break;
            }
        }
        Ok(norm * total)
    }
}

/// Products of spin-1/2 coefficients in the GNS basis, for
/// [`crate::peterweyl::invariance_defect`].
pub struct GnsProducts<'a> {
    pub gns: &'a GnsTruncation,
}

impl CoefficientProducts for GnsProducts<'_> {
    fn product(&self, symbols: &[Symbol]) -> Result<DVector<C64>> {
        let q = self.gns.q;
        let mut x = QAlgebraElement::one(q);
        for &(n, i, j) in symbols {
            if n != 1 || i > 1 || j > 1 {
                return Err(Error::UnknownIrrep(format!("{n}[{i},{j}]")));
            }
            x = normal_order(&x, &QAlgebraElement::fundamental(q, i, j));
        }
        self.gns.coords(&x)
    }

    fn unit(&self) -> DVector<C64> {
        self.gns
            .coords(&QAlgebraElement::one(self.gns.q))
            .expect("the unit has degree zero")
    }
}

/// Worst invariance defect of `η` over all spin-1/2 argument tuples of
/// length `n + 1`, together with the worst tail bound.
pub fn eta_invariance(
    model: &Suq2Model,
    twist: &ComplexMatrix,
    beta: f64,
    n: usize,
) -> Result<(f64, f64)> {
    let eta = Eta::new(model, twist.clone(), beta);
    let table = IrrepTable::suq2(model.q(), 1)?;
    let oracle = GnsProducts { gns: &model.gns };
    let symbols: Vec<Symbol> = (0..4).map(|k| (1, k / 2, k % 2)).collect();
    let mut worst = 0.0f64;
    let mut bound = 0.0f64;
    let len = n + 1;
    for code in 0..4usize.pow(len as u32) {
        let args: Vec<Symbol> = (0..len)
            .map(|p| symbols[(code / 4usize.pow(p as u32)) % 4])
            .collect();
        let d = crate::peterweyl::invariance_defect(&table, |s| eta.eval(s), &args, &oracle)?;
        worst = worst.max(d);
        bound = bound.max(eta.tail_bound(&args)?);
    }
    Ok((worst, bound))
}
