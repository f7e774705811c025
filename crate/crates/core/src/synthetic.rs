//! Random test data with known structure: algebras with diagonalizable
//! automorphisms, invariant cochains and twisted spectral data.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::FiniteAlgebra;
use crate::cochain::{contract_all_slots, tuples, Cochain, Parity};
use crate::error::Result;
use crate::findim::{direct_sum, identity, kron, real_diag, ComplexMatrix, C64, ONE, ZERO};
use crate::spectral::TwistedSpectralData;

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = random_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Positive matrix `W diag(r) W*` with log-normal eigenvalues.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> ComplexMatrix {
    let w = random_unitary(rng, n);
    let r: Vec<f64> = (0..n)
        .map(|_| (spread * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    &w * real_diag(&r) * w.adjoint()
}

fn unit_matrix(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(d, d);
    e[(i, j)] = ONE;
    e
}

/// An algebra together with an eigenbasis of its automorphism.
#[derive(Debug, Clone)]
pub struct SyntheticAlgebra {
    pub algebra: FiniteAlgebra,
    /// Coordinates of the eigenvectors.
    pub eigvecs: Vec<Vec<C64>>,
    pub eigvals: Vec<C64>,
    /// Values on the basis of a nonzero σ-twisted trace `ω(xy) = ω(σ(y)x)`,
    /// when one exists. The cyclic shift on `C^m` (m > 1) admits none.
    pub twisted_trace: Option<Vec<C64>>,
    pub label: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    Scalars,
    /// `C^m` with the cyclic shift.
    Cyclic(usize),
    /// Upper-triangular 2×2 matrices.
    UpperTriangular,
    /// Full 2×2 matrices.
    Full2,
}

pub const ALGEBRA_KINDS: [AlgebraKind; 6] = [
    AlgebraKind::Scalars,
    AlgebraKind::Cyclic(2),
    AlgebraKind::Cyclic(3),
    AlgebraKind::Cyclic(4),
    AlgebraKind::UpperTriangular,
    AlgebraKind::Full2,
];

/// Random algebra of the given kind, in a randomly changed basis.
pub fn random_algebra<R: Rng + ?Sized>(rng: &mut R, kind: AlgebraKind) -> Result<SyntheticAlgebra> {
    let (basis, g, eig_mats, eigvals, label): (
        Vec<ComplexMatrix>,
        ComplexMatrix,
        Vec<ComplexMatrix>,
        Vec<C64>,
        _,
    ) = match kind {
        AlgebraKind::Scalars => (
            vec![identity(1)],
            identity(1),
            vec![identity(1)],
            vec![ONE],
            "scalars",
        ),
        AlgebraKind::Cyclic(m) => {
            let basis: Vec<_> = (0..m).map(|i| unit_matrix(m, i, i)).collect();
            // Ad(P) with P the cyclic permutation shifts the diagonal.
            let mut p = ComplexMatrix::zeros(m, m);
            for i in 0..m {
                p[((i + 1) % m, i)] = ONE;
            }
            let mut eig = Vec::new();
            let mut vals = Vec::new();
            for k in 0..m {
                let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
                let v = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    m,
                    (0..m).map(|j| w.powu(j as u32)),
                ));
                // P diag(v) P^{-1} = diag(v_{j-1}) = w^{-1} diag(v).
                eig.push(v);
                vals.push(w.inv());
            }
            (basis, p, eig, vals, "cyclic")
        }
        AlgebraKind::UpperTriangular => {
            let basis = vec![
                unit_matrix(2, 0, 0),
                unit_matrix(2, 0, 1),
                unit_matrix(2, 1, 1),
            ];
            let d: Vec<f64> = (0..2)
                .map(|_| (0.5 * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect();
            let mut v = identity(2);
            v[(0, 1)] = gaussian_c64(rng);
            let vi = v.clone().try_inverse().expect("unipotent");
            let g = &v * real_diag(&d) * &vi;
            let pairs = [(0, 0), (0, 1), (1, 1)];
            let eig = pairs
                .iter()
                .map(|&(i, j)| &v * unit_matrix(2, i, j) * &vi)
                .collect();
            let vals = pairs
                .iter()
                .map(|&(i, j)| C64::new(d[i] / d[j], 0.0))
                .collect();
            (basis, g, eig, vals, "upper-triangular")
        }
        AlgebraKind::Full2 => {
            let basis: Vec<_> = (0..2)
                .flat_map(|i| (0..2).map(move |j| unit_matrix(2, i, j)))
                .collect();
            let d: Vec<f64> = (0..2)
                .map(|_| (0.5 * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect();
            let w = random_unitary(rng, 2);
            let g = &w * real_diag(&d) * w.adjoint();
            let mut eig = Vec::new();
            let mut vals = Vec::new();
            for i in 0..2 {
                for j in 0..2 {
                    eig.push(&w * unit_matrix(2, i, j) * w.adjoint());
                    vals.push(C64::new(d[i] / d[j], 0.0));
                }
            }
            (basis, g, eig, vals, "full-2x2")
        }
    };
    let m = basis.len();
    let change = identity(m) + random_matrix(rng, m, m).scale(0.3 / (m as f64).sqrt());
    let new_basis: Vec<ComplexMatrix> = (0..m)
        .map(|a| {
            let mut x = ComplexMatrix::zeros(basis[0].nrows(), basis[0].ncols());
            for (b, e) in basis.iter().enumerate() {
                x += e * change[(b, a)];
            }
            x
        })
        .collect();
    let gi = g.clone().try_inverse().expect("invertible twist");
    // Tr(g^{-1}x) is a twisted trace for Ad(g).
    let twisted_trace = match kind {
        AlgebraKind::Cyclic(m) if m > 1 => None,
        _ => Some(new_basis.iter().map(|b| (&gi * b).trace()).collect()),
    };
    let algebra = FiniteAlgebra::from_matrix_basis(new_basis, |x| &g * x * &gi)?;
    let eigvecs = eig_mats
        .iter()
        .map(|e| algebra.matrix_coords(e).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticAlgebra {
        algebra,
        eigvecs,
        eigvals,
        twisted_trace,
        label,
    })
}

/// Random σ-invariant cochain, normalized to unit max-norm.
///
/// Values on eigenvector tuples are random where the eigenvalue product
/// is 1 and zero elsewhere; this is exactly the invariant subspace.
pub fn random_invariant_cochain<R: Rng + ?Sized>(
    rng: &mut R,
    syn: &SyntheticAlgebra,
    degree: usize,
) -> Result<Cochain> {
    let m = syn.algebra.dim();
    let psi: Vec<C64> = tuples(m, degree + 1)
        .map(|idx| {
            let prod: C64 = idx.iter().map(|&i| syn.eigvals[i]).product();
            if (prod - ONE).norm() < 1e-9 {
                gaussian_c64(rng)
            } else {
                ZERO
            }
        })
        .collect();
    let mut p = ComplexMatrix::zeros(m, m);
    for (j, v) in syn.eigvecs.iter().enumerate() {
        for k in 0..m {
            p[(k, j)] = v[k];
        }
    }
    // e_k = Σ_j Pinv[j][k] v_j.
    let pinv = p.try_inverse().expect("eigenbasis");
    let coeffs = contract_all_slots(&psi, m, degree as u32 + 1, &pinv);
    let scale = coeffs
        .iter()
        .fold(0.0f64, |a, z| a.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    let coeffs = coeffs.into_iter().map(|z| z / scale).collect();
    Cochain::new_invariant(&syn.algebra, degree, coeffs)
}

/// Random `(D, R, γ)` with `[D, R] = 0`.
///
/// Graded data lives on `C^k ⊕ C^k` with `γ = diag(1, −1)` and an odd `D`;
/// ungraded data lives on `C^k`. In both cases `H = D²` has a repeated
/// eigenvalue on which `R` is not scalar, so the joint basis is nontrivial.
pub fn random_dirac_triple<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    graded: bool,
    spread: f64,
) -> (ComplexMatrix, ComplexMatrix, Option<ComplexMatrix>) {
    let mut r: Vec<f64> = (0..k)
        .map(|_| (spread * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    if graded {
        let mut q: Vec<f64> = (0..k).map(|_| 0.3 + 1.2 * rng.random::<f64>()).collect();
        if k >= 2 {
            q[1] = q[0];
        }
        let v = random_unitary(rng, k);
        let w = random_unitary(rng, k);
        let qm = &w * real_diag(&q) * v.adjoint();
        let mut d = ComplexMatrix::zeros(2 * k, 2 * k);
        d.view_mut((k, 0), (k, k)).copy_from(&qm);
        d.view_mut((0, k), (k, k)).copy_from(&qm.adjoint());
        let mut rm = ComplexMatrix::zeros(2 * k, 2 * k);
        rm.view_mut((0, 0), (k, k))
            .copy_from(&(&v * real_diag(&r) * v.adjoint()));
        rm.view_mut((k, k), (k, k))
            .copy_from(&(&w * real_diag(&r) * w.adjoint()));
        let g: Vec<f64> = (0..2 * k).map(|i| if i < k { 1.0 } else { -1.0 }).collect();
        (d, rm, Some(real_diag(&g)))
    } else {
        let mut dv: Vec<f64> = (0..k).map(|_| 3.0 * rng.random::<f64>() - 1.5).collect();
        if k >= 3 {
            dv[1] = -dv[0];
            r[1] = r[0] * 1.7;
        }
        let u = random_unitary(rng, k);
        (
            &u * real_diag(&dv) * u.adjoint(),
            &u * real_diag(&r) * u.adjoint(),
            None,
        )
    }
}

/// Random operator commuting with `γ = diag(1_k, −1_k)`.
pub fn random_even_operator<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(2 * k, 2 * k);
    a.view_mut((0, 0), (k, k))
        .copy_from(&random_matrix(rng, k, k));
    a.view_mut((k, k), (k, k))
        .copy_from(&random_matrix(rng, k, k));
    a
}

/// Spectral data over `M_k` acting as `x ⊗ I_{p₊} ⊕ x ⊗ I_{p₋}` on the
/// graded halves, or as `x ⊗ I_p` for odd data.
#[derive(Debug, Clone)]
pub struct MatrixSpectralData {
    pub data: TwistedSpectralData,
    /// Eigenbasis of the twist on `C^k` (columns).
    pub frame: ComplexMatrix,
    pub twist_values: Vec<f64>,
    /// `(p₊, p₋)`; `p₋ = 0` for odd data.
    pub multiplicity: (usize, usize),
}

impl MatrixSpectralData {
    /// Image of `x ∈ M_k` in the represented algebra.
    pub fn embed(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (pp, pm) = self.multiplicity;
        let y = kron(x, &identity(pp));
        match self.data.parity {
            Parity::Even => direct_sum(&y, &kron(x, &identity(pm))),
            Parity::Odd => y,
        }
    }
}

fn matrix_units(k: usize) -> Vec<ComplexMatrix> {
    (0..k)
        .flat_map(|a| (0..k).map(move |b| unit_matrix(k, a, b)))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Even data on `(C^k ⊗ C^{p₊}) ⊕ (C^k ⊗ C^{p₋})`.
///
/// The twist is `R_a ⊗ diag(s_±)` on the two halves with `R_a = W diag(r) W*`,
/// and `D` couples `e_i ⊗ g_j` to `e_{i'} ⊗ g_{j'}` with a random coefficient
/// whenever the two twist eigenvalues agree, so that `[D, R] = 0`.
pub fn matrix_even_data<R: Rng + ?Sized>(
    rng: &mut R,
    r: &[f64],
    s_plus: &[f64],
    s_minus: &[f64],
) -> Result<MatrixSpectralData> {
    let k = r.len();
    let (pp, pm) = (s_plus.len(), s_minus.len());
    let w = random_unitary(rng, k);
    let mut q = ComplexMatrix::zeros(k * pm, k * pp);
    for i in 0..k {
        for j in 0..pp {
            for i2 in 0..k {
                for j2 in 0..pm {
                    if close(r[i] * s_plus[j], r[i2] * s_minus[j2]) {
                        q[(i2 * pm + j2, i * pp + j)] = gaussian_c64(rng) * 0.7;
                    }
                }
            }
        }
    }
    let q = kron(&w, &identity(pm)) * q * kron(&w, &identity(pp)).adjoint();
    let (np, nm) = (k * pp, k * pm);
    let mut d = ComplexMatrix::zeros(np + nm, np + nm);
    d.view_mut((np, 0), (nm, np)).copy_from(&q);
    d.view_mut((0, np), (np, nm)).copy_from(&q.adjoint());
    let ra = &w * real_diag(r) * w.adjoint();
    let twist = direct_sum(
        &kron(&ra, &real_diag(s_plus)),
        &kron(&ra, &real_diag(s_minus)),
    );
    let g: Vec<f64> = (0..np + nm)
        .map(|i| if i < np { 1.0 } else { -1.0 })
        .collect();
    let mut out = MatrixSpectralData {
        data: TwistedSpectralData {
            algebra_basis: vec![],
            d,
            r: twist,
            gamma: Some(real_diag(&g)),
            parity: Parity::Even,
        },
        frame: w,
        twist_values: r.to_vec(),
        multiplicity: (pp, pm),
    };
    let basis = matrix_units(k).iter().map(|e| out.embed(e)).collect();
    let TwistedSpectralData {
        d, r: twist, gamma, ..
    } = out.data;
    out.data = TwistedSpectralData::new(basis, d, twist, gamma, Parity::Even)?;
    Ok(out)
}

/// Odd data on `C^k ⊗ C^p` with `R = R_a ⊗ I` and `D` a random Hermitian
/// operator that preserves the eigenspaces of `R`.
pub fn matrix_odd_data<R: Rng + ?Sized>(
    rng: &mut R,
    r: &[f64],
    p: usize,
) -> Result<MatrixSpectralData> {
    let k = r.len();
    let w = random_unitary(rng, k);
    let n = k * p;
    let mut d = ComplexMatrix::zeros(n, n);
    for i in 0..k {
        for i2 in 0..k {
            if close(r[i], r[i2]) {
                for j in 0..p {
                    for j2 in 0..p {
                        d[(i2 * p + j2, i * p + j)] = gaussian_c64(rng) * 0.6;
                    }
                }
            }
        }
    }
    let d = (&d + d.adjoint()).scale(0.5);
    let frame = kron(&w, &identity(p));
    let d = &frame * d * frame.adjoint();
    let ra = &w * real_diag(r) * w.adjoint();
    let rr = kron(&ra, &identity(p));
    let basis = matrix_units(k)
        .iter()
        .map(|e| kron(e, &identity(p)))
        .collect();
    let data = TwistedSpectralData::new(basis, d, rr, None, Parity::Odd)?;
    Ok(MatrixSpectralData {
        data,
        frame: w,
        twist_values: r.to_vec(),
        multiplicity: (p, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::invariance_defect;
    use crate::findim::{frobenius, unitary_defect};
    use crate::rng::named_stream;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = named_stream(1, "unitary");
        assert!(unitary_defect(&random_unitary(&mut rng, 6)) < 1e-12);
    }

    #[test]
    fn eigvecs_are_eigvecs() {
        let mut rng = named_stream(3, "algebras");
        for kind in ALGEBRA_KINDS {
            let syn = random_algebra(&mut rng, kind).unwrap();
            for (v, l) in syn.eigvecs.iter().zip(&syn.eigvals) {
                let sv = syn.algebra.apply_sigma(v);
                let d = sv
                    .iter()
                    .zip(v)
                    .fold(0.0f64, |a, (x, y)| a.max((x - l * y).norm()));
                assert!(d < 1e-10, "{kind:?}: {d}");
            }
        }
    }

    #[test]
    fn invariant_cochains_pass_flag_check() {
        let mut rng = named_stream(5, "cochains");
        for kind in ALGEBRA_KINDS {
            let syn = random_algebra(&mut rng, kind).unwrap();
            for deg in 0..=3 {
                let c = random_invariant_cochain(&mut rng, &syn, deg).unwrap();
                assert!(c.max_norm() > 0.5);
                assert!(invariance_defect(&syn.algebra, &c).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn positive_matrix_is_hermitian() {
        let mut rng = named_stream(9, "pos");
        let r = random_positive(&mut rng, 4, 0.5);
        assert!(frobenius(&(&r - r.adjoint())) < 1e-12);
    }
}
