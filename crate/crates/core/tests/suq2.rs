use ncgtwist_core::error::Error;
use ncgtwist_core::findim::{frobenius, ComplexMatrix, C64};
use ncgtwist_core::peterweyl::{haar_pair, IrrepTable};
use ncgtwist_core::suq2::{
    comultiply, eta_invariance, fixed_point_basis, haar, haar_recovery, normal_order, u_element,
    GnsTruncation, HaarOracle, Monomial, QAlgebraElement, Suq2Config, Suq2Model, Tensor,
};
use proptest::prelude::*;

const Q: f64 = 0.5;

fn model(q: f64, n: usize) -> Suq2Model {
    Suq2Model::new(Suq2Config {
        q,
        degree_cutoff: n,
        ..Suq2Config::default()
    })
    .unwrap()
}

fn mono(q: f64, a: i32, m: u32, p: u32) -> QAlgebraElement {
    QAlgebraElement::monomial(q, Monomial::new(a, m, p), C64::new(1.0, 0.0))
}

fn sum_of_simple(
    q: f64,
    pairs: impl Iterator<Item = (QAlgebraElement, QAlgebraElement)>,
) -> Tensor {
    let mut t = Tensor::unit(q).scale(C64::new(0.0, 0.0));
    for (x, y) in pairs {
        t.add(&Tensor::simple(&x, &y));
    }
    t
}

fn n_op(q: f64) -> QAlgebraElement {
    normal_order(&QAlgebraElement::beta_star(q), &QAlgebraElement::beta(q))
}

/// Random element with small integer-ish coefficients on monomials up to `deg`.
fn element_strategy(q: f64, deg: usize) -> impl Strategy<Value = QAlgebraElement> {
    let monos = Monomial::up_to_degree(deg);
    let len = monos.len();
    prop::collection::vec((0..len, -2.0f64..2.0, -2.0f64..2.0), 1..4).prop_map(move |cs| {
        let mut x = QAlgebraElement::zero(q);
        for (k, re, im) in cs {
            x = &x + &QAlgebraElement::monomial(q, monos[k], C64::new(re, im));
        }
        x
    })
}

#[test]
fn haar_moments_match_the_invariance_oracle() {
    let oracle = HaarOracle::solve(Q, 6).unwrap();
    assert!(oracle.residual < 1e-10, "residual {}", oracle.residual);
    for m in Monomial::up_to_degree(6) {
        let x = mono(Q, m.a, m.m, m.p);
        let d = (haar(&x) - oracle.haar(&x).unwrap()).norm();
        assert!(d < 1e-10, "{m:?}: {d}");
    }
    // Hand values: h(β*β) = (1 − q²)/(1 − q⁴) = 1/(1 + q²).
    assert!((haar(&n_op(Q)).re - 0.8).abs() < 1e-14);
    let aas = normal_order(&QAlgebraElement::alpha(Q), &QAlgebraElement::alpha_star(Q));
    assert!((haar(&aas).re - 1.0 / (1.0 + Q * Q)).abs() < 1e-14);
}

#[test]
fn fundamental_corepresentation_is_unitary() {
    for q in [0.3, 0.5, 0.9] {
        // Σ_k t_ki* t_kj = δ_ij and Σ_k t_ik t_jk* = δ_ij.
        for i in 0..2 {
            for j in 0..2 {
                let mut left = QAlgebraElement::zero(q);
                let mut right = QAlgebraElement::zero(q);
                for k in 0..2 {
                    let ki = QAlgebraElement::fundamental(q, k, i).adjoint();
                    left = &left + &normal_order(&ki, &QAlgebraElement::fundamental(q, k, j));
                    let jk = QAlgebraElement::fundamental(q, j, k).adjoint();
                    right = &right + &normal_order(&QAlgebraElement::fundamental(q, i, k), &jk);
                }
                let target = if i == j {
                    QAlgebraElement::one(q)
                } else {
                    QAlgebraElement::zero(q)
                };
                assert!(left.distance(&target) < 1e-13, "q={q} ({i},{j})");
                assert!(right.distance(&target) < 1e-13, "q={q} ({i},{j})");
            }
        }
    }
}

#[test]
fn coproduct_of_fundamental_is_matrix_product() {
    let q = 0.7;
    for i in 0..2 {
        for j in 0..2 {
            let d = comultiply(&QAlgebraElement::fundamental(q, i, j)).unwrap();
            let expect = sum_of_simple(
                q,
                (0..2).map(|k| {
                    (
                        QAlgebraElement::fundamental(q, i, k),
                        QAlgebraElement::fundamental(q, k, j),
                    )
                }),
            );
            assert!(d.distance(&expect) < 1e-14, "({i},{j})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_is_associative(
        x in element_strategy(Q, 2),
        y in element_strategy(Q, 2),
        z in element_strategy(Q, 2),
    ) {
        let l = normal_order(&normal_order(&x, &y), &z);
        let r = normal_order(&x, &normal_order(&y, &z));
        prop_assert!(l.distance(&r) <= 1e-12 * (1.0 + l.max_coeff()));
    }

    #[test]
    fn coproduct_is_multiplicative_and_counital(
        x in element_strategy(Q, 2),
        y in element_strategy(Q, 2),
    ) {
        let dx = comultiply(&x).unwrap();
        let dy = comultiply(&y).unwrap();
        let dxy = comultiply(&normal_order(&x, &y)).unwrap();
        prop_assert!(dxy.distance(&dx.mul(&dy)) <= 1e-11 * (1.0 + dxy.max_coeff()));
        let back = dx.contract_left(|a| a.counit());
        prop_assert!(back.distance(&x) <= 1e-12);
        let back = dx.contract_right(|a| a.counit());
        prop_assert!(back.distance(&x) <= 1e-12);
    }

    #[test]
    fn haar_is_invariant(x in element_strategy(Q, 3)) {
        let dx = comultiply(&x).unwrap();
        let h = haar(&x);
        let left = dx.contract_left(haar);
        let right = dx.contract_right(haar);
        let one = QAlgebraElement::one(Q).scale(h);
        prop_assert!(left.distance(&one) <= 1e-12);
        prop_assert!(right.distance(&one) <= 1e-12);
    }

    #[test]
    fn haar_is_positive(x in element_strategy(Q, 3)) {
        let v = haar(&normal_order(&x.adjoint(), &x));
        prop_assert!(v.im.abs() < 1e-12 && v.re > -1e-12);
    }
}

#[test]
fn gram_matches_symbolic_haar() {
    let g = GnsTruncation::build(Q, 4).unwrap();
    for (i, x) in g.basis.iter().enumerate() {
        for (j, y) in g.basis.iter().enumerate() {
            let xs = mono(Q, x.a, x.m, x.p).adjoint();
            let h = haar(&normal_order(&xs, &mono(Q, y.a, y.m, y.p)));
            let d = (g.gram[(i, j)] - h).norm();
            assert!(d < 1e-12, "{x:?} {y:?}: {d}");
        }
    }
}

#[test]
fn onb_is_orthonormal_for_the_haar_state() {
    let g = GnsTruncation::build(Q, 5).unwrap();
    let n = g.dim();
    for i in 0..n {
        for j in 0..n {
            let h = haar(&normal_order(&g.element(i).adjoint(), &g.element(j)));
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((h - C64::new(target, 0.0)).norm() < 1e-8, "({i},{j}) {h}");
        }
    }
}

#[test]
fn representation_is_multiplicative_on_the_safe_subspace() {
    let g = GnsTruncation::build(Q, 6).unwrap();
    let gens = [
        QAlgebraElement::alpha(Q),
        QAlgebraElement::alpha_star(Q),
        QAlgebraElement::beta(Q),
        QAlgebraElement::beta_star(Q),
    ];
    // Vectors of degree ≤ N_d − 2 stay inside after two generators.
    let safe: Vec<usize> = (0..g.dim())
        .filter(|&i| g.labels[i].twice_spin + 2 <= g.degree_cutoff)
        .collect();
    for x in &gens {
        for y in &gens {
            let lhs = g.represent(&normal_order(x, y));
            let rhs = g.represent(x) * g.represent(y);
            for &c in &safe {
                let d = (lhs.column(c) - rhs.column(c)).norm();
                assert!(d < 1e-10, "column {c}: {d}");
            }
        }
    }
    // Adjoint is represented by the conjugate transpose.
    for x in &gens {
        let d = frobenius(&(g.represent(&x.adjoint()) - g.represent(x).adjoint()));
        assert!(d < 1e-10);
    }
}

#[test]
fn twist_eigenvalues_follow_the_weights() {
    for q in [0.4, 0.6] {
        let g = GnsTruncation::build(q, 5).unwrap();
        let r = g.build_r().unwrap();
        let rp = g.build_rprime().unwrap();
        for (i, l) in g.labels.iter().enumerate() {
            let (a, s) = l.weight;
            assert!((r[(i, i)].re - q.powi(-(a + s))).abs() < 1e-10 * q.powi(-(a + s)));
            assert!((rp[(i, i)].re - q.powi(-(a - s))).abs() < 1e-10 * q.powi(-(a - s)));
            // Column index of the block carries R, row index carries R'.
            let n = l.twice_spin as i32;
            assert!((r[(i, i)].re - q.powi(2 * l.col as i32 - n)).abs() < 1e-9 * r[(i, i)].re);
            assert!((rp[(i, i)].re - q.powi(2 * l.row as i32 - n)).abs() < 1e-9 * rp[(i, i)].re);
        }
        assert!(frobenius(&(&r * &rp - &rp * &r)) < 1e-10);
        // Off-diagonal parts vanish.
        let mut off = r.clone();
        off.fill_diagonal(C64::new(0.0, 0.0));
        assert!(frobenius(&off) < 1e-9 * frobenius(&r));
    }
}

#[test]
fn r1_fixes_beta_and_not_alpha() {
    let m = model(Q, 5);
    let b = m.represent(&QAlgebraElement::beta(Q));
    let a = m.represent(&QAlgebraElement::alpha(Q));
    assert!(frobenius(&(m.sigma(&b) - &b)) < 1e-10 * frobenius(&b));
    assert!(frobenius(&(m.sigma(&a) - &a)) > 0.1 * frobenius(&a));
    let r1 = m.gns.build_r1().unwrap();
    assert!(frobenius(&(r1 - &m.r1)) < 1e-9 * frobenius(&m.r1));
}

#[test]
fn fixed_point_algebra_is_generated_by_beta() {
    let m = model(Q, 4);
    let candidates: Vec<QAlgebraElement> = Monomial::up_to_degree(2)
        .into_iter()
        .map(|x| mono(Q, x.a, x.m, x.p))
        .collect();
    let fixed = fixed_point_basis(&m, &candidates, 1e-8).unwrap();
    // Exactly the α-free monomials of degree ≤ 2: 1, β, β*, β², ββ*, β*².
    assert_eq!(fixed.elements.len(), 6);
    let b = m.represent(&QAlgebraElement::beta(Q));
    assert!(fixed.projection_defect(&b) < 1e-8);
    let a = m.represent(&QAlgebraElement::alpha(Q));
    assert!(fixed.projection_defect(&a) > 0.1);
}

#[test]
fn matrix_coefficients_reproduce_the_fundamental() {
    let g = GnsTruncation::build(Q, 4).unwrap();
    let t = g.matrix_coefficients(1).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let d = t[i][j].distance(&QAlgebraElement::fundamental(Q, i, j));
            assert!(d < 1e-10, "({i},{j}): {d}");
        }
    }
}

#[test]
fn matrix_coefficients_have_peter_weyl_haar_values() {
    let g = GnsTruncation::build(Q, 4).unwrap();
    let table = IrrepTable::suq2(Q, 4).unwrap();
    for n in 0..=2 {
        let tn = g.matrix_coefficients(n).unwrap();
        for m in 0..=2 {
            let tm = g.matrix_coefficients(m).unwrap();
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=m {
                        for l in 0..=m {
                            let h = haar(&normal_order(&tn[i][j], &tm[k][l].adjoint()));
                            let expect = haar_pair(&table, (n, i, j), (m, k, l)).unwrap();
                            assert!((h - expect).norm() < 1e-9, "{n}[{i}{j}] {m}[{k}{l}]");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn matrix_coefficients_are_corepresentations() {
    let g = GnsTruncation::build(Q, 4).unwrap();
    for n in 1..=3 {
        let t = g.matrix_coefficients(n).unwrap();
        for i in 0..=n {
            for j in 0..=n {
                let d = comultiply(&t[i][j]).unwrap();
                let expect = sum_of_simple(Q, (0..=n).map(|k| (t[i][k].clone(), t[k][j].clone())));
                assert!(d.distance(&expect) < 1e-9, "{n}[{i}{j}]");
                assert!((t[i][j].counit() - C64::new((i == j) as u8 as f64, 0.0)).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn haar_is_recovered_from_the_twisted_trace() {
    let m = model(Q, 6);
    let lambda = |n: usize| (-10.0 * (n as f64 + 1.0)).exp();
    let one = haar_recovery(&m, &QAlgebraElement::one(Q), lambda, 1e-6).unwrap();
    assert!((one.value.re - 1.0).abs() < 1e-14);
    let x = n_op(Q);
    let r = haar_recovery(&m, &x, lambda, 1e-6).unwrap();
    assert!((r.value - haar(&x)).norm() <= 1e-10 + r.tail);
    let x2 = normal_order(&x, &x);
    let r = haar_recovery(&m, &x2, lambda, 1e-6).unwrap();
    assert!((r.value.re - 0.761904761904762).abs() <= 1e-10 + r.tail);
    // Slow decay cannot be certified.
    let slow = haar_recovery(&m, &x, |_| 1.0, 1e-6);
    assert!(matches!(slow, Err(Error::TailTooLarge { .. })));
}

#[test]
fn eta_is_invariant_only_with_the_twist() {
    let m = model(Q, 4);
    let beta = 1.0;
    for n in [0, 1, 2] {
        let (defect, tail) = eta_invariance(&m, &m.r1, beta, n).unwrap();
        assert!(defect <= 1e-12 + tail, "n={n}: {defect} tail {tail}");
    }
    let id = ComplexMatrix::identity(m.gns.dim(), m.gns.dim());
    let (defect, _) = eta_invariance(&m, &id, beta, 1).unwrap();
    assert!(defect > 1e-3, "untwisted trace looked invariant: {defect}");
}

#[test]
fn u_is_unitary_on_the_truncation() {
    // Low spins converge to exact unitarity as the cutoff rises.
    let mut previous = f64::INFINITY;
    for n in [4, 6, 8] {
        let u = u_element(&model(Q, n), 0.05).unwrap();
        assert!(u.rank > 0 && u.gap > 1e-6);
        let low = u.defect_by_spin[0].max(u.defect_by_spin[1]);
        assert!(low < previous, "N={n}: {low} after {previous}");
        assert!(u.unitarity_defect >= low);
        previous = low;
    }
    assert!(previous < 1e-6, "{previous}");
    let m = model(Q, 6);
    // The cut sits exactly on an eigenvalue of β*β: eigenvalues are q^{2k}
    // up to truncation, and 1 − ε = 0.25 = q² is one of them only in the
    // untruncated limit, so a cut within 1e-6 of a computed eigenvalue fails.
    let evals = ncgtwist_core::findim::hermitian_eigen(&m.represent(&n_op(Q)))
        .unwrap()
        .eigenvalues;
    let s = evals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at = u_element(&m, 1.0 - s);
    assert!(matches!(at, Err(Error::SpectralGapTooSmall { .. })));
}

#[test]
fn gram_positivity_and_its_limit() {
    for q in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
        for n in 1..=8 {
            let resolvable = q >= 0.5 || (q >= 0.4 && n <= 7) || n <= 6;
            match GnsTruncation::build(q, n) {
                Ok(g) => {
                    assert!(resolvable, "q={q} N={n} built with ratio {}", g.gram_ratio);
                    assert!(g.gram_ratio > 1e-12);
                }
                // Near-dependence of high powers of β*β at small q.
                Err(Error::GramSingular { ratio }) => {
                    assert!(!resolvable, "q={q} N={n} ratio {ratio}");
                    assert!(ratio <= 1e-12);
                }
                Err(e) => panic!("q={q} N={n}: {e}"),
            }
        }
    }
}

#[test]
fn identified_f_blocks_are_balanced() {
    let q = 0.6;
    let g = GnsTruncation::build(q, 4).unwrap();
    let table = g.identified_table(&g.build_r().unwrap()).unwrap();
    let reference = IrrepTable::suq2(q, 4).unwrap();
    for n in 0..=4usize {
        let got = table.get(n).unwrap();
        // [n+1]_q = (q^{-(n+1)} − q^{n+1}) / (q^{-1} − q)
        let qint = (q.powi(-(n as i32 + 1)) - q.powi(n as i32 + 1)) / (1.0 / q - q);
        assert!((got.m - qint).abs() < 1e-8 * qint, "2l={n}");
        let inv_trace = got.f.clone().try_inverse().unwrap().trace().re;
        assert!((inv_trace - qint).abs() < 1e-8 * qint);
        let d = frobenius(&(&got.f - &reference.get(n).unwrap().f));
        assert!(d < 1e-8 * qint, "2l={n}: {d}");
    }
}

#[test]
fn dirac_is_equivariant_and_configurable() {
    let m = model(Q, 5);
    let d = &m.dirac;
    assert!(frobenius(&(d * &m.r - &m.r * d)) < 1e-9);
    assert!(frobenius(&(d * &m.r_prime - &m.r_prime * d)) < 1e-9);
    assert!(frobenius(&(d - d.adjoint())) < 1e-14);
    let zero = Suq2Model::new(Suq2Config {
        q: Q,
        degree_cutoff: 3,
        dirac: (0..=6).map(|n| (n as f64 / 2.0, 0.0, 1.0)).collect(),
        epsilon_u: 0.05,
    })
    .unwrap();
    assert_eq!(frobenius(&zero.dirac), 0.0);
    let signed = Suq2Model::new(Suq2Config {
        q: Q,
        degree_cutoff: 3,
        dirac: vec![(0.5, 4.0, -1.0)],
        epsilon_u: 0.05,
    })
    .unwrap();
    for (i, l) in signed.gns.labels.iter().enumerate() {
        let expect = if l.twice_spin == 1 {
            -4.0
        } else {
            l.twice_spin as f64 + 1.0
        };
        assert_eq!(signed.dirac[(i, i)].re, expect);
    }
    let bad = Suq2Config {
        dirac: vec![(0.3, 1.0, 1.0)],
        ..Suq2Config::default()
    };
    assert!(Suq2Model::new(bad).is_err());
}

#[test]
fn config_round_trips_through_json() {
    let text = r#"{"q": 0.5, "degree_cutoff": 4, "dirac": [[0.5, 3.0, -1.0]], "epsilon_u": 0.1}"#;
    let c: Suq2Config = serde_json::from_str(text).unwrap();
    assert_eq!(c.dirac, vec![(0.5, 3.0, -1.0)]);
    let back: Suq2Config = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    let minimal: Suq2Config = serde_json::from_str(r#"{"q": 0.7, "degree_cutoff": 3}"#).unwrap();
    assert_eq!(minimal.epsilon_u, 0.05);
    assert!(minimal.dirac.is_empty());
}

#[test]
fn haar_recovery_kills_off_diagonal_monomials() {
    let m = model(Q, 6);
    let lambda = |n: usize| (-10.0 * (n as f64 + 1.0)).exp();
    let alpha = QAlgebraElement::alpha(Q);
    let ab = normal_order(&alpha, &QAlgebraElement::beta(Q));
    for x in [alpha, ab] {
        let r = haar_recovery(&m, &x, lambda, 1e-6).unwrap();
        assert!(r.value.norm() <= r.tail + 1e-8);
    }
}
