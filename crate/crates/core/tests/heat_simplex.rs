use ncgtwist_core::findim::{identity, operator_norm, ComplexMatrix, C64};
use ncgtwist_core::jlo::{
    jlo_bound_defect, jlo_f, jlo_f_exact, jlo_f_quadrature, lemma24_defects, sup_sigma_norm,
    JloContext, JloMethod, QuadratureOptions,
};
use ncgtwist_core::rng::named_stream;
use ncgtwist_core::simplex::{exp_simplex_weight, gauss_legendre_unit};
use ncgtwist_core::synthetic::{
    gaussian_c64, random_dirac_triple, random_even_operator, random_matrix,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Time-ordered integral through the block-bidiagonal matrix exponential:
/// the top-right block of `exp` of `[[−βH, βA_1, 0, …], [0, −βH, βA_2, …], …]`
/// is `∫ e^{−t_1H} A_1 e^{−(t_2−t_1)H} … A_n e^{−(β−t_n)H} dt`.
fn dyson_oracle(
    h: &ComplexMatrix,
    r: &ComplexMatrix,
    g: Option<&ComplexMatrix>,
    beta: f64,
    args: &[ComplexMatrix],
) -> C64 {
    let d = h.nrows();
    let n = args.len() - 1;
    let mut big = ComplexMatrix::zeros(d * (n + 1), d * (n + 1));
    for k in 0..=n {
        big.view_mut((k * d, k * d), (d, d))
            .copy_from(&(h * C64::new(-beta, 0.0)));
        if k < n {
            big.view_mut((k * d, (k + 1) * d), (d, d))
                .copy_from(&(&args[k + 1] * C64::new(beta, 0.0)));
        }
    }
    let e = big.exp();
    let block = e.view((0, n * d), (d, d)).into_owned();
    let front = match g {
        Some(g) => g * &args[0],
        None => args[0].clone(),
    };
    (front * block * r).trace()
}

fn simplex_oracle(nodes: &[f64], beta: f64) -> f64 {
    // Iterated integral over {δ ≥ 0, Σδ = 1} in the first three coordinates.
    assert_eq!(nodes.len(), 4);
    let (x, w) = gauss_legendre_unit(40);
    let mut total = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            for (c, wc) in x.iter().zip(&w) {
                let d1 = *a;
                let d2 = (1.0 - d1) * b;
                let d3 = (1.0 - d1 - d2) * c;
                let d4 = 1.0 - d1 - d2 - d3;
                let jac = (1.0 - d1) * (1.0 - d1 - d2);
                let e = nodes[0] * d1 + nodes[1] * d2 + nodes[2] * d3 + nodes[3] * d4;
                total += wa * wb * wc * jac * (-beta * e).exp();
            }
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_weight_is_symmetric_and_positive(seed in any::<u64>(), len in 1usize..=6, clustered in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes: Vec<f64> = (0..len).map(|_| 4.0 * rng.random::<f64>()).collect();
        if clustered && len > 1 {
            nodes[1] = nodes[0] + 1e-7;
        }
        let beta = 0.2 + 2.0 * rng.random::<f64>();
        let base = exp_simplex_weight(&nodes, beta).value;
        prop_assert!(base > 0.0);
        for _ in 0..100 {
            nodes.shuffle(&mut rng);
            let v = exp_simplex_weight(&nodes, beta).value;
            prop_assert!((v - base).abs() <= 1e-12 * base);
        }
    }

    #[test]
    fn jlo_is_multilinear(seed in any::<u64>(), n in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, r, g) = random_dirac_triple(&mut rng, 2, true, 0.5);
        let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), 1.0).unwrap();
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, 4, 4)).collect();
        let base = jlo_f_exact(&ctx, &args).unwrap();
        for slot in 0..=n {
            let x = random_matrix(&mut rng, 4, 4);
            let c = gaussian_c64(&mut rng);
            let mut with_x = args.clone();
            with_x[slot] = x.clone();
            let mut combo = args.clone();
            combo[slot] = &args[slot] + &x * c;
            let lhs = jlo_f_exact(&ctx, &combo).unwrap();
            let rhs = base + jlo_f_exact(&ctx, &with_x).unwrap() * c;
            let scale = 1.0 + base.norm() + (rhs - base).norm();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
        }
    }
}

#[test]
fn simplex_weight_matches_quadrature() {
    let mut rng = named_stream(21, "simplex-oracle");
    for _ in 0..10 {
        let nodes: Vec<f64> = (0..4).map(|_| 3.0 * rng.random::<f64>()).collect();
        let exact = exp_simplex_weight(&nodes, 1.0).value;
        let oracle = simplex_oracle(&nodes, 1.0);
        assert!(
            (exact - oracle).abs() <= 1e-10 * oracle,
            "{nodes:?}: {exact} vs {oracle}"
        );
    }
}

#[test]
fn exact_and_quadrature_agree() {
    let mut rng = named_stream(23, "exact-vs-quad");
    for (k, graded, n) in [
        (3, true, 2),
        (6, false, 2),
        (4, true, 3),
        (8, false, 3),
        (4, true, 1),
        (5, false, 0),
    ] {
        let (d, r, g) = random_dirac_triple(&mut rng, k, graded, 0.5);
        let dim = d.nrows();
        let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), 1.3).unwrap();
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, dim, dim)).collect();
        let exact = jlo_f(&ctx, &args, JloMethod::Exact).unwrap();
        let quad = jlo_f_quadrature(&ctx, &args, &QuadratureOptions::default()).unwrap();
        let rel = (exact - quad.value).norm() / exact.norm();
        assert!(
            rel <= 1e-8,
            "dim {dim} n {n}: rel {rel:e} at order {}",
            quad.order
        );
    }
}

#[test]
fn untwisted_exact_matches_dyson_exponential() {
    let mut rng = named_stream(25, "dyson");
    for n in 0..=3 {
        let (d, _, _) = random_dirac_triple(&mut rng, 5, false, 0.0);
        let h = &d * &d;
        let id = identity(5);
        let ctx = JloContext::new(&h, &id, None, 0.9).unwrap();
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, 5, 5)).collect();
        let exact = jlo_f_exact(&ctx, &args).unwrap();
        let oracle = dyson_oracle(&h, &id, None, 0.9, &args);
        assert!((exact - oracle).norm() <= 1e-8 * oracle.norm(), "n {n}");
    }
}

#[test]
fn twisted_graded_exact_matches_dyson_exponential() {
    let mut rng = named_stream(27, "dyson-twisted");
    for n in 0..=3 {
        let (d, r, g) = random_dirac_triple(&mut rng, 3, true, 0.7);
        let h = &d * &d;
        let ctx = JloContext::new(&h, &r, g.as_ref(), 1.7).unwrap();
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, 6, 6)).collect();
        let exact = jlo_f_exact(&ctx, &args).unwrap();
        let oracle = dyson_oracle(&h, &r, g.as_ref(), 1.7, &args);
        assert!((exact - oracle).norm() <= 1e-8 * oracle.norm(), "n {n}");
    }
}

#[test]
fn bound_holds_on_twisted_data() {
    let mut rng = named_stream(29, "bound");
    for trial in 0..12 {
        let graded = trial % 2 == 0;
        let (d, r, g) = random_dirac_triple(&mut rng, 3, graded, 0.8);
        let dim = d.nrows();
        let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), 0.5 + 0.25 * trial as f64).unwrap();
        let n = trial % 4;
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, dim, dim)).collect();
        let c: Vec<f64> = args.iter().map(|a| sup_sigma_norm(&ctx, a)).collect();
        assert!(jlo_bound_defect(&ctx, &args, &c).unwrap() >= -1e-10);
    }
}

#[test]
fn untwisted_bound_uses_operator_norms() {
    let mut rng = named_stream(31, "bound-untwisted");
    let (d, _, _) = random_dirac_triple(&mut rng, 4, false, 0.0);
    let ctx = JloContext::from_dirac(&d, &identity(4), None, 1.0).unwrap();
    let args: Vec<ComplexMatrix> = (0..3).map(|_| random_matrix(&mut rng, 4, 4)).collect();
    let c: Vec<f64> = args.iter().map(operator_norm).collect();
    for (a, ci) in args.iter().zip(&c) {
        assert!((sup_sigma_norm(&ctx, a) - ci).abs() < 1e-10 * ci);
    }
    assert!(jlo_bound_defect(&ctx, &args, &c).unwrap() >= 0.0);
}

#[test]
fn heat_identities_on_graded_data() {
    let mut rng = named_stream(33, "lemma-graded");
    for n in 1..=3 {
        for _ in 0..3 {
            let (d, r, g) = random_dirac_triple(&mut rng, 4, true, 0.6);
            let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), 1.1).unwrap();
            let args: Vec<ComplexMatrix> = (0..n + 2)
                .map(|_| random_even_operator(&mut rng, 4))
                .collect();
            let defects = lemma24_defects(&ctx, &args).unwrap();
            for (i, x) in defects.iter().enumerate() {
                assert!(*x <= 1e-8, "n {n} identity {}: {x:e}", i + 1);
            }
        }
    }
}

#[test]
fn heat_identities_on_ungraded_data() {
    let mut rng = named_stream(35, "lemma-ungraded");
    for n in 1..=3 {
        let (d, r, _) = random_dirac_triple(&mut rng, 6, false, 0.6);
        let ctx = JloContext::from_dirac(&d, &r, None, 0.8).unwrap();
        let args: Vec<ComplexMatrix> = (0..n + 2).map(|_| random_matrix(&mut rng, 6, 6)).collect();
        let defects = lemma24_defects(&ctx, &args).unwrap();
        let checked = if n % 2 == 0 { 6 } else { 5 };
        for (i, x) in defects.iter().take(checked).enumerate() {
            assert!(*x <= 1e-8, "n {n} identity {}: {x:e}", i + 1);
        }
    }
}

#[test]
fn identities_collapse_on_units() {
    let mut rng = named_stream(37, "lemma-units");
    let (d, r, g) = random_dirac_triple(&mut rng, 2, true, 0.5);
    let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), 1.0).unwrap();
    let args = vec![identity(4); 4];
    let defects = lemma24_defects(&ctx, &args).unwrap();
    assert!(defects[0] <= 1e-14);
    let dotted = ctx.dot(&identity(4));
    assert!(dotted.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn untwisted_cyclicity() {
    let mut rng = named_stream(39, "cyclic");
    let (d, _, _) = random_dirac_triple(&mut rng, 5, false, 0.0);
    let ctx = JloContext::from_dirac(&d, &identity(5), None, 1.0).unwrap();
    let args: Vec<ComplexMatrix> = (0..3).map(|_| random_matrix(&mut rng, 5, 5)).collect();
    let rotated = vec![args[2].clone(), args[0].clone(), args[1].clone()];
    let a = jlo_f_exact(&ctx, &args).unwrap();
    let b = jlo_f_exact(&ctx, &rotated).unwrap();
    assert!((a - b).norm() <= 1e-10 * a.norm());
}
