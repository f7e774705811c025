//! `suq2-haar`, `suq2-invariance` and `pairing-suq2`.

use ncgtwist_core::findim::{frobenius, identity, C64};
use ncgtwist_core::jlo::JloContext;
use ncgtwist_core::peterweyl::haar_pair;
use ncgtwist_core::spectral::odd_pairing_series;
use ncgtwist_core::suq2::{
    eta_invariance, fixed_point_basis, haar, haar_recovery, normal_order, u_element, GnsTruncation,
    HaarOracle, Monomial, QAlgebraElement, Suq2Config, Suq2Model,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{Check, Measured};

fn model_params(m: &Suq2Config) -> Value {
    json!({ "q": m.q, "degree_cutoff": m.degree_cutoff, "epsilon_u": m.epsilon_u })
}

fn with_params(m: &Suq2Config, extra: Value) -> Value {
    let mut p = model_params(m);
    if let (Value::Object(p), Value::Object(extra)) = (&mut p, extra) {
        p.extend(extra);
    }
    p
}

fn one(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The elements whose Haar state is recovered, by check name.
fn recovery_cases(q: f64) -> Vec<(&'static str, QAlgebraElement)> {
    let n = normal_order(&QAlgebraElement::beta_star(q), &QAlgebraElement::beta(q));
    let alpha = QAlgebraElement::alpha(q);
    vec![
        ("recover-one", QAlgebraElement::one(q)),
        ("recover-bstar-b", n.clone()),
        ("recover-bstar-b-squared", normal_order(&n, &n)),
        ("recover-alpha", alpha.clone()),
        (
            "recover-alpha-beta",
            normal_order(&alpha, &QAlgebraElement::beta(q)),
        ),
    ]
}

pub fn haar_checks(cfg: &RunConfig) -> Vec<Check> {
    let model = cfg.model.clone();
    let q = model.q;
    let oracle_degree = (2 * model.degree_cutoff).max(4);
    let mut out = Vec::new();
    out.push(Check::new(
        "oracle-vs-moments",
        1e-10,
        json!({ "q": q, "degree": oracle_degree }),
        move |_| {
            let oracle = HaarOracle::solve(q, oracle_degree)?;
            let mut gap = 0.0f64;
            for m in Monomial::up_to_degree(oracle_degree) {
                let x = QAlgebraElement::monomial(q, m, one(1.0));
                gap = gap.max((haar(&x) - oracle.haar(&x)?).norm());
            }
            Ok(Measured::new(gap))
        },
    ));
    for (name, a) in recovery_cases(q) {
        let m = model.clone();
        let params = with_params(
            &m,
            json!({ "lambda": "exp(-10(2l+1))", "oracle_degree": 12 }),
        );
        out.push(Check::new(name, 1e-8, params, move |_| {
            let model = Suq2Model::new(m.clone())?;
            let oracle = HaarOracle::solve(q, a.degree().max(12))?;
            let lambda = |n: usize| (-10.0 * (n as f64 + 1.0)).exp();
            let r = haar_recovery(&model, &a, lambda, 1e-6)?;
            let expect = oracle.haar(&a)?;
            Ok(Measured::new((r.value - expect).norm())
                .tail(r.tail)
                .with("value", r.value.re)
                .with("value_im", r.value.im)
                .with("oracle", expect.re)
                .with("truncation_tail", r.tail))
        }));
    }
    let spins = model.degree_cutoff.min(4);
    out.push(Check::new(
        "woronowicz-traces",
        1e-8,
        json!({ "q": q, "max_twice_spin": spins }),
        move |_| {
            let g = GnsTruncation::build(q, spins)?;
            let table = g.identified_table(&g.build_r()?)?;
            let mut gap = 0.0f64;
            for n in 0..=spins {
                let f = &table.get(n)?.f;
                let qint = (q.powi(-(n as i32 + 1)) - q.powi(n as i32 + 1)) / (1.0 / q - q);
                let tr_inv = f
                    .clone()
                    .try_inverse()
                    .map_or(f64::INFINITY, |x| x.trace().re);
                gap = gap
                    .max((f.trace().re - qint).abs() / qint)
                    .max((tr_inv - qint).abs() / qint);
            }
            Ok(Measured::new(gap))
        },
    ));
    out.push(Check::new(
        "haar-pair-vs-gns",
        1e-8,
        json!({ "q": q, "max_twice_spin": spins }),
        move |_| {
            let g = GnsTruncation::build(q, spins)?;
            let table = g.identified_table(&g.build_r()?)?;
            let mut gap = 0.0f64;
            for n in 0..=spins {
                let t = g.matrix_coefficients(n)?;
                // ⟨x*, y*⟩ = h(x y*) in the GNS space.
                let mut v = Vec::new();
                for row in &t {
                    let mut r = Vec::new();
                    for x in row {
                        r.push(g.coords(&x.adjoint())?);
                    }
                    v.push(r);
                }
                let d = n + 1;
                for z in 0..d.pow(4) {
                    let (i, j, k, l) = (z % d, (z / d) % d, (z / d / d) % d, z / d / d / d);
                    let expect = haar_pair(&table, (n, i, j), (n, k, l))?;
                    gap = gap.max((v[i][j].dotc(&v[k][l]) - expect).norm());
                }
            }
            Ok(Measured::new(gap))
        },
    ));
    out
}

pub fn invariance_checks(cfg: &RunConfig) -> Vec<Check> {
    let model = cfg.model.clone();
    let beta = cfg.beta;
    let mut out = Vec::new();
    for n in 0..=2usize {
        let m = model.clone();
        let params = with_params(&m, json!({ "beta": beta, "n": n, "twist": "R1" }));
        out.push(Check::new(
            &format!("eta-invariance-n{n}"),
            0.0,
            params,
            move |_| {
                let model = Suq2Model::new(m.clone())?;
                let (defect, tail) = eta_invariance(&model, &model.r1, beta, n)?;
                Ok(Measured::new(defect)
                    .tail(tail)
                    .with("truncation_tail", tail))
            },
        ));
    }
    let m = model.clone();
    let params = with_params(&m, json!({ "beta": beta, "n": 1, "twist": "identity" }));
    out.push(
        Check::new("eta-untwisted-n1", 1e-3, params, move |_| {
            let model = Suq2Model::new(m.clone())?;
            let (defect, tail) = eta_invariance(&model, &identity(model.gns.dim()), beta, 1)?;
            Ok(Measured::new(defect).with("truncation_tail", tail))
        })
        .lower()
        .diagnostic(),
    );
    let m = model.clone();
    out.push(Check::new(
        "beta-fixed",
        1e-8,
        model_params(&m),
        move |_| {
            let model = Suq2Model::new(m.clone())?;
            let b = model.represent(&QAlgebraElement::beta(m.q));
            Ok(Measured::new(frobenius(&(model.sigma(&b) - &b))))
        },
    ));
    let m = model.clone();
    out.push(
        Check::new("alpha-not-fixed", 0.1, model_params(&m), move |_| {
            let model = Suq2Model::new(m.clone())?;
            let candidates: Vec<QAlgebraElement> = Monomial::up_to_degree(2)
                .into_iter()
                .map(|x| QAlgebraElement::monomial(m.q, x, one(1.0)))
                .collect();
            let fixed = fixed_point_basis(&model, &candidates, 1e-8)?;
            let alpha = model.represent(&QAlgebraElement::alpha(m.q));
            Ok(Measured::new(fixed.projection_defect(&alpha))
                .with("fixed_basis_size", fixed.elements.len()))
        })
        .lower(),
    );
    let m = model;
    out.push(
        Check::new("u-low-spin-unitarity", 1e-6, model_params(&m), move |_| {
            let model = Suq2Model::new(m.clone())?;
            let u = u_element(&model, m.epsilon_u)?;
            let low = u.defect_by_spin.iter().take(2).copied().fold(0.0, f64::max);
            Ok(Measured::new(low)
                .with("defect_by_spin", &u.defect_by_spin)
                .with("full_defect", u.unitarity_defect)
                .with("spectral_gap", u.gap)
                .with("rank", u.rank))
        })
        .diagnostic(),
    );
    out
}

pub fn pairing_checks(cfg: &RunConfig) -> Vec<Check> {
    let m = cfg.model.clone();
    let (beta, terms) = (cfg.beta, cfg.terms);
    let params = with_params(&m, json!({ "beta": beta, "terms": terms }));
    vec![Check::new("odd-pairing-u", f64::NAN, params, move |_| {
        let model = Suq2Model::new(m.clone())?;
        let u = u_element(&model, m.epsilon_u)?;
        let ctx = JloContext::from_dirac(&model.dirac, &model.r1, None, beta)?;
        let p = odd_pairing_series(&ctx, &model.dirac, &u.u.adjoint(), &u.u, beta, terms)?;
        let sigma_defect = frobenius(&(model.sigma(&u.u) - &u.u)) / frobenius(&u.u);
        Ok(Measured::new(p.tail)
            .verdict(true)
            .with("value_re", p.value.re)
            .with("value_im", p.value.im)
            .with("last_term", p.tail)
            .with("u_sigma_defect", sigma_defect)
            .with("u_defect_by_spin", &u.defect_by_spin)
            .with("note", "exploratory; no reference value"))
    })
    .diagnostic()]
}
