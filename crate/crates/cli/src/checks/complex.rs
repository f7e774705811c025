//! `verify-complex`: the twisted cyclic bicomplex on random algebras.

use ncgtwist_core::cochain::{invariance_defect, op_b, op_big_b, Cochain};
use ncgtwist_core::synthetic::{
    random_algebra, random_invariant_cochain, AlgebraKind, SyntheticAlgebra, ALGEBRA_KINDS,
};
use ncgtwist_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Check, Measured};

fn kind_dim(kind: AlgebraKind) -> usize {
    match kind {
        AlgebraKind::Scalars => 1,
        AlgebraKind::Cyclic(m) => m,
        AlgebraKind::UpperTriangular => 3,
        AlgebraKind::Full2 => 4,
    }
}

/// Runs `measure` on `trials` random (algebra, invariant cochain) pairs and
/// returns the largest value, relative to the cochain size.
fn worst_over_corpus(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n_max: usize,
    trials: usize,
    measure: impl Fn(&SyntheticAlgebra, &Cochain) -> Result<f64>,
) -> Result<f64> {
    let kinds: Vec<AlgebraKind> = ALGEBRA_KINDS
        .into_iter()
        .filter(|&k| k != AlgebraKind::Scalars && kind_dim(k) <= dim)
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let syn = random_algebra(rng, kind)?;
        let degree = rng.random_range(0..=n_max);
        let phi = random_invariant_cochain(rng, &syn, degree)?;
        worst = worst.max(measure(&syn, &phi)? / phi.max_norm());
    }
    Ok(worst)
}

pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    let (dim, n_max, trials) = (cfg.dim, cfg.n_max, cfg.trials);
    let params = json!({ "dim": dim, "n_max": n_max, "trials": trials });
    let corpus =
        move |name: &str, measure: fn(&SyntheticAlgebra, &Cochain) -> Result<f64>| -> Check {
            Check::new(name, 1e-10, params.clone(), move |rng| {
                let worst = worst_over_corpus(rng, dim, n_max, trials, measure)?;
                Ok(Measured::new(worst))
            })
        };
    vec![
        corpus("b-squared", |syn, phi| {
            let a = &syn.algebra;
            Ok(op_b(a, &op_b(a, phi)?)?.max_norm())
        }),
        corpus("B-squared", |syn, phi| {
            let a = &syn.algebra;
            Ok(match op_big_b(a, phi)? {
                Some(big) => op_big_b(a, &big)?.map_or(0.0, |x| x.max_norm()),
                None => 0.0,
            })
        }),
        corpus("bB-plus-Bb", |syn, phi| {
            let a = &syn.algebra;
            let Some(big) = op_big_b(a, phi)? else {
                return Ok(0.0);
            };
            let b = op_b(a, phi)?;
            let bb = op_big_b(a, &b)?.expect("degree of b is positive");
            Ok(op_b(a, &big)?.add(&bb)?.max_norm())
        }),
        corpus("b-invariance", |syn, phi| {
            invariance_defect(&syn.algebra, &op_b(&syn.algebra, phi)?)
        }),
        corpus("B-invariance", |syn, phi| {
            match op_big_b(&syn.algebra, phi)? {
                Some(big) => invariance_defect(&syn.algebra, &big),
                None => Ok(0.0),
            }
        }),
    ]
}
