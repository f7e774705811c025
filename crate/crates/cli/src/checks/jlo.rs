//! `verify-jlo`: the twisted heat functional on random twisted contexts.

use ncgtwist_core::findim::ComplexMatrix;
use ncgtwist_core::jlo::{
    jlo_bound_defect, jlo_f_exact, jlo_f_quadrature, lemma24_defects, sup_sigma_norm, JloContext,
    QuadratureOptions,
};
use ncgtwist_core::synthetic::{random_dirac_triple, random_even_operator, random_matrix};
use ncgtwist_core::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Check, Measured};

const IDENTITIES: [&str; 6] = [
    "identity-i",
    "identity-ii",
    "identity-iii",
    "identity-iv",
    "identity-v",
    "identity-vi",
];

/// Alternating graded and ungraded contexts, with β cycling through
/// `β/2, β, 2β`, and `n + 1` random arguments.
fn corpus(
    rng: &mut ChaCha8Rng,
    cfg: &(usize, usize, usize, f64),
) -> Result<Vec<(JloContext, Vec<ComplexMatrix>)>> {
    let &(trials, hilbert_dim, n_max, beta) = cfg;
    (0..trials)
        .map(|i| {
            let graded = i % 2 == 0;
            let k = if graded {
                rng.random_range(1..=hilbert_dim / 2)
            } else {
                rng.random_range(2..=hilbert_dim)
            };
            let (d, r, g) = random_dirac_triple(rng, k, graded, 0.6);
            let b = beta * [0.5, 1.0, 2.0][i % 3];
            let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), b)?;
            let dim = d.nrows();
            let n = rng.random_range(0..=n_max);
            let args = (0..=n).map(|_| random_matrix(rng, dim, dim)).collect();
            Ok((ctx, args))
        })
        .collect()
}

/// Worst residual of each identity over graded and ungraded data.
fn identity_residuals(
    rng: &mut ChaCha8Rng,
    hilbert_dim: usize,
    n_max: usize,
    beta: f64,
) -> Result<[f64; 6]> {
    let mut worst = [0.0f64; 6];
    let half = (hilbert_dim / 2).max(1);
    for n in 1..=n_max {
        for trial in 0..4 {
            let b = beta * (0.7 + 0.3 * trial as f64);
            let (d, r, g) = random_dirac_triple(rng, half, true, 0.6);
            let ctx = JloContext::from_dirac(&d, &r, g.as_ref(), b)?;
            let args: Vec<ComplexMatrix> = (0..n + 2)
                .map(|_| random_even_operator(rng, half))
                .collect();
            for (w, x) in worst.iter_mut().zip(lemma24_defects(&ctx, &args)?) {
                *w = w.max(x);
            }
            let (d, r, _) = random_dirac_triple(rng, hilbert_dim, false, 0.6);
            let ctx = JloContext::from_dirac(&d, &r, None, b)?;
            let args: Vec<ComplexMatrix> = (0..n + 2)
                .map(|_| random_matrix(rng, hilbert_dim, hilbert_dim))
                .collect();
            // Without a grading the last identity holds only for even n.
            let checked = if n % 2 == 0 { 6 } else { 5 };
            for (w, x) in worst
                .iter_mut()
                .zip(lemma24_defects(&ctx, &args)?)
                .take(checked)
            {
                *w = w.max(x);
            }
        }
    }
    Ok(worst)
}

pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    let setup = (cfg.trials, cfg.hilbert_dim, cfg.n_max.min(3), cfg.beta);
    let params = json!({
        "trials": setup.0,
        "hilbert_dim": setup.1,
        "n_max": setup.2,
        "beta": setup.3,
    });
    let mut out = vec![
        Check::new("dual-path", 1e-8, params.clone(), move |rng| {
            let mut worst = 0.0f64;
            for (ctx, args) in corpus(rng, &setup)? {
                let exact = jlo_f_exact(&ctx, &args)?;
                let quad = jlo_f_quadrature(&ctx, &args, &QuadratureOptions::default())?;
                worst = worst.max((exact - quad.value).norm() / exact.norm());
            }
            Ok(Measured::new(worst))
        }),
        Check::new("heat-bound", 1e-10, params.clone(), move |rng| {
            let mut lowest = f64::INFINITY;
            for (ctx, args) in corpus(rng, &setup)? {
                let c: Vec<f64> = args.iter().map(|a| sup_sigma_norm(&ctx, a)).collect();
                lowest = lowest.min(jlo_bound_defect(&ctx, &args, &c)?);
            }
            // Reported as the excess of |F| over its bound.
            Ok(Measured::new((-lowest).max(0.0)).with("smallest_margin", lowest))
        }),
    ];
    for (i, name) in IDENTITIES.iter().enumerate() {
        let p = json!({ "hilbert_dim": setup.1, "n_max": setup.2, "beta": setup.3 });
        out.push(Check::new(name, 1e-8, p, move |rng| {
            let worst = identity_residuals(rng, setup.1, setup.2, setup.3)?;
            Ok(Measured::new(worst[i]))
        }));
    }
    out
}
