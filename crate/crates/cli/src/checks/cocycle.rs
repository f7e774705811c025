//! `verify-cocycle` and `pairing-synthetic`: Chern characters of synthetic
//! twisted spectral data and their pairings.

use ncgtwist_core::cochain::{tuples, Parity};
use ncgtwist_core::findim::{frobenius, identity, real_diag, ComplexMatrix, C64};
use ncgtwist_core::spectral::{
    chern, chern_odd, cocycle_defect, pair_even, ChernCharacter, OddReading, TwistedSpectralData,
};
use ncgtwist_core::synthetic::{matrix_even_data, matrix_odd_data};
use ncgtwist_core::Result;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Check, Measured};

const BALANCED: [f64; 2] = [1.0, 2.3];

// Unequal graded multiplicities give a nonzero twisted index.
const PAIR_R: [f64; 3] = [1.0, 1.0, 2.1];
const PAIR_PLUS: [f64; 2] = [1.0, 2.1];
const PAIR_MINUS: [f64; 1] = [2.1];

fn largest(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// Largest `(b + B)` residual relative to `1 + max component norm`.
fn closedness(ch: &ChernCharacter) -> Result<f64> {
    let scale = 1.0 + largest(&ch.components.norms);
    Ok(largest(&cocycle_defect(ch)?) / scale)
}

/// Untwisted time-ordered trace `Tr(γ A_0 e^{-s_0βH} A_1 ⋯)` integrated over
/// the simplex, read off the block-bidiagonal exponential.
fn dyson_trace(
    h: &ComplexMatrix,
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
    let block = big.exp().view((0, n * d), (d, d)).into_owned();
    let front = match g {
        Some(g) => g * &args[0],
        None => args[0].clone(),
    };
    (front * block).trace()
}

pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    let (beta, n_max) = (cfg.beta, cfg.n_max);
    let params = json!({ "beta": beta, "n_max": n_max });
    vec![
        Check::new("even-closedness", 1e-8, params.clone(), move |rng| {
            let mut worst = 0.0f64;
            let mut size = f64::INFINITY;
            for b in [beta / 2.0, beta, 2.0 * beta] {
                let syn = matrix_even_data(rng, &BALANCED, &BALANCED, &BALANCED)?;
                let ch = chern(&syn.data, b, n_max)?;
                worst = worst.max(closedness(&ch)?);
                size = size.min(ch.components.norms[1]);
            }
            Ok(Measured::new(worst).with("degree_2_norm", size))
        }),
        Check::new("odd-closedness", 1e-8, params.clone(), move |rng| {
            let syn = matrix_odd_data(rng, &[0.6, 1.9], 2)?;
            let ch = chern(&syn.data, beta, n_max)?;
            Ok(Measured::new(closedness(&ch)?).with("degree_1_norm", ch.components.norms[0]))
        }),
        Check::new("gamma-inserted-odd", 1e-8, params.clone(), move |rng| {
            let syn = matrix_even_data(rng, &BALANCED, &BALANCED, &BALANCED)?;
            let ch = chern_odd(&syn.data, beta, n_max.min(2), OddReading::GammaInserted)?;
            let size = largest(&ch.components.norms);
            Ok(Measured::new(size).with(
                "note",
                "odd formula with the grading in the first slot, on even data",
            ))
        })
        .diagnostic(),
        Check::new("untwisted-reduction", 1e-10, params, move |rng| {
            let syn = matrix_even_data(rng, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0])?;
            let ch = chern(&syn.data, beta, n_max.min(2))?;
            let data = &syn.data;
            let h = &data.d * &data.d;
            let basis = &data.algebra_basis;
            let comm: Vec<ComplexMatrix> =
                basis.iter().map(|a| &data.d * a - a * &data.d).collect();
            let mut worst = frobenius(&(&data.r - identity(data.dim())));
            for (n, comp) in ch.components.components.iter().enumerate() {
                for idx in tuples(basis.len(), 2 * n + 1) {
                    let mut args = vec![basis[idx[0]].clone()];
                    args.extend(idx[1..].iter().map(|&i| comm[i].clone()));
                    let oracle =
                        dyson_trace(&h, data.gamma.as_ref(), beta, &args) * beta.powi(-(n as i32));
                    worst = worst.max((oracle - comp.get(&idx)).norm());
                }
            }
            Ok(Measured::new(worst))
        }),
    ]
}

pub fn pairing_checks(cfg: &RunConfig) -> Vec<Check> {
    let (beta, terms) = (cfg.beta, cfg.terms);
    let params = json!({ "beta": beta, "terms": terms });
    vec![
        Check::new(
            "trivial-pairing",
            1e-9,
            json!({ "terms": terms }),
            move |_| {
                let data = TwistedSpectralData::new(
                    vec![
                        real_diag(&[1.0, 0.0, 1.0, 0.0]),
                        real_diag(&[0.0, 1.0, 0.0, 1.0]),
                    ],
                    ComplexMatrix::zeros(4, 4),
                    identity(4),
                    Some(real_diag(&[1.0, 1.0, -1.0, -1.0])),
                    Parity::Even,
                )?;
                let ch = chern(&data, 1.0, 1)?;
                let p = pair_even(&ch, &real_diag(&[1.0, 1.0, 0.0, 0.0]), terms)?;
                Ok(Measured::new((p.value - C64::new(2.0, 0.0)).norm()).with("value", p.value.re))
            },
        ),
        Check::new("beta-stability", 1e-6, params.clone(), move |rng| {
            let syn = matrix_even_data(rng, &PAIR_R, &PAIR_PLUS, &PAIR_MINUS)?;
            let w = &syn.frame;
            let p = syn.embed(&(w.column(0) * w.column(0).adjoint()));
            let mut values = Vec::new();
            for b in [beta / 2.0, beta, 2.0 * beta] {
                values.push(pair_even(&chern(&syn.data, b, 1)?, &p, terms)?.value);
            }
            let spread = values
                .iter()
                .map(|v| (v - values[1]).norm())
                .fold(0.0, f64::max);
            let re: Vec<f64> = values.iter().map(|v| v.re).collect();
            Ok(Measured::new(spread).with("values", re))
        }),
        Check::new("homotopy", 1e-6, params, move |rng| {
            let syn = matrix_even_data(rng, &PAIR_R, &PAIR_PLUS, &PAIR_MINUS)?;
            let w = &syn.frame;
            let ch = chern(&syn.data, beta, 1)?;
            let mut series = Vec::new();
            for s in 0..=10 {
                let t = std::f64::consts::FRAC_PI_2 * s as f64 / 10.0;
                let v = w.column(0) * C64::new(t.cos(), 0.0) + w.column(1) * C64::new(t.sin(), 0.0);
                let p = syn.embed(&(&v * v.adjoint()));
                series.push(pair_even(&ch, &p, terms)?.value);
            }
            let spread = series
                .iter()
                .map(|v| (v - series[0]).norm())
                .fold(0.0, f64::max);
            let re: Vec<f64> = series.iter().map(|v| v.re).collect();
            Ok(Measured::new(spread).with("values", re))
        }),
    ]
}
