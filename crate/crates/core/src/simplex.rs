//! Exponential integrals over the standard simplex and Gauss–Legendre rules.
//!
//! `∫_{Δ_n} exp(−β Σ_k δ_k μ_k) dδ` over `{δ ≥ 0, Σ δ = 1}` equals the divided
//! difference of `x ↦ e^{x}` at the nodes `z_k = −βμ_k` (Hermite–Genocchi).

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DividedDifferenceMethod {
    Recursive,
    SeriesFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DividedDifferenceResult {
    pub nodes: Vec<f64>,
    pub value: f64,
    pub method: DividedDifferenceMethod,
}

/// Recursion is used only when every pair of scaled nodes `βμ` is at least
/// this far apart; below it the series path is more accurate.
pub const SEPARATION: f64 = 0.5;

pub fn exp_simplex_weight(nodes: &[f64], beta: f64) -> DividedDifferenceResult {
    assert!(beta > 0.0 && !nodes.is_empty());
    let z: Vec<f64> = nodes.iter().map(|&mu| -beta * mu).collect();
    let (value, method) = exp_divided_difference(&z);
    DividedDifferenceResult {
        nodes: nodes.to_vec(),
        value,
        method,
    }
}

/// Divided difference `e[z_0, …, z_n]`.
pub fn exp_divided_difference(z: &[f64]) -> (f64, DividedDifferenceMethod) {
    let n = z.len();
    if n == 1 {
        return (z[0].exp(), DividedDifferenceMethod::Recursive);
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_gap >= SEPARATION {
        (recursive(&sorted), DividedDifferenceMethod::Recursive)
    } else {
        (series(&sorted), DividedDifferenceMethod::SeriesFallback)
    }
}

fn recursive(z: &[f64]) -> f64 {
    let mut table: Vec<f64> = z.iter().map(|x| x.exp()).collect();
    let n = z.len();
    for level in 1..n {
        for i in 0..n - level {
            table[i] = (table[i + 1] - table[i]) / (z[i + level] - z[i]);
        }
    }
    table[0]
}

/// `[0, n]` entry of `exp(Z)` for the bidiagonal `Z` with diagonal `z` and
/// unit superdiagonal, shifted by `max z` and evaluated by Taylor series
/// with scaling and squaring.
fn series(z: &[f64]) -> f64 {
    let n = z.len();
    let shift = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = z.iter().map(|x| (x - shift).abs()).fold(0.0, f64::max);
    // The superdiagonal contributes at most 1 to the row-sum norm.
    let norm = spread + 1.0;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    // Upper-triangular matrices stored densely (n ≤ a handful).
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = (z[i] - shift) * scale;
        if i + 1 < n {
            a[i * n + i + 1] = scale;
        }
    }
    let mut result = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    for k in 1..=40 {
        term = upper_mul(&term, &a, n);
        let inv_k = 1.0 / k as f64;
        let mut biggest = 0.0f64;
        for v in term.iter_mut() {
            *v *= inv_k;
            biggest = biggest.max(v.abs());
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
        if biggest < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = upper_mul(&result, &result, n);
    }
    result[n - 1] * shift.exp()
}

fn upper_mul(x: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let xik = x[i * n + k];
            if xik == 0.0 {
                continue;
            }
            for j in k..n {
                out[i * n + j] += xik * y[k * n + j];
            }
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (t * pn - pn1) / (t * t - 1.0);
    (pn, d)
}

/// Duffy map from the unit cube `[0,1]^n` onto the ordered simplex
/// `0 ≤ t_1 ≤ … ≤ t_n ≤ β`: `t_n = βu_n`, `t_{k−1} = t_k u_{k−1}`.
/// Returns the `t` values and the Jacobian `β^n Π_{k≥2} u_k^{k−1}`.
pub fn duffy_map(u: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let n = u.len();
    let mut t = vec![0.0; n];
    if n == 0 {
        return (t, 1.0);
    }
    t[n - 1] = beta * u[n - 1];
    for k in (1..n).rev() {
        t[k - 1] = t[k] * u[k - 1];
    }
    let mut jac = beta.powi(n as i32);
    for (k, &uk) in u.iter().enumerate().skip(1) {
        jac *= uk.powi(k as i32);
    }
    (t, jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_nodes_give_scaled_exponential() {
        for n in 0..6 {
            let nodes = vec![0.7; n + 1];
            let r = exp_simplex_weight(&nodes, 1.3);
            let expected = (-1.3f64 * 0.7).exp() / (1..=n).map(|k| k as f64).product::<f64>();
            assert!((r.value - expected).abs() <= 1e-14 * expected, "n={n}");
            if n > 0 {
                assert_eq!(r.method, DividedDifferenceMethod::SeriesFallback);
            }
        }
    }

    #[test]
    fn two_nodes_closed_form() {
        let (m1, m2, b) = (0.3, 4.1, 2.0);
        let r = exp_simplex_weight(&[m1, m2], b);
        let expected = ((-b * m2).exp() - (-b * m1).exp()) / (b * (m1 - m2));
        assert!((r.value - expected).abs() <= 1e-14 * expected);
        assert_eq!(r.method, DividedDifferenceMethod::Recursive);
        let close = exp_simplex_weight(&[1.0, 1.0 + 1e-9], 1.0);
        let h = 1e-9;
        let expected = (-1.0f64).exp() * (1.0 - h / 2.0);
        assert!((close.value - expected).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre_unit(order);
            for deg in 0..(2 * order) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!(
                    (q - 1.0 / (deg + 1) as f64).abs() < 1e-13,
                    "order {order} deg {deg}"
                );
            }
        }
    }

    #[test]
    fn duffy_volume() {
        // ∫ over the ordered simplex of 1 is β^n/n!.
        let (x, w) = gauss_legendre_unit(8);
        let beta = 1.7;
        let mut vol = 0.0;
        for (i, a) in x.iter().enumerate() {
            for (j, b) in x.iter().enumerate() {
                for (k, c) in x.iter().enumerate() {
                    let (t, jac) = duffy_map(&[*a, *b, *c], beta);
                    assert!(t[0] <= t[1] && t[1] <= t[2] && t[2] <= beta);
                    vol += w[i] * w[j] * w[k] * jac;
                }
            }
        }
        assert!((vol - beta.powi(3) / 6.0).abs() < 1e-13);
    }
}
