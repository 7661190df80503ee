//! Expanded polynomial form of the relaxed equation, used as a cross-check.
//!
//! Clearing denominators in `sum_k a_k / (tau + b_k) = d` gives
//!
//! ```text
//! d * prod_k (tau + b_k) - sum_k a_k * prod_{l != k} (tau + b_l) = 0
//! ```
//!
//! whose roots in `tau >= 0` coincide with those of the rational form. The
//! expansion loses accuracy quickly as `K` grows, so the production solver
//! never goes through it.

use nalgebra::DMatrix;

use super::SolverTerms;

/// Coefficients of the cleared polynomial over the active set, highest degree
/// first. The leading coefficient is `d`.
pub fn polynomial_coefficients(terms: &SolverTerms, d: u64) -> Vec<f64> {
    // ascending order while convolving
    let mut prod = vec![1.0];
    let mut partial = vec![0.0];
    for (a, b) in terms.active_pairs() {
        // partial <- partial * (tau + b) + a * prod
        let mut next = mul_linear(&partial, b);
        for (i, p) in prod.iter().enumerate() {
            next[i] += a * p;
        }
        partial = next;
        prod = mul_linear(&prod, b);
    }
    let d = d as f64;
    let mut out: Vec<f64> = prod
        .iter()
        .enumerate()
        .map(|(i, p)| d * p - partial.get(i).copied().unwrap_or(0.0))
        .collect();
    out.reverse();
    out
}

/// Multiplies an ascending-order polynomial by `(tau + b)`.
fn mul_linear(poly: &[f64], b: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (i, &c) in poly.iter().enumerate() {
        out[i] += b * c;
        out[i + 1] += c;
    }
    out
}

/// Horner evaluation of a highest-first polynomial and its derivative.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All roots of a highest-first polynomial as eigenvalues of its companion
/// matrix, returned as `(re, im)` pairs.
pub fn companion_roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let start = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .unwrap_or(coeffs.len());
    let coeffs = &coeffs[start..];
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect()
}

/// The nonnegative real root of the cleared polynomial, polished by Newton
/// steps on the polynomial itself.
pub fn polynomial_root(coeffs: &[f64]) -> Option<f64> {
    companion_roots(coeffs)
        .into_iter()
        .filter(|&(re, im)| im.abs() <= 1e-6 * (1.0 + re.abs()))
        .map(|(re, _)| polish(coeffs, re))
        .filter(|&x| x >= 0.0)
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.max(x)))
        })
}

fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..50 {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if dp == 0.0 || !p.is_finite() {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}
