//! Continuous relaxation of the allocation problem.
//!
//! With the time constraints tight, learner `k` can absorb
//! `(T - c0_k) / (tau * c2_k + c1_k) = a_k / (tau + b_k)` samples, so the
//! relaxed optimum `tau*` solves
//!
//! ```text
//! g(tau) = sum_k a_k / (tau + b_k) = d
//! ```
//!
//! over the learners with `a_k > 0`. Each term is positive, strictly
//! decreasing and convex on `tau >= 0`, which makes the root unique and lets a
//! Newton step taken from the left of the root never overshoot.

use serde::{Deserialize, Serialize};

use super::ProblemInstance;

/// Per-learner terms of the rational equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTerms {
    /// `a_k = (T - c0_k) / c2_k`.
    pub a: Vec<f64>,
    /// `b_k = c1_k / c2_k`.
    pub b: Vec<f64>,
    /// Indices with `a_k > 0`, ascending.
    pub active_set: Vec<usize>,
}

impl SolverTerms {
    pub fn active_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.active_set.iter().map(|&k| (self.a[k], self.b[k]))
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.a[k] > 0.0
    }

    /// `g(tau)` summed over the active set.
    pub fn capacity_sum(&self, tau: f64) -> f64 {
        self.active_pairs().map(|(a, b)| a / (tau + b)).sum()
    }

    fn capacity_sum_slope(&self, tau: f64) -> f64 {
        -self
            .active_pairs()
            .map(|(a, b)| a / ((tau + b) * (tau + b)))
            .sum::<f64>()
    }
}

/// The data cannot be placed within the clock, even with zero iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("no nonnegative iteration count fits the data within the cycle clock")
    }
}

impl std::error::Error for Infeasible {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub tau_real: f64,
    pub d_real: Vec<f64>,
    /// `g(tau_real) - d`.
    pub residual: f64,
}

/// Relative residual at which a root is accepted.
pub const RESIDUAL_RTOL: f64 = 1e-9;
/// Bracket width (relative to `1 + tau`) at which the search stops.
pub const BRACKET_RTOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

pub fn solver_terms(p: &ProblemInstance) -> SolverTerms {
    let t = p.clock_s();
    let mut a = Vec::with_capacity(p.num_nodes());
    let mut b = Vec::with_capacity(p.num_nodes());
    let mut active_set = Vec::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        let r0 = c.c0 - t;
        let ak = -r0 / c.c2;
        a.push(ak);
        b.push(c.c1 / c.c2);
        if ak > 0.0 {
            active_set.push(k);
        }
    }
    SolverTerms { a, b, active_set }
}

/// Unique `tau >= 0` with `g(tau) = d`, by bracketed Newton.
///
/// The bracket starts at `[0, max_k(a_k) * K / d]`; at the upper end every
/// term is below `max_k(a_k) / tau_hi`, so `g < d` there. Newton iterates are
/// kept only while they stay strictly inside the bracket, otherwise the step
/// falls back to bisection.
pub fn relaxed_tau(terms: &SolverTerms, d: u64) -> Result<f64, Infeasible> {
    if terms.active_set.is_empty() || d == 0 {
        return Err(Infeasible);
    }
    let d = d as f64;
    let tol = RESIDUAL_RTOL * d;

    let f0 = terms.capacity_sum(0.0) - d;
    if f0 < 0.0 {
        return Err(Infeasible);
    }
    if f0 <= tol {
        return Ok(0.0);
    }

    let a_max = terms.active_pairs().map(|(a, _)| a).fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = a_max * terms.active_set.len() as f64 / d;
    let mut tau = lo;
    let mut f = f0;
    let mut best = (f0.abs(), lo);

    for _ in 0..MAX_ITERATIONS {
        let slope = terms.capacity_sum_slope(tau);
        let newton = tau - f / slope;
        tau = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        f = terms.capacity_sum(tau) - d;
        if f.abs() < best.0 {
            best = (f.abs(), tau);
        }
        if f.abs() <= tol {
            return Ok(polish(terms, d, tau, f));
        }
        if f > 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        if hi - lo <= BRACKET_RTOL * (1.0 + tau) {
            break;
        }
    }
    Ok(best.1)
}

/// One extra Newton step on an accepted root, kept only if it lowers the
/// residual.
fn polish(terms: &SolverTerms, d: f64, tau: f64, f: f64) -> f64 {
    let next = tau - f / terms.capacity_sum_slope(tau);
    if next.is_finite() && next >= 0.0 && (terms.capacity_sum(next) - d).abs() < f.abs() {
        next
    } else {
        tau
    }
}

/// Batch sizes that make each active learner's time constraint tight at `tau`.
pub fn relaxed_batches(terms: &SolverTerms, p: &ProblemInstance, tau: f64) -> Vec<f64> {
    let t = p.clock_s();
    p.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if terms.is_active(k) {
                (t - c.c0) / (tau * c.c2 + c.c1)
            } else {
                0.0
            }
        })
        .collect()
}

/// Full relaxed solution: root, batches and residual.
pub fn solve_relaxed(p: &ProblemInstance) -> Result<RelaxedSolution, Infeasible> {
    let terms = solver_terms(p);
    let tau_real = relaxed_tau(&terms, p.total_samples())?;
    let d_real = relaxed_batches(&terms, p, tau_real);
    let residual = terms.capacity_sum(tau_real) - p.total_samples() as f64;
    Ok(RelaxedSolution {
        tau_real,
        d_real,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeCoefficients;
    use approx::assert_relative_eq;

    fn coeffs(c2: f64, c1: f64, c0: f64) -> NodeCoefficients {
        NodeCoefficients::new(c2, c1, c0).unwrap()
    }

    fn terms(a: &[f64], b: &[f64]) -> SolverTerms {
        SolverTerms {
            a: a.to_vec(),
            b: b.to_vec(),
            active_set: (0..a.len()).filter(|&k| a[k] > 0.0).collect(),
        }
    }

    #[test]
    fn solver_terms_examples() {
        let p = ProblemInstance::new(vec![coeffs(1.0, 1.0, 0.0)], 10.0, 1).unwrap();
        let t = solver_terms(&p);
        assert_eq!((t.a[0], t.b[0], t.active_set.clone()), (10.0, 1.0, vec![0]));

        let p = ProblemInstance::new(vec![coeffs(3.0, 2.0, 12.0)], 10.0, 1).unwrap();
        let t = solver_terms(&p);
        assert!(t.a[0] < 0.0);
        assert!(t.active_set.is_empty());

        let p = ProblemInstance::new(vec![coeffs(2.0, 0.5, 1.0)], 13.0, 1).unwrap();
        let t = solver_terms(&p);
        assert_eq!((t.a[0], t.b[0]), (6.0, 0.25));
    }

    #[test]
    fn relaxed_tau_single_node() {
        let tau = relaxed_tau(&terms(&[10.0], &[1.0]), 2).unwrap();
        assert_relative_eq!(tau, 4.0, max_relative = 1e-9);
    }

    #[test]
    fn relaxed_tau_equal_b() {
        let tau = relaxed_tau(&terms(&[12.0, 6.0], &[1.0, 1.0]), 4).unwrap();
        assert_relative_eq!(tau, 3.5, max_relative = 1e-9);
    }

    #[test]
    fn relaxed_batches_from_physical_coefficients() {
        let p = ProblemInstance::new(vec![coeffs(1.0, 1.0, 0.0), coeffs(2.0, 2.0, 0.0)], 12.0, 4)
            .unwrap();
        let sol = solve_relaxed(&p).unwrap();
        assert_relative_eq!(sol.tau_real, 3.5, max_relative = 1e-9);
        assert_relative_eq!(sol.d_real[0], 8.0 / 3.0, max_relative = 1e-9);
        assert_relative_eq!(sol.d_real[1], 4.0 / 3.0, max_relative = 1e-9);
        assert!(sol.residual.abs() <= 4.0 * RESIDUAL_RTOL);
    }

    #[test]
    fn relaxed_tau_infeasible_when_zero_iterations_do_not_fit() {
        // g(0) = 1/1 + 4/2 = 3 < 4
        assert_eq!(
            relaxed_tau(&terms(&[1.0, 4.0], &[1.0, 2.0]), 4),
            Err(Infeasible)
        );
        assert_eq!(relaxed_tau(&terms(&[-1.0], &[1.0]), 1), Err(Infeasible));
    }

    #[test]
    fn relaxed_batch_examples() {
        let p = ProblemInstance::new(vec![coeffs(1.0, 1.0, 0.0), coeffs(1.0, 1.0, 20.0)], 10.0, 1)
            .unwrap();
        let t = solver_terms(&p);
        let at4 = relaxed_batches(&t, &p, 4.0);
        assert_eq!(at4, vec![2.0, 0.0]);
        let at0 = relaxed_batches(&t, &p, 0.0);
        assert_eq!(at0[0], 10.0);
    }

    #[test]
    fn excluded_nodes_do_not_contribute() {
        let p = ProblemInstance::new(vec![coeffs(1.0, 1.0, 0.0), coeffs(1.0, 1.0, 11.0)], 10.0, 2)
            .unwrap();
        let sol = solve_relaxed(&p).unwrap();
        assert_relative_eq!(sol.tau_real, 4.0, max_relative = 1e-9);
        assert_eq!(sol.d_real[1], 0.0);
    }

    #[test]
    fn widely_scaled_terms_still_converge() {
        let a = [1e7, 3.0, 5e4, 0.2];
        let b = [1e-6, 40.0, 0.5, 1e3];
        let t = terms(&a, &b);
        let d = 12_345;
        let tau = relaxed_tau(&t, d).unwrap();
        assert!((t.capacity_sum(tau) - d as f64).abs() <= RESIDUAL_RTOL * d as f64);
    }
}
