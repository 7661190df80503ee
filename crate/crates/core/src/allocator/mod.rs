//! Batch allocation across learners.
//!
//! Three schemes share one [`Allocation`] result type:
//!
//! * [`solve_analytical`] solves the continuous relaxation through its
//!   rational root equation, floors the iteration count and repairs it into
//!   an integer solution;
//! * [`solve_eta`] splits the data equally and takes whatever iteration count
//!   the slowest learner allows;
//! * [`solve_oracle`] searches the integer problem directly and serves as
//!   ground truth.

mod integer;
mod polynomial;
mod relaxed;

pub use integer::{
    check_feasible, integer_capacities, integer_capacity, solve, solve_analytical, solve_eta,
    solve_oracle, water_fill, Allocation, FeasibilityReport, Scheme, Violation,
};
pub use polynomial::{
    companion_roots, eval_with_derivative, polynomial_coefficients, polynomial_root,
};
pub use relaxed::{
    relaxed_batches, relaxed_tau, solve_relaxed, solver_terms, Infeasible, RelaxedSolution,
    SolverTerms, BRACKET_RTOL, RESIDUAL_RTOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::model::NodeCoefficients;

/// One allocation problem: learner coefficients, the clock and the data size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    coeffs: Vec<NodeCoefficients>,
    clock_s: f64,
    total_samples: u64,
}

impl ProblemInstance {
    pub fn new(coeffs: Vec<NodeCoefficients>, clock_s: f64, total_samples: u64) -> Result<Self> {
        ensure(!coeffs.is_empty(), "coeffs", "need at least one learner")?;
        ensure(
            clock_s.is_finite() && clock_s > 0.0,
            "clock_s",
            "must be finite and > 0",
        )?;
        ensure(total_samples >= 1, "total_samples", "must be >= 1")?;
        for c in &coeffs {
            c.validate()?;
        }
        Ok(ProblemInstance {
            coeffs,
            clock_s,
            total_samples,
        })
    }

    pub fn coeffs(&self) -> &[NodeCoefficients] {
        &self.coeffs
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn num_nodes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn with_clock(&self, clock_s: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), clock_s, self.total_samples)
    }

    pub fn with_total_samples(&self, total_samples: u64) -> Result<Self> {
        Self::new(self.coeffs.clone(), self.clock_s, total_samples)
    }
}
