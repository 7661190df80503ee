use serde::{Deserialize, Serialize};

use super::relaxed::{relaxed_tau, solver_terms};
use super::ProblemInstance;
use crate::error::{MelError, Result};
use crate::model::cycle_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Analytical,
    Eta,
    Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Analytical, Scheme::Eta, Scheme::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Analytical => "analytical",
            Scheme::Eta => "eta",
            Scheme::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = MelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytical" => Ok(Scheme::Analytical),
            "eta" => Ok(Scheme::Eta),
            "oracle" => Ok(Scheme::Oracle),
            other => Err(MelError::InvalidParameter {
                name: "scheme",
                reason: format!("unknown scheme `{other}`"),
            }),
        }
    }
}

/// An integer allocation `(tau, d_1..d_K)`.
///
/// Learners with `d_k = 0` sit the cycle out: they receive nothing and their
/// `per_node_time` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub tau: u64,
    pub d_int: Vec<u64>,
    pub feasible: bool,
    pub scheme: Scheme,
    pub per_node_time: Vec<f64>,
}

impl Allocation {
    fn build(p: &ProblemInstance, scheme: Scheme, tau: u64, d_int: Vec<u64>) -> Self {
        let per_node_time = node_times(p, tau, &d_int);
        let feasible = tau >= 1
            && d_int.iter().sum::<u64>() == p.total_samples()
            && per_node_time.iter().all(|&t| t <= p.clock_s());
        Allocation {
            tau,
            d_int,
            feasible,
            scheme,
            per_node_time,
        }
    }

    fn infeasible(p: &ProblemInstance, scheme: Scheme) -> Self {
        Allocation {
            tau: 0,
            d_int: vec![0; p.num_nodes()],
            feasible: false,
            scheme,
            per_node_time: vec![0.0; p.num_nodes()],
        }
    }

    pub fn total_samples(&self) -> u64 {
        self.d_int.iter().sum()
    }
}

fn node_times(p: &ProblemInstance, tau: u64, d_int: &[u64]) -> Vec<f64> {
    p.coeffs()
        .iter()
        .zip(d_int)
        .map(|(c, &dk)| if dk == 0 { 0.0 } else { cycle_time(c, tau, dk) })
        .collect()
}

// Far beyond any realistic dataset, and small enough that sums cannot overflow.
const CAPACITY_CEILING: u64 = 1 << 52;

/// Largest `d_k` with `cycle_time(c_k, tau, d_k) <= T`, zero when the learner
/// cannot even exchange the model in time.
pub fn integer_capacity(p: &ProblemInstance, k: usize, tau: u64) -> u64 {
    let c = &p.coeffs()[k];
    let t = p.clock_s();
    let slack = t - c.c0;
    if slack.is_nan() || slack <= 0.0 {
        return 0;
    }
    let x = slack / (tau as f64 * c.c2 + c.c1);
    let mut cap = if x >= CAPACITY_CEILING as f64 {
        CAPACITY_CEILING
    } else {
        x.floor() as u64
    };
    // the division can round across an integer; settle on what cycle_time accepts
    while cap > 0 && cycle_time(c, tau, cap) > t {
        cap -= 1;
    }
    for _ in 0..2 {
        if cap < CAPACITY_CEILING && cycle_time(c, tau, cap + 1) <= t {
            cap += 1;
        }
    }
    cap
}

pub fn integer_capacities(p: &ProblemInstance, tau: u64) -> Vec<u64> {
    (0..p.num_nodes())
        .map(|k| integer_capacity(p, k, tau))
        .collect()
}

fn total_capacity(p: &ProblemInstance, tau: u64) -> u64 {
    (0..p.num_nodes())
        .map(|k| integer_capacity(p, k, tau))
        .sum()
}

/// Distributes exactly `d` samples under per-learner capacities.
///
/// Every learner first gets `floor(d * cap_k / sum(cap))`; the leftover
/// samples go one at a time to the learner with the most remaining time
/// slack after taking the sample, lowest index first on ties.
///
/// # Panics
///
/// If `sum(caps) < d`.
pub fn water_fill(p: &ProblemInstance, tau: u64, caps: &[u64], d: u64) -> Vec<u64> {
    let total: u128 = caps.iter().map(|&c| c as u128).sum();
    assert!(
        total >= d as u128,
        "capacities {total} cannot hold {d} samples"
    );
    let mut out: Vec<u64> = caps
        .iter()
        .map(|&c| (d as u128 * c as u128 / total) as u64)
        .collect();
    let mut remaining = d - out.iter().sum::<u64>();
    let t = p.clock_s();
    while remaining > 0 {
        let mut pick: Option<(usize, f64)> = None;
        for (k, c) in p.coeffs().iter().enumerate() {
            if out[k] >= caps[k] {
                continue;
            }
            let slack = t - cycle_time(c, tau, out[k] + 1);
            if pick.is_none_or(|(_, best)| slack > best) {
                pick = Some((k, slack));
            }
        }
        let (k, _) = pick.expect("capacity left while samples remain");
        out[k] += 1;
        remaining -= 1;
    }
    out
}

/// Relaxed root, floored, then repaired into the best integer solution.
pub fn solve_analytical(p: &ProblemInstance) -> Allocation {
    let terms = solver_terms(p);
    let d = p.total_samples();
    let tau_real = match relaxed_tau(&terms, d) {
        Ok(tau) => tau,
        Err(_) => return Allocation::infeasible(p, Scheme::Analytical),
    };

    let mut tau = tau_real.floor() as u64;
    // the root is only accurate to a relative 1e-9, so it may sit a hair below an
    // integer that is actually feasible
    while total_capacity(p, tau + 1) >= d {
        tau += 1;
    }
    while tau >= 1 && total_capacity(p, tau) < d {
        tau -= 1;
    }
    if tau == 0 {
        return Allocation::infeasible(p, Scheme::Analytical);
    }

    let caps = integer_capacities(p, tau);
    let d_int = water_fill(p, tau, &caps, d);
    let alloc = Allocation::build(p, Scheme::Analytical, tau, d_int);
    debug_assert!(alloc.feasible);
    alloc
}

/// Equal task allocation: `d / K` samples each, the first `d mod K` learners
/// get one extra.
pub fn solve_eta(p: &ProblemInstance) -> Allocation {
    let k = p.num_nodes() as u64;
    let d = p.total_samples();
    let (base, extra) = (d / k, d % k);
    let d_int: Vec<u64> = (0..k).map(|i| base + u64::from(i < extra)).collect();

    let t = p.clock_s();
    let mut tau = u64::MAX;
    for (c, &dk) in p.coeffs().iter().zip(&d_int) {
        if dk == 0 {
            continue;
        }
        let dkf = dk as f64;
        let room = (t - c.c0 - c.c1 * dkf) / (c.c2 * dkf);
        let node_tau = if room.is_nan() || room <= 0.0 {
            0
        } else {
            room.floor().min(CAPACITY_CEILING as f64) as u64
        };
        tau = tau.min(node_tau);
    }
    // floor of a rounded quotient can land one too high
    while tau > 0 && node_times(p, tau, &d_int).iter().any(|&x| x > t) {
        tau -= 1;
    }

    let alloc = Allocation::build(p, Scheme::Eta, tau, d_int);
    if alloc.feasible {
        alloc
    } else {
        Allocation {
            tau: 0,
            feasible: false,
            ..alloc
        }
    }
}

/// Exact integer optimum by binary search on `tau`.
///
/// At a fixed `tau` the time constraints decouple, so the problem is
/// feasible iff the per-learner integer capacities add up to at least `d`;
/// that total never increases with `tau`.
pub fn solve_oracle(p: &ProblemInstance) -> Allocation {
    let d = p.total_samples();
    if total_capacity(p, 1) < d {
        return Allocation::infeasible(p, Scheme::Oracle);
    }

    // past this point no learner can hold a single sample
    let t = p.clock_s();
    let tau_cap = p
        .coeffs()
        .iter()
        .map(|c| ((t - c.c0).max(0.0) / c.c2).ceil())
        .fold(1.0, f64::max)
        .min(CAPACITY_CEILING as f64) as u64
        + 1;

    let (mut lo, mut hi) = (1u64, tau_cap.max(2));
    while total_capacity(p, hi) >= d {
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if total_capacity(p, mid) >= d {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let caps = integer_capacities(p, lo);
    let d_int = water_fill(p, lo, &caps, d);
    Allocation::build(p, Scheme::Oracle, lo, d_int)
}

pub fn solve(p: &ProblemInstance, scheme: Scheme) -> Allocation {
    match scheme {
        Scheme::Analytical => solve_analytical(p),
        Scheme::Eta => solve_eta(p),
        Scheme::Oracle => solve_oracle(p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Batches do not add up to the dataset size.
    SampleSum { expected: u64, actual: u64 },
    /// A learner overruns the clock; `margin_s` is `T - t_k` (negative).
    NodeTime {
        node: usize,
        time_s: f64,
        margin_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub ok: bool,
    /// Constraints hold but no local iteration fits in the cycle.
    pub tau_zero: bool,
    pub violations: Vec<Violation>,
}

/// Checks an allocation against the batch-sum and per-learner time
/// constraints. Idle learners (`d_k = 0`) are not constrained.
pub fn check_feasible(p: &ProblemInstance, alloc: &Allocation) -> Result<FeasibilityReport> {
    if alloc.d_int.len() != p.num_nodes() {
        return Err(MelError::DimensionMismatch(format!(
            "allocation has {} batches for {} learners",
            alloc.d_int.len(),
            p.num_nodes()
        )));
    }
    let mut violations = Vec::new();
    let actual: u64 = alloc.d_int.iter().sum();
    if actual != p.total_samples() {
        violations.push(Violation::SampleSum {
            expected: p.total_samples(),
            actual,
        });
    }
    let t = p.clock_s();
    for (k, (c, &dk)) in p.coeffs().iter().zip(&alloc.d_int).enumerate() {
        if dk == 0 {
            continue;
        }
        let time_s = cycle_time(c, alloc.tau, dk);
        if time_s > t {
            violations.push(Violation::NodeTime {
                node: k,
                time_s,
                margin_s: t - time_s,
            });
        }
    }
    Ok(FeasibilityReport {
        ok: violations.is_empty(),
        tau_zero: alloc.tau == 0,
        violations,
    })
}
