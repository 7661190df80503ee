//! Monte Carlo sweeps over the number of learners or the cycle clock.
//!
//! Every (sweep value, repetition) pair gets its own scenario seed, derived
//! from the base seed with [`mix_seed`], so any single run can be replayed in
//! isolation. Runs execute in parallel; records are always emitted in
//! `(value index, repetition, scheme)` order.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{solve, Allocation, Scheme};
use crate::error::{MelError, Result};
use crate::model::Mode;
use crate::scenarios::ScenarioTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NumNodes,
    CycleClock,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::NumNodes => "num_nodes",
            SweepVariable::CycleClock => "cycle_clock_s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub repetitions: usize,
    pub base: ScenarioTemplate,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MelError::InvalidSweep(msg));
        if self.values.is_empty() {
            return bad("values must not be empty".into());
        }
        if self
            .values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return bad("values must be strictly increasing".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        for &v in &self.values {
            let ok = match self.variable {
                SweepVariable::NumNodes => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
                SweepVariable::CycleClock => v.is_finite() && v > 0.0,
            };
            if !ok {
                return bad(format!("invalid {} value {v}", self.variable.as_str()));
            }
        }
        self.base.validate()?;
        if self.base.cycle.mode == Mode::DistributedDatasets
            && self.base.task.per_sample_model_coeffs == 0
        {
            return bad("distributed-datasets mode needs per_sample_model_coeffs > 0".into());
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Scenario recipe for one sweep point.
    pub fn template_at(&self, value: f64) -> ScenarioTemplate {
        let mut t = self.base.clone();
        match self.variable {
            SweepVariable::NumNodes => t.config.num_nodes = value as usize,
            SweepVariable::CycleClock => t.cycle.clock_s = value,
        }
        t
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(base) ^ value_index) ^ repetition)`,
/// where `splitmix64` is the standard SplitMix64 output function applied to
/// `state + 0x9E3779B97F4A7C15`.
pub fn mix_seed(base: u64, value_index: u64, repetition: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ value_index) ^ repetition)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub value: f64,
    pub value_index: usize,
    pub repetition: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub tau: u64,
    pub feasible: bool,
    /// Per-node time statistics over learners with a nonempty batch.
    pub time_min_s: f64,
    pub time_max_s: f64,
    pub time_mean_s: f64,
    pub batch_min: u64,
    pub batch_max: u64,
    pub batch_sum: u64,
}

impl ResultRecord {
    fn from_allocation(
        value: f64,
        value_index: usize,
        repetition: usize,
        seed: u64,
        alloc: &Allocation,
    ) -> Self {
        let busy: Vec<f64> = alloc
            .d_int
            .iter()
            .zip(&alloc.per_node_time)
            .filter(|(&d, _)| d > 0)
            .map(|(_, &t)| t)
            .collect();
        let (time_min_s, time_max_s, time_mean_s) = if busy.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            (
                busy.iter().copied().fold(f64::INFINITY, f64::min),
                busy.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                busy.iter().sum::<f64>() / busy.len() as f64,
            )
        };
        ResultRecord {
            value,
            value_index,
            repetition,
            seed,
            scheme: alloc.scheme,
            tau: alloc.tau,
            feasible: alloc.feasible,
            time_min_s,
            time_max_s,
            time_mean_s,
            batch_min: alloc.d_int.iter().copied().min().unwrap_or(0),
            batch_max: alloc.d_int.iter().copied().max().unwrap_or(0),
            batch_sum: alloc.d_int.iter().sum(),
        }
    }
}

/// Runs every requested scheme on every (value, repetition) scenario.
/// Infeasible runs are recorded, never dropped.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let base_seed = spec.base.config.rng_seed;
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.repetitions).map(move |r| (vi, r)))
        .collect();

    let per_job: Vec<Vec<ResultRecord>> = jobs
        .par_iter()
        .map(|&(vi, rep)| {
            let value = spec.values[vi];
            let seed = mix_seed(base_seed, vi as u64, rep as u64);
            let problem = spec.template_at(value).generate(seed)?.problem()?;
            Ok(spec
                .schemes
                .iter()
                .map(|&s| ResultRecord::from_allocation(value, vi, rep, seed, &solve(&problem, s)))
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(per_job.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub scheme: Scheme,
    pub runs: usize,
    pub tau_median: f64,
    pub tau_mean: f64,
    pub tau_min: u64,
    pub tau_max: u64,
    pub feasible_rate: f64,
}

pub fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

/// Aggregates records per (sweep value, scheme), ordered by value index then
/// scheme. Infeasible runs count with `tau = 0`.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Scheme)> =
        records.iter().map(|r| (r.value_index, r.scheme)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(vi, scheme)| {
            let group: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| r.value_index == vi && r.scheme == scheme)
                .collect();
            let mut taus: Vec<u64> = group.iter().map(|r| r.tau).collect();
            taus.sort_unstable();
            let runs = group.len();
            SummaryRow {
                value: group[0].value,
                scheme,
                runs,
                tau_median: median(&taus),
                tau_mean: taus.iter().sum::<u64>() as f64 / runs as f64,
                tau_min: taus[0],
                tau_max: taus[runs - 1],
                feasible_rate: group.iter().filter(|r| r.feasible).count() as f64 / runs as f64,
            }
        })
        .collect()
}

pub const RECORDS_HEADER: [&str; 14] = [
    "variable",
    "value",
    "value_index",
    "repetition",
    "seed",
    "scheme",
    "tau",
    "feasible",
    "time_min_s",
    "time_max_s",
    "time_mean_s",
    "batch_min",
    "batch_max",
    "batch_sum",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "variable",
    "value",
    "scheme",
    "runs",
    "tau_median",
    "tau_mean",
    "tau_min",
    "tau_max",
    "feasible_rate",
];

// Display for f64 is the shortest string that parses back to the same value.
pub fn records_csv(variable: SweepVariable, records: &[ResultRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        w.write_record([
            variable.as_str().to_string(),
            r.value.to_string(),
            r.value_index.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.scheme.to_string(),
            r.tau.to_string(),
            r.feasible.to_string(),
            r.time_min_s.to_string(),
            r.time_max_s.to_string(),
            r.time_mean_s.to_string(),
            r.batch_min.to_string(),
            r.batch_max.to_string(),
            r.batch_sum.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| MelError::Io(e.to_string()))
}

pub fn summary_csv(variable: SweepVariable, rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            variable.as_str().to_string(),
            r.value.to_string(),
            r.scheme.to_string(),
            r.runs.to_string(),
            r.tau_median.to_string(),
            r.tau_mean.to_string(),
            r.tau_min.to_string(),
            r.tau_max.to_string(),
            r.feasible_rate.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| MelError::Io(e.to_string()))
}

/// Runs the sweep and writes `records.csv`, `summary.csv` and
/// `spec-echo.json` into `out_dir`.
pub fn run_sweep_to_dir(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<SummaryRow>> {
    let records = run_sweep(spec)?;
    let summary = summarize(&records);
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("records.csv"),
        records_csv(spec.variable, &records)?,
    )?;
    fs::write(
        out_dir.join("summary.csv"),
        summary_csv(spec.variable, &summary)?,
    )?;
    fs::write(
        out_dir.join("spec-echo.json"),
        serde_json::to_string_pretty(spec)?,
    )?;
    Ok(summary)
}
