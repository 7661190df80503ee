//! Per-learner latency model.
//!
//! A learner `k` holding `d_k` samples spends, within one global cycle,
//!
//! ```text
//! t_k = t_send + tau * t_compute + t_return
//!     = c2 * tau * d_k + c1 * d_k + c0
//! ```
//!
//! where the send/return legs move the batch and the model over a Shannon
//! link and the compute leg runs `tau` local iterations over the batch.
//! Everything here is in SI units: seconds, bits/s, watts, hertz.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, MelError, Result};

/// Dataset and learning-model constants shared by every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTask {
    /// Features per sample.
    pub features: u64,
    /// Bits per feature value.
    pub data_precision_bits: u64,
    /// Bits per model coefficient.
    pub model_precision_bits: u64,
    /// Model coefficients that scale with the batch, per sample.
    pub per_sample_model_coeffs: u64,
    /// Model coefficients independent of the batch.
    pub fixed_model_coeffs: u64,
    /// Floating point operations per sample per local iteration.
    pub model_complexity_flops: u64,
    /// Total dataset size `d`.
    pub total_samples: u64,
}

impl LearningTask {
    pub fn validate(&self) -> Result<()> {
        ensure(self.features >= 1, "features", "must be >= 1")?;
        ensure(self.total_samples >= 1, "total_samples", "must be >= 1")?;
        ensure(
            self.model_complexity_flops >= 1,
            "model_complexity_flops",
            "must be >= 1",
        )
    }
}

/// One learner's compute and radio capabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeNode {
    pub id: String,
    pub cpu_frequency_hz: f64,
    pub tx_power_w: f64,
    /// Linear power gain, not dB.
    pub channel_gain_linear: f64,
}

impl EdgeNode {
    pub fn new(
        id: impl Into<String>,
        cpu_frequency_hz: f64,
        tx_power_w: f64,
        channel_gain_linear: f64,
    ) -> Result<Self> {
        let node = EdgeNode {
            id: id.into(),
            cpu_frequency_hz,
            tx_power_w,
            channel_gain_linear,
        };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            positive(self.cpu_frequency_hz),
            "cpu_frequency_hz",
            format!("must be finite and > 0, got {}", self.cpu_frequency_hz),
        )?;
        ensure(
            positive(self.tx_power_w),
            "tx_power_w",
            format!("must be finite and > 0, got {}", self.tx_power_w),
        )?;
        ensure(
            positive(self.channel_gain_linear),
            "channel_gain_linear",
            format!("must be finite and > 0, got {}", self.channel_gain_linear),
        )
    }
}

/// Wireless parameters common to all learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub bandwidth_hz: f64,
    pub noise_density_w_per_hz: f64,
}

impl LinkParams {
    pub fn new(bandwidth_hz: f64, noise_density_w_per_hz: f64) -> Result<Self> {
        let link = LinkParams {
            bandwidth_hz,
            noise_density_w_per_hz,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            positive(self.bandwidth_hz),
            "bandwidth_hz",
            "must be finite and > 0",
        )?;
        ensure(
            positive(self.noise_density_w_per_hz),
            "noise_density_w_per_hz",
            "must be finite and > 0",
        )
    }

    /// Noise power over the whole band, `N_0 * W`.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_density_w_per_hz * self.bandwidth_hz
    }
}

/// Where the training data lives at the start of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The orchestrator ships each learner its batch every cycle.
    TaskParallelization,
    /// Learners already hold their data; only the model travels.
    DistributedDatasets,
}

/// Coefficients of `t_k = c2 * tau * d_k + c1 * d_k + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCoefficients {
    /// Seconds per sample per iteration.
    pub c2: f64,
    /// Seconds per sample.
    pub c1: f64,
    /// Seconds.
    pub c0: f64,
}

impl NodeCoefficients {
    pub fn new(c2: f64, c1: f64, c0: f64) -> Result<Self> {
        let c = NodeCoefficients { c2, c1, c0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            positive(self.c2),
            "c2",
            format!("must be finite and > 0, got {}", self.c2),
        )?;
        ensure(
            positive(self.c1),
            "c1",
            format!("must be finite and > 0, got {}", self.c1),
        )?;
        ensure(
            self.c0.is_finite() && self.c0 >= 0.0,
            "c0",
            format!("must be finite and >= 0, got {}", self.c0),
        )
    }
}

/// The global cycle clock and the data placement mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub clock_s: f64,
    pub mode: Mode,
}

impl CycleSpec {
    pub fn new(clock_s: f64, mode: Mode) -> Result<Self> {
        let c = CycleSpec { clock_s, mode };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(positive(self.clock_s), "clock_s", "must be finite and > 0")
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Shannon rate of the node's link: `W * log2(1 + P h / (N_0 W))`.
///
/// The noise term is the in-band noise power `N_0 * W`, so `N_0` keeps its
/// meaning as a spectral density.
pub fn link_rate(node: &EdgeNode, link: &LinkParams) -> f64 {
    let snr = node.tx_power_w * node.channel_gain_linear / link.noise_power_w();
    // ln_1p keeps precision when the SNR is tiny
    link.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

/// Bits needed to ship `d_k` raw samples.
pub fn batch_bits(task: &LearningTask, d_k: u64) -> f64 {
    d_k as f64 * task.features as f64 * task.data_precision_bits as f64
}

/// Bits in one copy of the model for a batch of `d_k` samples.
pub fn model_bits(task: &LearningTask, d_k: u64) -> f64 {
    task.model_precision_bits as f64
        * (d_k as f64 * task.per_sample_model_coeffs as f64 + task.fixed_model_coeffs as f64)
}

/// Floating point operations for one local iteration over `d_k` samples.
pub fn iteration_flops(task: &LearningTask, d_k: u64) -> f64 {
    d_k as f64 * task.model_complexity_flops as f64
}

/// Collapses the physical model of one learner into its time coefficients.
///
/// Fails with [`MelError::DegenerateLinearTerm`] when the linear term would be
/// zero (no per-sample model coefficients in distributed-datasets mode).
pub fn compute_coefficients(
    task: &LearningTask,
    node: &EdgeNode,
    link: &LinkParams,
    mode: Mode,
) -> Result<NodeCoefficients> {
    task.validate()?;
    node.validate()?;
    link.validate()?;

    let rate = link_rate(node, link);
    let model_per_sample =
        2.0 * task.model_precision_bits as f64 * task.per_sample_model_coeffs as f64;
    let linear_bits = match mode {
        Mode::TaskParallelization => {
            task.features as f64 * task.data_precision_bits as f64 + model_per_sample
        }
        Mode::DistributedDatasets => model_per_sample,
    };
    if linear_bits <= 0.0 {
        return Err(MelError::DegenerateLinearTerm {
            node: node.id.clone(),
        });
    }

    NodeCoefficients::new(
        task.model_complexity_flops as f64 / node.cpu_frequency_hz,
        linear_bits / rate,
        2.0 * task.model_precision_bits as f64 * task.fixed_model_coeffs as f64 / rate,
    )
}

/// Wall-clock time of one learner for `tau` iterations over `d_k` samples.
pub fn cycle_time(coeffs: &NodeCoefficients, tau: u64, d_k: u64) -> f64 {
    cycle_time_real(coeffs, tau as f64, d_k as f64)
}

/// [`cycle_time`] over the relaxed (real-valued) variables.
pub fn cycle_time_real(coeffs: &NodeCoefficients, tau: f64, d_k: f64) -> f64 {
    coeffs.c2 * tau * d_k + coeffs.c1 * d_k + coeffs.c0
}

/// Converts a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a dB attenuation to a linear power gain.
pub fn db_loss_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}
