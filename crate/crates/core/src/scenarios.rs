//! Seeded random edge environments and the MNIST task preset.
//!
//! # Reproducibility contract
//!
//! Scenarios are generated with xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). Draws are consumed in this order:
//!
//! 1. for each node `0..K`: one radius draw `u` (resampled while `u == 0`),
//!    then one angle draw `v`; the node sits at distance `R * sqrt(u)` and
//!    angle `2 pi v` from the orchestrator at the disk centre;
//! 2. a Fisher-Yates shuffle of the CPU-profile slots, walking `i` from
//!    `K - 1` down to `1` and swapping `i` with `j = (next_u64 * (i + 1)) >> 64`.
//!
//! A uniform draw is `(next_u64 >> 11) * 2^-53`.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocator::ProblemInstance;
use crate::error::{ensure, Result};
use crate::model::{
    compute_coefficients, db_loss_to_gain, dbm_to_watts, CycleSpec, EdgeNode, LearningTask,
    LinkParams, Mode,
};

pub const RNG_NAME: &str = "xoshiro256**/splitmix64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuProfile {
    pub frequency_hz: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_nodes: usize,
    pub area_radius_m: f64,
    pub pathloss_intercept_db: f64,
    /// Loss grows by `10 * exponent` dB per decade of distance.
    pub pathloss_exponent: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_density_dbm_per_hz: f64,
    pub cpu_profiles: Vec<CpuProfile>,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// 802.11-like setting: 50 m disk, 5 MHz per node, 23 dBm, -174 dBm/Hz,
    /// half the nodes at 2.4 GHz and half at 700 MHz.
    pub fn standard(num_nodes: usize, rng_seed: u64) -> Self {
        ScenarioConfig {
            num_nodes,
            area_radius_m: 50.0,
            pathloss_intercept_db: 7.0,
            pathloss_exponent: 2.1,
            bandwidth_hz: 5e6,
            tx_power_dbm: 23.0,
            noise_density_dbm_per_hz: -174.0,
            cpu_profiles: vec![
                CpuProfile {
                    frequency_hz: 2.4e9,
                    fraction: 0.5,
                },
                CpuProfile {
                    frequency_hz: 7e8,
                    fraction: 0.5,
                },
            ],
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.num_nodes >= 1, "num_nodes", "must be >= 1")?;
        ensure(
            self.area_radius_m.is_finite() && self.area_radius_m > 0.0,
            "area_radius_m",
            "must be finite and > 0",
        )?;
        ensure(
            self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0,
            "bandwidth_hz",
            "must be finite and > 0",
        )?;
        ensure(
            self.pathloss_intercept_db.is_finite() && self.pathloss_exponent.is_finite(),
            "pathloss",
            "intercept and exponent must be finite",
        )?;
        ensure(
            self.tx_power_dbm.is_finite() && self.noise_density_dbm_per_hz.is_finite(),
            "power",
            "tx power and noise density must be finite",
        )?;
        ensure(
            !self.cpu_profiles.is_empty(),
            "cpu_profiles",
            "need at least one profile",
        )?;
        for p in &self.cpu_profiles {
            ensure(
                p.frequency_hz.is_finite() && p.frequency_hz > 0.0,
                "cpu_profiles",
                "frequencies must be finite and > 0",
            )?;
            ensure(
                p.fraction.is_finite() && p.fraction >= 0.0,
                "cpu_profiles",
                "fractions must be >= 0",
            )?;
        }
        let total: f64 = self.cpu_profiles.iter().map(|p| p.fraction).sum();
        ensure(
            (total - 1.0).abs() <= 1e-9,
            "cpu_profiles",
            format!("fractions must sum to 1, got {total}"),
        )
    }

    pub fn link(&self) -> Result<LinkParams> {
        LinkParams::new(
            self.bandwidth_hz,
            dbm_to_watts(self.noise_density_dbm_per_hz),
        )
    }

    /// Attenuation in dB at `distance_m` metres.
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        self.pathloss_intercept_db + 10.0 * self.pathloss_exponent * distance_m.log10()
    }

    /// First 16 hex digits of the SHA-256 of the config's JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// Frequency slot per node before shuffling: profile `i` claims
    /// `ceil(K * fraction_i)` slots in order until all `K` are taken.
    fn frequency_slots(&self) -> Vec<f64> {
        let k = self.num_nodes;
        let mut slots = Vec::with_capacity(k);
        for p in &self.cpu_profiles {
            let want = (k as f64 * p.fraction - 1e-9).ceil().max(0.0) as usize;
            let take = want.min(k - slots.len());
            slots.extend(std::iter::repeat_n(p.frequency_hz, take));
        }
        // rounding can leave the tail short; the last profile absorbs it
        let last = self
            .cpu_profiles
            .last()
            .map(|p| p.frequency_hz)
            .unwrap_or(1.0);
        slots.resize(k, last);
        slots
    }
}

/// Scenario recipe: environment config, learning task and cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub config: ScenarioConfig,
    #[serde(default = "mnist_preset")]
    pub task: LearningTask,
    pub cycle: CycleSpec,
}

impl ScenarioTemplate {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.task.validate()?;
        self.cycle.validate()
    }

    pub fn generate(&self, seed: u64) -> Result<Scenario> {
        let config = ScenarioConfig {
            rng_seed: seed,
            ..self.config.clone()
        };
        generate_scenario(&config, &self.task, &self.cycle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x_m: f64,
    pub y_m: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub nodes: Vec<EdgeNode>,
    pub placements: Vec<Placement>,
    pub link: LinkParams,
    pub task: LearningTask,
    pub cycle: CycleSpec,
    pub provenance: Provenance,
}

impl Scenario {
    /// Time coefficients for every node under the scenario's cycle.
    pub fn problem(&self) -> Result<ProblemInstance> {
        self.problem_with(self.cycle.mode, self.cycle.clock_s)
    }

    pub fn problem_with(&self, mode: Mode, clock_s: f64) -> Result<ProblemInstance> {
        let coeffs = self
            .nodes
            .iter()
            .map(|n| compute_coefficients(&self.task, n, &self.link, mode))
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(coeffs, clock_s, self.task.total_samples)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.nodes.is_empty(), "nodes", "need at least one node")?;
        ensure(
            self.placements.is_empty() || self.placements.len() == self.nodes.len(),
            "placements",
            "one placement per node",
        )?;
        for n in &self.nodes {
            n.validate()?;
        }
        self.link.validate()?;
        self.task.validate()?;
        self.cycle.validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Draws(Xoshiro256StarStar);

impl Draws {
    fn new(seed: u64) -> Self {
        Draws(Xoshiro256StarStar::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn below(&mut self, n: u64) -> u64 {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as u64
    }

    fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Places `K` nodes uniformly in the disk, assigns CPU profiles and derives
/// each node's channel gain from its distance.
pub fn generate_scenario(
    config: &ScenarioConfig,
    task: &LearningTask,
    cycle: &CycleSpec,
) -> Result<Scenario> {
    config.validate()?;
    task.validate()?;
    cycle.validate()?;

    let mut rng = Draws::new(config.rng_seed);
    let mut placements = Vec::with_capacity(config.num_nodes);
    for _ in 0..config.num_nodes {
        let u = loop {
            let u = rng.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let angle = 2.0 * std::f64::consts::PI * rng.uniform();
        let distance_m = config.area_radius_m * u.sqrt();
        placements.push(Placement {
            x_m: distance_m * angle.cos(),
            y_m: distance_m * angle.sin(),
            distance_m,
        });
    }
    let mut freqs = config.frequency_slots();
    rng.shuffle(&mut freqs);

    let tx_power_w = dbm_to_watts(config.tx_power_dbm);
    let nodes = placements
        .iter()
        .zip(&freqs)
        .enumerate()
        .map(|(k, (pl, &f))| {
            EdgeNode::new(
                format!("node-{k}"),
                f,
                tx_power_w,
                db_loss_to_gain(config.path_loss_db(pl.distance_m)),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Scenario {
        nodes,
        placements,
        link: config.link()?,
        task: task.clone(),
        cycle: *cycle,
        provenance: Provenance {
            config_hash: config.hash(),
            seed: config.rng_seed,
            rng: RNG_NAME.to_string(),
        },
    })
}

/// MNIST on a `[784, 300, 124, 60, 10]` fully connected network: 8-bit
/// pixels, 32-bit weights, a model whose size does not depend on the batch.
pub fn mnist_preset() -> LearningTask {
    const LAYERS: [u64; 5] = [784, 300, 124, 60, 10];
    let weights = LAYERS.windows(2).map(|w| w[0] * w[1]).sum();
    LearningTask {
        features: 784,
        data_precision_bits: 8,
        model_precision_bits: 32,
        per_sample_model_coeffs: 0,
        fixed_model_coeffs: weights,
        model_complexity_flops: 1_123_736,
        total_samples: 60_000,
    }
}
