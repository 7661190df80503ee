//! Adaptive batch allocation for distributed learning on heterogeneous
//! wireless edge nodes.
//!
//! Given each learner's compute speed and link quality, a global cycle clock
//! `T` and a dataset of `d` samples, pick per-learner batch sizes that
//! maximize the number of local iterations `tau` every learner can complete
//! within `T`.

pub mod allocator;
pub mod error;
pub mod harness;
pub mod model;
pub mod scenarios;

pub use error::{MelError, Result};
