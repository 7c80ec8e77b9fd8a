//! Simulation of long-memory noises (fractional Brownian motion and a random
//! walk converging to the Rosenblatt process) and drift estimation from
//! discretely observed paths.
//!
//! The walk is built from the second-order kernel `F` of the Rosenblatt
//! process. Its weights come from [`table::build_kernel_table`], paths from
//! [`rosenblatt::simulate_rosenblatt_walk`], and estimators live in
//! [`estimators`]. The [`harness`] module runs seeded, replication-batched
//! Monte Carlo experiments on top of these.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod fbm;
pub mod grid;
pub mod harness;
pub mod hurst;
pub mod kernel;
pub mod moments;
pub mod quadrature;
pub mod rng;
pub mod rosenblatt;
pub mod table;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, Model, ObservationSeries};
pub use fbm::{NoiseKind, NoisePath};
pub use grid::GridSpec;
pub use harness::{ExperimentConfig, McSummary, RunOptions};
pub use hurst::{hurst_constants, HurstParam, Mode};
pub use quadrature::QuadratureSpec;
pub use rosenblatt::RosenblattPath;
pub use table::KernelTable;
