//! Capacity analysis and Monte Carlo verification for quantize-and-forward
//! SIMO fiber-aided wireless links.
//!
//! - [`model`]: closed-form capacity upper bound, quantization penalty `Φ` and lower bound.
//! - [`quantizer`]: Zador–Gersho distortion model and trained Lloyd–Max quantizers.
//! - [`link_sim`]: end-to-end Monte Carlo simulation with linear-MMSE combining.
//! - [`optimizer`]: optimal interface count, optimal bandwidth and parameter sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod link_sim;
pub mod model;
pub mod optimizer;
pub mod quantizer;
pub mod rng;

pub use error::{Error, Result};
pub use link_sim::{empirical_distortion_vector, simulate_link, SimReport, SimRun};
pub use model::{
    capacity_lower_bound, capacity_report_at_rate, phi_decay_envelope, phi_general, phi_unit_gain,
    psi, wireless_capacity, CapacityReport, DecayEnvelope, Dimension, LinkConfig, QuantizerModel,
};
pub use num_complex::Complex64;
pub use optimizer::{
    optimal_bandwidth, optimal_interfaces, sweep, Argmax, OptimumResult, Spacing, SweepTable,
    SweepVariable,
};
pub use quantizer::{
    distortion_rate, train_gaussian_quantizer, verify_quantizer_moments, MomentReport,
    TrainedQuantizer, ZadorGershoConstants,
};
