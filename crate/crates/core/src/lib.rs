//! Cost/performance modeling of video GOP transcoding on heterogeneous
//! cloud VMs.
//!
//! The crate covers the full pipeline:
//!
//! * [`workload`] — task/VM domain model, benchmark trace CSV ingestion,
//!   and synthetic workload generation by content type;
//! * [`timemodel`] — second-degree regression of transcoding time,
//!   per-VM performance-ratio distributions, and ETC matrix construction;
//! * [`suitability`] — the preference-driven suitability scores per
//!   (task, VM type) and the naive weighted-sum baseline;
//! * [`simcore`] — a deterministic discrete-event simulator with
//!   deadline accounting and quantized billing;
//! * [`metrics`] — trace analyses and replication aggregation with 95%
//!   confidence intervals.
//!
//! The numeric kernels are generic over [`scalar::Real`] (`f32` or
//! `f64`); the aliases below pin the `f64` instantiations that the file
//! formats and the simulator use.

// validation uses `!(x > 0.0)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod simcore;
pub mod suitability;
pub mod timemodel;
pub mod workload;

pub use workload::{default_vm_catalog, generate_workload, parse_trace, serialize_trace};

/// Concrete `f64` instantiations of the generic kernels.
pub type QuadraticFit = timemodel::QuadraticFit<f64>;
pub type TradeoffPreference = suitability::TradeoffPreference<f64>;
pub type FuzzyParams = suitability::FuzzyParams<f64>;
pub type NaiveParams = suitability::NaiveParams<f64>;
pub type SuitabilityRow = suitability::SuitabilityRow<f64>;
