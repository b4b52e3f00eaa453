//! Simulation and analysis of caches holding data objects in layered or
//! multiple representations.
//!
//! - [`catalog`]: objects, versions, layer and MR sizes, request rates.
//! - [`workload`]: popularity builders and IRM trace sampling.
//! - [`policies`]: LLRU, LLFU, LBelady, MRLRU, HLRU, static HLFU and the
//!   static optimal placement.
//! - [`analysis`]: working-set approximation, continuum limits, variance.
//! - [`sim`]: trace-driven simulation and CSV rows.
//! - [`experiment`]: configuration documents and figure presets.

// Range checks are written `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod experiment;
pub mod policies;
pub mod sim;
pub mod workload;

pub use catalog::{apply_overhead, derive_popularity, Catalog, DerivedPopularity, OverheadModel};
pub use error::{Error, Result};
pub use policies::{build_policy, CachePolicy, PolicyKind, Residency};
pub use sim::{replicate, run_simulation, SimOptions, SimReport};
pub use workload::{derive_seed, sample_trace, seeded_rng, Request, Trace};
