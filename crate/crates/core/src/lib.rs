//! Two-tier heterogeneous cellular network simulator and misconfiguration
//! diagnosis library.
//!
//! The crate is split along the pipeline a diagnosis experiment runs through:
//!
//! - [`scenario`] builds macro + femto layouts and injects labeled
//!   misconfigurations into femtocells.
//! - [`radio`] holds the propagation models and SINR arithmetic.
//! - [`sim`] steps users through mobility, handover, radio-link failure and
//!   traffic, and aggregates per-cell KPIs into labeled [`sim::Instance`]s.
//! - [`analytics`] computes trace statistics (radius of gyration, visited
//!   cells, location-type traffic tables, handover/traffic rank correlation).
//! - [`diagnosis`] trains the standalone, unified and transfer diagnosers.
//! - [`harness`] runs the density sweep and renders reports.
//!
//! Runnable walkthroughs of each stage live in the crate's `examples/`
//! directory.

pub mod analytics;
pub mod diagnosis;
pub mod error;
pub mod harness;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use scenario::{Cell, CellId, ConfigClass, LocationType, NetworkLayout, ScenarioConfig, Tier};
