//! Deterministic microscopic simulator of a four-way intersection, comparing
//! fixed-cycle traffic lights against cooperative V2V brake-or-pass control.

pub mod config;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod policy;
pub mod report;
pub mod suite;
pub mod traffic;

pub use config::{parse_scenario, PolicyKind, ScenarioConfig};
pub use engine::{run, SimResult, Simulation};
pub use error::{ConfigError, DynamicsError, MetricsError, SimError};
pub use geometry::{Direction, IntersectionGeometry};
