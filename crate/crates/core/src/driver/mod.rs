//! Configuration, the per-step loop and snapshot output.

pub mod config;
pub mod run;
pub mod simulation;
pub mod snapshot;

pub use config::{validate_config, ModelKind, ModelParams, RunConfig};
pub use run::{oracle_table, run, RunOutcome};
pub use simulation::{DampingMode, Simulation, StepReport};
pub use snapshot::Snapshot;
