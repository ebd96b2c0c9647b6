//! Scenario definitions, sweeps, closed-form checks and plot emission.

pub mod config;
pub mod dump;
pub mod maker;
pub mod plots;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use config::{CurveChoice, MakerSpec, ScenarioConfig};
pub use plots::emit_plots;
pub use scenario::{run_scenario, run_seed, Keep, ScenarioOutcome, SeedOutcome};
pub use sweep::{run_sweep, Axis, SweepResult, SweepRow, SweepSpec};
