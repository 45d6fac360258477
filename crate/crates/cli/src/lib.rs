//! Command-line front end for the quantization-design library: scenario
//! files, result CSVs, run manifests, and the optimize/sweep/check drivers.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_scenario, parse_scenario, LoadedScenario, ScenarioFile};
pub use output::RunManifest;
pub use run::{cmd_check, cmd_optimize, cmd_sweep, CheckArgs, OptimizeArgs, SweepArgs};
