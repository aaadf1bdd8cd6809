//! Scenario configuration, file formats, invariant suites, convergence
//! studies and the subcommands of the `semirecon` binary.

pub mod commands;
pub mod config;
pub mod convergence;
pub mod io;
pub mod metrics;
pub mod suites;

pub use commands::{cmd_convergence, cmd_reconstruct, cmd_synthesize, cmd_verify, load_scenario};
pub use config::ScenarioConfig;
