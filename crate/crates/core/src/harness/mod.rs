//! Scenario configuration and orchestration.
//!
//! A [`Scenario`] is resolved from a TOML file plus command-line
//! [`Overrides`]; the functions in [`run`] and [`report`] turn it into CSV
//! files and a JSON manifest.

pub mod config;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Algorithm, Overrides, Scenario, ScenarioConfig};
