//! Command-line front end: run configuration, ensemble runs, fitting,
//! coupling scans and the standard figure parameter sets.

pub mod config;
pub mod csvio;
pub mod error;
pub mod fit;
pub mod plot;
pub mod reproduce;
pub mod run;
pub mod scan;

pub use config::{parse_config, RunConfig};
pub use error::{exit, CliError, Result};
