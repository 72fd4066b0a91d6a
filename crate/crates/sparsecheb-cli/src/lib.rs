//! Config-driven experiment runner on top of `sparsecheb`.

pub mod config;
pub mod harness;

pub use config::{ConfigError, ExperimentConfig, RawConfig};
pub use harness::{Harness, HarnessError};
