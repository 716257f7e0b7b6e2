//! Configurable sensor streams: readings on a fixed emission grid per sensor,
//! valued by a sine signal with Gaussian noise.

mod config;
mod engine;

use thiserror::Error;

use crate::domain::Timestamp;

pub use config::{apply_config, parse_config, SensorConfig, SensorConfigSet, DEFAULT_CONFIG_JSON, MAX_RATE_HZ};
pub use engine::{readings_between, signal_at, value_at, SensorEngine};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("invalid sensor configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("empty window [{from}, {to})")]
    EmptyWindow { from: Timestamp, to: Timestamp },
}

#[cfg(test)]
mod tests;
