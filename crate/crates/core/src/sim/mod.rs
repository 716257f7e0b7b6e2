//! Seeded discrete-event simulation of the factory's business processes:
//! customer orders arrive, production orders consume purchased material lots
//! and move through their routing's workplaces.

mod clock;
mod engine;
mod master;

use thiserror::Error;

use crate::domain::Timestamp;

pub use clock::{ClockMode, SimClock};
pub use engine::{
    EmittedBatch, RowUpdate, SimEvent, SimEventKind, Simulation, DEFAULT_ARRIVAL_MEAN_MS, PURCHASE_LOT_SIZE,
};
pub use master::{MasterData, RoutingStep, ASSEMBLY, CUTTING_MACHINE, DEFAULT_STEP_JITTER, DEFAULT_STEP_MEAN_MS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid master data: {}", .0.join("; "))]
    InvalidMaster(Vec<String>),
    #[error("arrival mean must be a positive number of milliseconds")]
    InvalidArrivalMean,
    #[error("cannot advance to {requested}: clock is already at {now}")]
    TimeInPast { now: Timestamp, requested: Timestamp },
}
