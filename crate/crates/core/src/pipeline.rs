//! Drives the business simulation and the sensor engine in lock-step and
//! commits each step's output to the store as one batch.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{schema, Record, Timestamp};
use crate::sensor::{parse_config, SensorConfig, SensorConfigSet, SensorEngine, SensorError, DEFAULT_CONFIG_JSON};
use crate::sim::{ClockMode, MasterData, SimClock, SimError, Simulation, DEFAULT_ARRIVAL_MEAN_MS};
use crate::store::{Batch, Store, StoreError, StoreOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub seed: u64,
    pub clock: ClockMode,
    pub scale: f64,
    pub arrival_mean_ms: u64,
    pub master: MasterData,
    /// `None` selects the shipped default configuration.
    pub sensors: Option<Vec<SensorConfig>>,
    pub store: StoreOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            clock: ClockMode::RealTime,
            scale: 1.0,
            arrival_mean_ms: DEFAULT_ARRIVAL_MEAN_MS,
            master: MasterData::default(),
            sensors: None,
            store: StoreOptions::default(),
        }
    }
}

impl PipelineOptions {
    pub fn stepped(seed: u64) -> Self {
        Self {
            seed,
            clock: ClockMode::Stepped,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub business_rows: usize,
    pub sensor_rows: usize,
    pub fill_ins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineStatus {
    pub running: bool,
    pub sim_time_ms: u64,
    pub clock: ClockMode,
    pub scale: f64,
    pub seed: u64,
    pub total_rows: u64,
    pub sensor_revision: u64,
    /// Set once ingestion has stopped because the row cap was reached.
    pub halted: Option<String>,
}

pub struct Pipeline {
    sim: Simulation,
    sensors: SensorEngine,
    store: Store,
    seed: u64,
    halted: Option<String>,
}

impl Pipeline {
    /// Builds the engines and a fresh store holding the master data. The
    /// simulation starts stopped.
    pub fn new(options: PipelineOptions) -> Result<Self, PipelineError> {
        let workplaces = options.master.workplace_ids();
        let sensors = match options.sensors {
            Some(list) => {
                let set = SensorConfigSet {
                    revision: 0,
                    sensors: list,
                };
                set.validate(&workplaces)?;
                set.sensors
            }
            None => parse_config(DEFAULT_CONFIG_JSON, &workplaces)?.sensors,
        };
        let master_batch = options.master.to_batch();
        let sim = Simulation::init(
            options.seed,
            options.master,
            options.arrival_mean_ms,
            SimClock::new(options.clock, options.scale),
        )?;
        let store = Store::with_catalog(&crate::domain::catalog(), options.store);
        store.load(&master_batch)?;
        Ok(Self {
            sim,
            sensors: SensorEngine::new(sensors, options.seed),
            store,
            seed: options.seed,
            halted: None,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn sensor_config(&self) -> &SensorConfigSet {
        self.sensors.config()
    }

    pub fn now(&self) -> Timestamp {
        self.sim.now()
    }

    pub fn is_running(&self) -> bool {
        self.sim.is_running()
    }

    /// Returns false if already running or halted at the row cap.
    pub fn start(&mut self) -> bool {
        self.halted.is_none() && self.sim.start()
    }

    pub fn stop(&mut self) -> bool {
        self.sim.stop()
    }

    pub fn status(&self) -> PipelineStatus {
        let clock = self.sim.clock();
        PipelineStatus {
            running: self.sim.is_running(),
            sim_time_ms: self.sim.now().millis(),
            clock: clock.mode,
            scale: clock.scale,
            seed: self.seed,
            total_rows: self.store.total_rows(),
            sensor_revision: self.sensors.revision(),
            halted: self.halted.clone(),
        }
    }

    /// Validates and applies a configuration document; it governs every
    /// window after the current one.
    pub fn apply_sensor_config(&mut self, text: &str) -> Result<&SensorConfigSet, SensorError> {
        let next = parse_config(text, &self.sim.master().workplace_ids())?;
        self.sensors.apply(next);
        Ok(self.sensors.config())
    }

    /// Emits everything due up to `t` and commits it atomically. A stopped
    /// pipeline does nothing.
    pub fn advance_to(&mut self, t: Timestamp) -> Result<StepOutcome, PipelineError> {
        if !self.sim.is_running() {
            return Ok(StepOutcome::default());
        }
        let from = self.sim.now();
        let emitted = self.sim.advance_to(t)?;
        let readings = if t > from {
            self.sensors.generate(from, t)?
        } else {
            Vec::new()
        };
        let mut batch = Batch::default();
        emitted.append_to(&mut batch);
        batch.push_rows(schema::SENSOR_DATA, readings.iter().map(Record::to_values).collect());
        let outcome = StepOutcome {
            business_rows: emitted.row_count(),
            sensor_rows: readings.len(),
            fill_ins: batch.fill_ins.len(),
        };
        if batch.is_empty() {
            return Ok(outcome);
        }
        match self.store.commit(&batch) {
            Ok(_) => Ok(outcome),
            Err(StoreError::Full { max_rows }) => {
                let reason = format!("row cap of {max_rows} reached; ingestion stopped");
                tracing::warn!("{reason}");
                self.sim.stop();
                self.halted = Some(reason);
                Ok(StepOutcome::default())
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Advances virtual time by `ms` (stepped use).
    pub fn advance_by(&mut self, ms: u64) -> Result<StepOutcome, PipelineError> {
        let target = self.sim.now().saturating_add(ms);
        self.advance_to(target)
    }

    /// Real-time tick: converts elapsed wall time into virtual time using the
    /// clock scale. Ignored in stepped mode.
    pub fn tick(&mut self, wall_ms: f64) -> Result<StepOutcome, PipelineError> {
        if self.sim.clock().mode != ClockMode::RealTime || !self.sim.is_running() {
            return Ok(StepOutcome::default());
        }
        let target = self.sim.clock_mut().realtime_target(wall_ms);
        self.advance_to(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrity::check_integrity;

    #[test]
    fn stepped_run_populates_every_table_consistently() {
        let mut p = Pipeline::new(PipelineOptions::stepped(42)).unwrap();
        assert!(p.start());
        for _ in 0..600 {
            p.advance_by(100).unwrap();
        }
        let snap = p.store().snapshot();
        for (table, n) in snap.row_counts() {
            assert!(n > 0, "{table} is empty");
        }
        assert_eq!(snap.row_count("SENSOR_DATA"), Some(6 * 10 * 60));
        assert_eq!(check_integrity(&snap), Vec::<String>::new());
    }

    #[test]
    fn stopped_pipeline_is_inert() {
        let mut p = Pipeline::new(PipelineOptions::stepped(1)).unwrap();
        assert_eq!(p.advance_by(5_000).unwrap(), StepOutcome::default());
        assert_eq!(p.now(), Timestamp(0));
        p.start();
        p.advance_by(1_000).unwrap();
        p.stop();
        p.advance_by(1_000).unwrap();
        assert_eq!(p.now(), Timestamp(1_000));
        assert_eq!(p.store().snapshot().row_count("SENSOR_DATA"), Some(60));
    }

    #[test]
    fn row_cap_halts_ingestion() {
        let mut options = PipelineOptions::stepped(1);
        options.store.max_rows = 1_000;
        let mut p = Pipeline::new(options).unwrap();
        p.start();
        for _ in 0..100 {
            p.advance_by(1_000).unwrap();
        }
        let status = p.status();
        assert!(!status.running);
        assert!(status.halted.is_some());
        assert!(status.total_rows <= 1_000);
        assert!(!p.start());
    }

    #[test]
    fn invalid_sensor_document_leaves_config_untouched() {
        let mut p = Pipeline::new(PipelineOptions::stepped(1)).unwrap();
        assert!(p.apply_sensor_config(r#"{"sensors":[]"#).is_err());
        assert_eq!(p.sensor_config().revision, 1);
        assert_eq!(p.apply_sensor_config(r#"{"sensors":[]}"#).unwrap().revision, 2);
    }
}
