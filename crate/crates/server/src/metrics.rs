use std::time::{SystemTime, UNIX_EPOCH};

use plantpulse_core::store::{Store, StreamClass};
use serde::{Deserialize, Serialize};

/// One sample of the ingestion charts. Times are milliseconds; `wall_time`
/// counts from the Unix epoch, `sim_time` from simulation start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFrame {
    pub wall_time: u64,
    pub sim_time: u64,
    pub business_rows_per_s: f64,
    pub sensor_rows_per_s: f64,
    pub business_rows_total: u64,
    pub sensor_rows_total: u64,
}

impl MetricsFrame {
    pub fn sample(store: &Store, sim_time: u64) -> Self {
        let wall_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Self {
            wall_time,
            sim_time,
            business_rows_per_s: store.ingest_rate(StreamClass::Business),
            sensor_rows_per_s: store.ingest_rate(StreamClass::Sensor),
            business_rows_total: store.ingest_total(StreamClass::Business),
            sensor_rows_total: store.ingest_total(StreamClass::Sensor),
        }
    }
}
