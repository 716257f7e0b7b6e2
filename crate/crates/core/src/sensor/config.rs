use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{EntityId, SensorKind};

use super::SensorError;

pub const MAX_RATE_HZ: f64 = 10_000.0;

/// The configuration file shipped with the repository.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../config/sensors.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub sensor_id: EntityId,
    pub workplace_id: EntityId,
    pub kind: SensorKind,
    pub rate_hz: f64,
    pub base: f64,
    pub amplitude: f64,
    pub period_s: f64,
    pub noise_sigma: f64,
    pub phase_ms: u64,
}

impl SensorConfig {
    /// Milliseconds between two emissions.
    pub fn interval_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    /// Exact emission instant with grid index `k` (which may be negative).
    pub fn instant(&self, k: i64) -> f64 {
        self.phase_ms as f64 + k as f64 * self.interval_ms()
    }

    /// Smallest grid index whose instant is at or after `t`.
    pub fn first_index_at_or_after(&self, t: f64) -> i64 {
        let mut k = ((t - self.phase_ms as f64) / self.interval_ms()).ceil() as i64;
        while self.instant(k - 1) >= t {
            k -= 1;
        }
        while self.instant(k) < t {
            k += 1;
        }
        k
    }

    fn violations(&self, workplaces: &BTreeSet<EntityId>, out: &mut Vec<String>) {
        let id = self.sensor_id;
        if id.get() == 0 {
            out.push("sensor_id must be positive".into());
        }
        if !(self.rate_hz > 0.0 && self.rate_hz <= MAX_RATE_HZ) {
            out.push(format!("sensor {id}: rate out of range (0, {MAX_RATE_HZ}]: {}", self.rate_hz));
        }
        if !workplaces.contains(&self.workplace_id) {
            out.push(format!("sensor {id}: unknown workplace {}", self.workplace_id));
        }
        if !self.base.is_finite() {
            out.push(format!("sensor {id}: base must be finite"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            out.push(format!("sensor {id}: amplitude must be non-negative"));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            out.push(format!("sensor {id}: period_s must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            out.push(format!("sensor {id}: noise_sigma must be non-negative"));
        }
    }
}

/// The complete active sensor configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorConfigSet {
    pub revision: u64,
    pub sensors: Vec<SensorConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    sensors: Vec<SensorConfig>,
    /// Accepted so a document read back from the API can be resubmitted.
    #[serde(default)]
    #[allow(dead_code)]
    revision: Option<u64>,
}

impl SensorConfigSet {
    pub fn empty() -> Self {
        Self {
            revision: 0,
            sensors: Vec::new(),
        }
    }

    /// Checks the set against the known workplaces, reporting every violation.
    pub fn validate(&self, workplaces: &[EntityId]) -> Result<(), SensorError> {
        let known: BTreeSet<_> = workplaces.iter().copied().collect();
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        let mut reported = BTreeSet::new();
        for s in &self.sensors {
            if !seen.insert(s.sensor_id) && reported.insert(s.sensor_id) {
                errors.push(format!("duplicate sensor_id {}", s.sensor_id));
            }
            s.violations(&known, &mut errors);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SensorError::InvalidConfig(errors))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a configuration document. The returned set has
/// revision 0; revisions are assigned when a set is applied.
pub fn parse_config(text: &str, workplaces: &[EntityId]) -> Result<SensorConfigSet, SensorError> {
    let doc: ConfigDocument =
        serde_json::from_str(text).map_err(|e| SensorError::InvalidConfig(vec![format!("malformed document: {e}")]))?;
    let set = SensorConfigSet {
        revision: 0,
        sensors: doc.sensors,
    };
    set.validate(workplaces)?;
    Ok(set)
}

/// Replaces `current` wholesale with the sensors of `next`.
pub fn apply_config(current: &SensorConfigSet, next: SensorConfigSet) -> SensorConfigSet {
    SensorConfigSet {
        revision: current.revision + 1,
        sensors: next.sensors,
    }
}
