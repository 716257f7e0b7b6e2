use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{EntityId, IdAllocator, SensorReading, Timestamp};

use super::{apply_config, SensorConfig, SensorConfigSet, SensorError};

/// ChaCha stream used for sensor noise so it never shares draws with the
/// business simulation seeded from the same value.
const SENSOR_RNG_STREAM: u64 = 1;

/// Deterministic part of the signal at `t`.
pub fn signal_at(config: &SensorConfig, t: Timestamp) -> f64 {
    let elapsed = t.millis() as f64 - config.phase_ms as f64;
    config.base + config.amplitude * (2.0 * PI * elapsed / (1000.0 * config.period_s)).sin()
}

/// Signal plus Gaussian noise. No random draw is consumed when the sigma is 0.
pub fn value_at(config: &SensorConfig, t: Timestamp, rng: &mut impl Rng) -> f64 {
    let clean = signal_at(config, t);
    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
        clean + normal.sample(rng)
    } else {
        clean
    }
}

/// All readings emitted in `[t0, t1)`, ordered by `(date, sensor_id)`.
pub fn readings_between(
    set: &SensorConfigSet,
    t0: Timestamp,
    t1: Timestamp,
    rng: &mut impl Rng,
    ids: &mut IdAllocator,
) -> Result<Vec<SensorReading>, SensorError> {
    if t0 >= t1 {
        return Err(SensorError::EmptyWindow { from: t0, to: t1 });
    }
    let (lo, hi) = (t0.millis() as f64, t1.millis() as f64);
    let mut slots: Vec<(Timestamp, EntityId, usize)> = Vec::new();
    for (idx, s) in set.sensors.iter().enumerate() {
        let mut k = s.first_index_at_or_after(lo);
        loop {
            let t = s.instant(k);
            if t >= hi {
                break;
            }
            slots.push((Timestamp(t.floor() as u64), s.sensor_id, idx));
            k += 1;
        }
    }
    slots.sort_unstable_by_key(|&(date, sensor, _)| (date, sensor));
    Ok(slots
        .into_iter()
        .map(|(date, _, idx)| {
            let s = &set.sensors[idx];
            SensorReading {
                id: ids.next_id(),
                workplace_id: s.workplace_id,
                sensor_id: s.sensor_id,
                date,
                kind: s.kind,
                value: value_at(s, date, rng),
            }
        })
        .collect())
}

/// Stateful reading generator: owns the active set, the noise rng and the
/// SENSOR_DATA id sequence.
#[derive(Debug, Clone)]
pub struct SensorEngine {
    set: SensorConfigSet,
    rng: ChaCha8Rng,
    ids: IdAllocator,
}

impl SensorEngine {
    /// Starts at revision 1 with the given sensors.
    pub fn new(sensors: Vec<SensorConfig>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SENSOR_RNG_STREAM);
        Self {
            set: SensorConfigSet { revision: 1, sensors },
            rng,
            ids: IdAllocator::new(),
        }
    }

    pub fn config(&self) -> &SensorConfigSet {
        &self.set
    }

    pub fn revision(&self) -> u64 {
        self.set.revision
    }

    /// Swaps in a new set; it governs every window generated afterwards.
    pub fn apply(&mut self, next: SensorConfigSet) -> u64 {
        self.set = apply_config(&self.set, next);
        self.set.revision
    }

    pub fn generate(&mut self, t0: Timestamp, t1: Timestamp) -> Result<Vec<SensorReading>, SensorError> {
        readings_between(&self.set, t0, t1, &mut self.rng, &mut self.ids)
    }
}
