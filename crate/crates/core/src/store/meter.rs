use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::domain::schema;

pub const DEFAULT_WINDOW_S: u32 = 10;

/// Which ingestion chart a table's rows are credited to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamClass {
    Business,
    Sensor,
}

impl StreamClass {
    pub fn for_table(name: &str) -> StreamClass {
        if name.eq_ignore_ascii_case(schema::SENSOR_DATA) {
            StreamClass::Sensor
        } else {
            StreamClass::Business
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Bucket {
    second: u64,
    rows: u64,
}

#[derive(Debug)]
struct MeterState {
    /// Completed seconds, slot = second % window.
    ring: Vec<Bucket>,
    current: Bucket,
}

/// Sliding-window row counter reporting rows per second over the last
/// `window_s` full seconds.
#[derive(Debug)]
pub struct RateMeter {
    window_s: u32,
    state: Mutex<MeterState>,
    total: AtomicU64,
}

impl RateMeter {
    pub fn new(window_s: u32) -> Self {
        let window_s = window_s.max(1);
        Self {
            window_s,
            state: Mutex::new(MeterState {
                ring: vec![Bucket { second: u64::MAX, rows: 0 }; window_s as usize],
                current: Bucket { second: 0, rows: 0 },
            }),
            total: AtomicU64::new(0),
        }
    }

    pub fn window_s(&self) -> u32 {
        self.window_s
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Acquire)
    }

    /// Credits `rows` to the bucket of wall-second `second`. Seconds must be
    /// non-decreasing across calls; late credits land in the current bucket.
    pub fn credit_at(&self, second: u64, rows: u64) {
        let mut st = self.state.lock();
        if second > st.current.second {
            let done = st.current;
            let w = self.window_s as u64;
            st.ring[(done.second % w) as usize] = done;
            st.current = Bucket { second, rows: 0 };
        }
        st.current.rows += rows;
        self.total.fetch_add(rows, Ordering::AcqRel);
    }

    /// Average rows per second over the `window_s` full seconds preceding
    /// `now_second`.
    pub fn rate_at(&self, now_second: u64) -> f64 {
        let st = self.state.lock();
        let w = self.window_s as u64;
        let from = now_second.saturating_sub(w);
        let in_window = |b: &Bucket| b.second != u64::MAX && b.second >= from && b.second < now_second;
        let mut rows: u64 = st.ring.iter().filter(|b| in_window(b)).map(|b| b.rows).sum();
        // the current bucket may already be complete but not yet rolled
        if in_window(&st.current) && st.ring[(st.current.second % w) as usize].second != st.current.second {
            rows += st.current.rows;
        }
        rows as f64 / w as f64
    }
}

/// One meter per stream class, sharing a wall clock.
#[derive(Debug)]
pub struct RateMeters {
    started: Instant,
    business: RateMeter,
    sensor: RateMeter,
}

impl RateMeters {
    pub fn new(window_s: u32) -> Self {
        Self {
            started: Instant::now(),
            business: RateMeter::new(window_s),
            sensor: RateMeter::new(window_s),
        }
    }

    pub fn meter(&self, class: StreamClass) -> &RateMeter {
        match class {
            StreamClass::Business => &self.business,
            StreamClass::Sensor => &self.sensor,
        }
    }

    pub fn now_second(&self) -> u64 {
        self.started.elapsed().as_secs()
    }

    pub fn credit(&self, class: StreamClass, rows: u64) {
        if rows > 0 {
            self.meter(class).credit_at(self.now_second(), rows);
        }
    }

    pub fn rate(&self, class: StreamClass) -> f64 {
        self.meter(class).rate_at(self.now_second())
    }
}
