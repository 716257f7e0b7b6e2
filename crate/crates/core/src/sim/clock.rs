use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Virtual time follows wall time, multiplied by `scale`.
    RealTime,
    /// Virtual time moves only through explicit advance calls.
    Stepped,
}

impl FromStr for ClockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "realtime" => Ok(ClockMode::RealTime),
            "stepped" => Ok(ClockMode::Stepped),
            other => Err(format!("unknown clock mode {other:?} (expected realtime or stepped)")),
        }
    }
}

/// Virtual simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimClock {
    pub mode: ClockMode,
    pub scale: f64,
    now: Timestamp,
    /// Sub-millisecond remainder carried between real-time ticks.
    carry: f64,
}

impl SimClock {
    pub fn new(mode: ClockMode, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "clock scale must be positive");
        Self {
            mode,
            scale,
            now: Timestamp::ZERO,
            carry: 0.0,
        }
    }

    pub fn stepped() -> Self {
        Self::new(ClockMode::Stepped, 1.0)
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub(crate) fn set_now(&mut self, t: Timestamp) {
        debug_assert!(t >= self.now);
        self.now = t;
    }

    /// Virtual target time after `wall_ms` of wall time have passed; the
    /// fractional remainder is kept for the next tick so time does not drift.
    pub fn realtime_target(&mut self, wall_ms: f64) -> Timestamp {
        let advance = wall_ms.max(0.0) * self.scale + self.carry;
        let whole = (advance + 1e-9).floor();
        self.carry = (advance - whole).max(0.0);
        self.now.saturating_add(whole as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realtime_target_scales_and_carries_fractions() {
        let mut c = SimClock::new(ClockMode::RealTime, 2.5);
        assert_eq!(c.realtime_target(100.0), Timestamp(250));
        let mut c = SimClock::new(ClockMode::RealTime, 0.3);
        let mut t = Timestamp(0);
        for _ in 0..10 {
            t = c.realtime_target(1.0);
            c.set_now(t);
        }
        assert_eq!(t, Timestamp(3));
    }

    #[test]
    fn mode_parses_case_insensitively() {
        assert_eq!("RealTime".parse::<ClockMode>(), Ok(ClockMode::RealTime));
        assert_eq!("stepped".parse::<ClockMode>(), Ok(ClockMode::Stepped));
        assert!("fast".parse::<ClockMode>().is_err());
    }
}
