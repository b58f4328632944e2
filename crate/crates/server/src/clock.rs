use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rollingchat_core::chatcore::Millis;

/// Source of room time in milliseconds since the epoch.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> Millis;

    /// Room milliseconds per real millisecond.
    fn scale(&self) -> f64 {
        1.0
    }
}

fn epoch_ms() -> Millis {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as Millis)
}

/// Wall time, read once and then advanced monotonically.
#[derive(Debug, Clone)]
pub struct SystemClock {
    origin_ms: Millis,
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin_ms: epoch_ms(), origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> Millis {
        self.origin_ms + self.origin.elapsed().as_millis() as Millis
    }
}

/// Room time running `scale` times faster than wall time, so that a
/// two-minute dormancy window can pass in a second of testing.
#[derive(Debug, Clone)]
pub struct ScaledClock {
    origin_ms: Millis,
    origin: Instant,
    scale: f64,
}

impl ScaledClock {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "time scale must be positive");
        ScaledClock { origin_ms: epoch_ms(), origin: Instant::now(), scale }
    }

    pub fn starting_at(origin_ms: Millis, scale: f64) -> Self {
        ScaledClock { origin_ms, ..Self::new(scale) }
    }
}

impl Clock for ScaledClock {
    fn now_ms(&self) -> Millis {
        self.origin_ms + (self.origin.elapsed().as_secs_f64() * 1000.0 * self.scale) as Millis
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}
