use std::time::Instant;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("negative duration: {0} ns")]
    NegativeNanos(i128),
    #[error("latency must be a non-negative finite number of milliseconds, got {0}")]
    InvalidLatency(f64),
}

/// Monotonic nanosecond clock anchored at construction.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    anchor: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self {
            anchor: Instant::now(),
        }
    }

    pub fn now_ns(&self) -> u64 {
        self.anchor.elapsed().as_nanos() as u64
    }
}

/// Convert nanoseconds to milliseconds by dividing by one million.
pub fn ns_to_ms(nanos: i128) -> Result<f64, MeasurementError> {
    if nanos < 0 {
        return Err(MeasurementError::NegativeNanos(nanos));
    }
    Ok(nanos as f64 / 1_000_000.0)
}
