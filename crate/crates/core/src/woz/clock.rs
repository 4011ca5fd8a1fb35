//! Millisecond clocks for scenario execution.

use std::time::{Duration, Instant};

pub trait Clock {
    /// Milliseconds since the clock's origin. Never decreases.
    fn now_ms(&self) -> u64;
    /// Block (or advance) until `now_ms() >= t_ms`.
    fn sleep_until(&mut self, t_ms: u64);
}

/// Deterministic clock: sleeping jumps straight to the target time.
#[derive(Debug, Clone, Default)]
pub struct SimClock {
    now: u64,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(t_ms: u64) -> Self {
        SimClock { now: t_ms }
    }

    pub fn advance(&mut self, ms: u64) {
        self.now += ms;
    }
}

impl Clock for SimClock {
    fn now_ms(&self) -> u64 {
        self.now
    }

    fn sleep_until(&mut self, t_ms: u64) {
        self.now = self.now.max(t_ms);
    }
}

/// Wall-clock time measured from construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock { origin: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }

    fn sleep_until(&mut self, t_ms: u64) {
        let target = self.origin + Duration::from_millis(t_ms);
        let now = Instant::now();
        if target > now {
            std::thread::sleep(target - now);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_clock_never_goes_back() {
        let mut c = SimClock::new();
        c.sleep_until(500);
        assert_eq!(c.now_ms(), 500);
        c.sleep_until(200);
        assert_eq!(c.now_ms(), 500);
        c.advance(7);
        assert_eq!(c.now_ms(), 507);
    }

    #[test]
    fn wall_clock_sleeps_at_least_until_target() {
        let mut c = WallClock::new();
        c.sleep_until(5);
        assert!(c.now_ms() >= 5);
    }
}
