//! Wall-clock access that degrades to a no-op on `wasm32`, where
//! `std::time::Instant` is unavailable.

use std::time::Duration;

#[cfg(not(target_arch = "wasm32"))]
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(std::time::Instant);

#[cfg(target_arch = "wasm32")]
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch;

impl Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    pub fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    #[cfg(target_arch = "wasm32")]
    pub fn start() -> Self {
        Stopwatch
    }

    #[cfg(not(target_arch = "wasm32"))]
    pub fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }

    #[cfg(target_arch = "wasm32")]
    pub fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

/// A point in time after which work should stop.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    clock: Stopwatch,
    limit: Option<Duration>,
}

impl Deadline {
    pub fn new(limit: Option<Duration>) -> Self {
        Deadline {
            clock: Stopwatch::start(),
            limit,
        }
    }

    pub fn never() -> Self {
        Self::new(None)
    }

    pub fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.clock.elapsed() >= l)
    }

    pub fn elapsed(&self) -> Duration {
        self.clock.elapsed()
    }
}
