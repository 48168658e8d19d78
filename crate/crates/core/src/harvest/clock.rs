//! Time sources and the shared request rate limiter.

use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Monotonic time source that can also wait.
pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's epoch.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    epoch: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { epoch: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.epoch.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual time: `sleep` advances the clock instantly. Meant for single-threaded tests.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
}

impl ManualClock {
    pub fn new() -> Self {
        ManualClock::default()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

/// Extra spacing per request, so that scheduling jitter between the grant
/// and the request actually leaving cannot squeeze an extra request into a
/// one-second interval.
const MARGIN: Duration = Duration::from_millis(1);

/// Spaces requests at least `1 / rate` seconds apart, across all callers.
///
/// Each grant is timed from the moment the previous caller was actually
/// released, so any one-second interval holds at most `ceil(rate)` requests.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    last_grant: Mutex<Option<Duration>>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        assert!(requests_per_second > 0.0 && requests_per_second.is_finite(), "rate must be positive");
        RateLimiter { interval: Duration::from_secs_f64(1.0 / requests_per_second) + MARGIN, last_grant: Mutex::new(None) }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may issue one request.
    pub fn acquire(&self, clock: &dyn Clock) {
        // waiting callers queue on the lock, which keeps grants in order
        let mut last = self.last_grant.lock().unwrap();
        if let Some(prev) = *last {
            let due = prev + self.interval;
            let now = clock.now();
            if due > now {
                clock.sleep(due - now);
            }
        }
        *last = Some(clock.now());
    }
}
