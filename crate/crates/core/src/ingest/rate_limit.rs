//! Shared request gate enforcing a minimum spacing between requests.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Grants request slots no closer together than `1 / rate` seconds, so any
/// half-open one-second window holds at most `ceil(rate)` requests. Callers
/// are delayed, never refused.
pub struct RateLimiter {
    interval: Duration,
    clock: Arc<dyn Clock>,
    next_slot: Mutex<Option<Duration>>,
}

impl RateLimiter {
    pub fn new(max_requests_per_second: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(
            max_requests_per_second.is_finite() && max_requests_per_second > 0.0,
            "rate must be positive"
        );
        let nanos = (1e9 / max_requests_per_second).ceil() as u64;
        RateLimiter {
            interval: Duration::from_nanos(nanos),
            clock,
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may issue one request.
    pub fn acquire(&self) {
        let slot = {
            let mut next = self.next_slot.lock().expect("rate limiter poisoned");
            let now = self.clock.now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot
        };
        let now = self.clock.now();
        if slot > now {
            self.clock.sleep(slot - now);
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Virtual clock whose `sleep` advances time instantly.
    #[derive(Default)]
    pub struct MockClock {
        now: Mutex<Duration>,
    }

    impl Clock for MockClock {
        fn now(&self) -> Duration {
            *self.now.lock().unwrap()
        }

        fn sleep(&self, duration: Duration) {
            *self.now.lock().unwrap() += duration;
        }
    }

    fn max_in_window(stamps: &[Duration]) -> usize {
        stamps
            .iter()
            .map(|&start| {
                stamps
                    .iter()
                    .filter(|&&t| t >= start && t < start + Duration::from_secs(1))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn window_never_exceeds_rate() {
        for rate in [10.0, 3.0, 0.5] {
            let clock = Arc::new(MockClock::default());
            let limiter = RateLimiter::new(rate, clock.clone());
            let mut stamps = Vec::new();
            for _ in 0..50 {
                limiter.acquire();
                stamps.push(clock.now());
            }
            assert!(max_in_window(&stamps) <= rate.ceil() as usize, "rate {rate}");
            assert!(stamps.windows(2).all(|w| w[1] - w[0] >= limiter.interval()));
        }
    }

    #[test]
    fn idle_time_is_not_banked() {
        let clock = Arc::new(MockClock::default());
        let limiter = RateLimiter::new(2.0, clock.clone());
        limiter.acquire();
        clock.sleep(Duration::from_secs(10));
        let mut stamps = Vec::new();
        for _ in 0..6 {
            limiter.acquire();
            stamps.push(clock.now());
        }
        assert!(max_in_window(&stamps) <= 2);
    }
}
