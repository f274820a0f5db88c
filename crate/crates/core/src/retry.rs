use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};

pub const MAX_ATTEMPTS: usize = 3;

/// Runs `op` up to `attempts` times, sleeping `base`, `2*base`, ... between
/// tries. Only [`Error::ProviderUnavailable`] is retried.
pub fn with_backoff<T>(attempts: usize, base: Duration, mut op: impl FnMut() -> Result<T>) -> Result<T> {
    let mut delay = base;
    let mut last = None;
    for attempt in 0..attempts.max(1) {
        if attempt > 0 {
            thread::sleep(delay);
            delay *= 2;
        }
        match op() {
            Err(e @ Error::ProviderUnavailable(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}
