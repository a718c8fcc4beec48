//! Caps on the size of periodic objects.
//!
//! Every operation that builds a period or a threshold checks it against the
//! caps in effect on the current thread. Exceeding a cap is always a named
//! error, never a truncation.

use std::cell::Cell;

use crate::error::{Error, Result};

pub const DEFAULT_PERIOD_CAP: u64 = 1_000_000;
pub const DEFAULT_THRESHOLD_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub period_cap: u64,
    pub threshold_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            period_cap: DEFAULT_PERIOD_CAP,
            threshold_cap: DEFAULT_THRESHOLD_CAP,
        }
    }
}

thread_local! {
    static CURRENT: Cell<Limits> = Cell::new(Limits::default());
}

impl Limits {
    pub fn current() -> Limits {
        CURRENT.with(|c| c.get())
    }

    /// Runs `f` with `self` installed as the limits of the current thread.
    pub fn scoped<T>(self, f: impl FnOnce() -> T) -> T {
        let prev = CURRENT.with(|c| c.replace(self));
        struct Restore(Limits);
        impl Drop for Restore {
            fn drop(&mut self) {
                CURRENT.with(|c| c.set(self.0));
            }
        }
        let _restore = Restore(prev);
        f()
    }
}

pub(crate) fn check_period(period: u128) -> Result<u64> {
    let cap = Limits::current().period_cap;
    if period == 0 || period > cap as u128 {
        return Err(Error::PeriodOverflow { period, cap });
    }
    Ok(period as u64)
}

pub(crate) fn check_threshold(threshold: u128) -> Result<u64> {
    let cap = Limits::current().threshold_cap;
    if threshold > cap as u128 {
        return Err(Error::ThresholdOverflow { threshold, cap });
    }
    Ok(threshold as u64)
}

pub(crate) fn lcm(a: u64, b: u64) -> Result<u64> {
    let l = num_integer::lcm(a as u128, b as u128);
    check_period(l)
}
