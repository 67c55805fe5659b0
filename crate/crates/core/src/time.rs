use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Simulation time or duration in integer microseconds.
///
/// Every schedule used by the workloads (10.7 ms, 1.337 ms, 60 ms) is an exact
/// number of microseconds, so periodic schedules never drift.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_micros(us: u64) -> Self {
        Self(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        Self(ms * 1000)
    }

    /// Converts fractional milliseconds, rounding to the nearest microsecond.
    /// Negative and non-finite inputs map to zero.
    pub fn from_millis_f64(ms: f64) -> Self {
        if !ms.is_finite() || ms <= 0.0 {
            return Self(0);
        }
        Self((ms * 1000.0).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub const fn as_millis(self) -> u64 {
        self.0 / 1000
    }

    pub fn as_millis_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    /// True iff strictly more than `span` has elapsed since `since`
    /// (always true when `since` is `None`).
    pub fn elapsed_more_than(self, since: Option<SimTime>, span: SimTime) -> bool {
        match since {
            None => true,
            Some(t) => self.saturating_sub(t) > span && self >= t,
        }
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 = self.0.saturating_add(rhs.0);
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0 / 1000;
        let frac = self.0 % 1000;
        if frac == 0 {
            write!(f, "{ms}")
        } else {
            let s = format!("{ms}.{frac:03}");
            f.write_str(s.trim_end_matches('0'))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_schedules() {
        assert_eq!(SimTime::from_millis_f64(10.7).as_micros(), 10_700);
        assert_eq!(SimTime::from_millis_f64(1.337).as_micros(), 1_337);
        assert_eq!(SimTime::from_millis_f64(-3.0), SimTime::ZERO);
    }

    #[test]
    fn display_is_milliseconds() {
        assert_eq!(SimTime::from_micros(1_500).to_string(), "1.5");
        assert_eq!(SimTime::from_millis(26_000).to_string(), "26000");
        assert_eq!(SimTime::from_micros(1_337).to_string(), "1.337");
    }

    #[test]
    fn elapsed_more_than_is_strict() {
        let wait = SimTime::from_millis(60);
        let t0 = SimTime::from_millis(100);
        assert!(SimTime::from_millis(161).elapsed_more_than(Some(t0), wait));
        assert!(!SimTime::from_millis(160).elapsed_more_than(Some(t0), wait));
        assert!(SimTime::ZERO.elapsed_more_than(None, wait));
    }
}
