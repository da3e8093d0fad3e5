//! Millisecond UTC timestamps and ceremony calendar arithmetic.
//!
//! Latecomer windows on dense city grids come out well under a second, so
//! wall-clock times carry millisecond resolution throughout.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

pub const MS_PER_SECOND: i64 = 1_000;
pub const MS_PER_HOUR: i64 = 3_600_000;
pub const MS_PER_DAY: i64 = 86_400_000;

/// Milliseconds since the Unix epoch, UTC.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_ms(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn ms(self) -> i64 {
        self.0
    }

    /// 12:00 UTC on the given calendar day.
    pub fn utc_noon(date: NaiveDate) -> Self {
        let midnight = date.and_hms_opt(0, 0, 0).expect("valid time");
        Timestamp(midnight.and_utc().timestamp_millis() + 12 * MS_PER_HOUR)
    }

    pub fn add_ms(self, ms: i64) -> Self {
        Timestamp(self.0 + ms)
    }

    pub fn add_hours(self, hours: i64) -> Self {
        Timestamp(self.0 + hours * MS_PER_HOUR)
    }

    /// Fractional days from `earlier` to `self`; negative if `self` precedes it.
    pub fn days_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / MS_PER_DAY as f64
    }
}

impl std::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match chrono::DateTime::from_timestamp_millis(self.0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S%.3fZ")),
            None => write!(f, "{}ms", self.0),
        }
    }
}

/// Calendar day of ceremony `index`, counting `interval_days` per step from
/// the bootstrap day (index 0).
pub fn ceremony_date(genesis: NaiveDate, index: u64, interval_days: u32) -> NaiveDate {
    genesis
        .checked_add_days(Days::new(index * interval_days as u64))
        .expect("ceremony date within calendar range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn noon_of_epoch_day() {
        assert_eq!(Timestamp::utc_noon(d("1970-01-01")).ms(), 12 * MS_PER_HOUR);
        assert_eq!(
            Timestamp::utc_noon(d("1970-01-02")).ms(),
            MS_PER_DAY + 12 * MS_PER_HOUR
        );
    }

    #[test]
    fn ceremony_calendar_steps_by_interval() {
        let genesis = d("2026-01-01");
        assert_eq!(ceremony_date(genesis, 0, 41), genesis);
        assert_eq!(ceremony_date(genesis, 1, 41), d("2026-02-11"));
        assert_eq!(ceremony_date(genesis, 2, 41), d("2026-03-24"));
        // 50 intervals of 41 days = 2050 days
        let far = ceremony_date(genesis, 50, 41);
        assert_eq!(far.signed_duration_since(genesis).num_days(), 2050);
    }

    #[test]
    fn day_arithmetic() {
        let a = Timestamp::from_ms(0);
        let b = a.add_hours(36);
        assert_eq!(b.days_since(a), 1.5);
        assert_eq!(a.days_since(b), -1.5);
        assert_eq!(a.add_ms(250).ms(), 250);
    }

    #[test]
    fn display_is_utc_rfc3339() {
        assert_eq!(
            Timestamp::utc_noon(d("2026-02-11")).to_string(),
            "2026-02-11T12:00:00.000Z"
        );
        assert_eq!(Timestamp::from_ms(1250).to_string(), "1970-01-01T00:00:01.250Z");
    }
}
