//! Second-resolution UTC timestamps as stored in the index.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// UTC instant truncated to whole seconds, rendered `YYYY-MM-DD HH:MM:SS`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Timestamp(NaiveDateTime);

impl Timestamp {
    pub fn new(datetime: NaiveDateTime) -> Self {
        Timestamp(datetime.with_nanosecond(0).unwrap_or(datetime))
    }

    pub fn from_unix(secs: i64) -> Option<Self> {
        DateTime::from_timestamp(secs, 0).map(|dt| Timestamp(dt.naive_utc()))
    }

    pub fn unix(&self) -> i64 {
        self.0.and_utc().timestamp()
    }

    pub fn datetime(&self) -> NaiveDateTime {
        self.0
    }

    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    pub fn start_of(date: NaiveDate) -> Self {
        Timestamp(date.and_time(NaiveTime::MIN))
    }

    /// Last representable second of `date`.
    pub fn end_of(date: NaiveDate) -> Self {
        Timestamp(date.and_hms_opt(23, 59, 59).expect("valid time"))
    }

    pub fn plus_seconds(&self, secs: i64) -> Self {
        Timestamp::from_unix(self.unix() + secs).expect("timestamp in range")
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(TIMESTAMP_FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
            .map_err(|_| Error::MalformedTimestamp(s.into()))?;
        let ts = Timestamp(parsed);
        // chrono accepts unpadded fields; the stored form is fixed-width
        if ts.to_string() != s {
            return Err(Error::MalformedTimestamp(s.into()));
        }
        Ok(ts)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Strict `YYYY-MM-DD` parser.
pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let date =
        NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|_| Error::MalformedDate(s.into()))?;
    if date.format(DATE_FORMAT).to_string() != s {
        return Err(Error::MalformedDate(s.into()));
    }
    Ok(date)
}

/// Source of save timestamps.
pub trait Clock {
    fn now(&self) -> Timestamp;
}

/// Clock that always reports the same instant.
#[derive(Clone, Copy, Debug)]
pub struct FixedClock(pub Timestamp);

impl Clock for FixedClock {
    fn now(&self) -> Timestamp {
        self.0
    }
}
