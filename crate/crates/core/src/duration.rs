//! Millisecond durations and their human-readable string form (`"350ms"`,
//! `"30min"`, `"24h"`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MS_PER_SECOND: u64 = 1_000;
const MS_PER_MINUTE: u64 = 60 * MS_PER_SECOND;
const MS_PER_HOUR: u64 = 60 * MS_PER_MINUTE;

/// A non-negative duration with millisecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DurationMs(u64);

impl DurationMs {
    pub const ZERO: DurationMs = DurationMs(0);

    pub const fn from_ms(ms: u64) -> Self {
        DurationMs(ms)
    }

    pub const fn from_secs(secs: u64) -> Self {
        DurationMs(secs * MS_PER_SECOND)
    }

    pub const fn from_mins(mins: u64) -> Self {
        DurationMs(mins * MS_PER_MINUTE)
    }

    pub const fn from_hours(hours: u64) -> Self {
        DurationMs(hours * MS_PER_HOUR)
    }

    pub const fn as_ms(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DurationError {
    #[error("empty duration string")]
    Empty,
    #[error("malformed number {0:?} in duration")]
    Malformed(String),
    #[error("negative duration {0:?}")]
    Negative(String),
    #[error("unknown duration unit {0:?} (expected ms, s, min or h)")]
    UnknownUnit(String),
    #[error("duration {0:?} overflows")]
    Overflow(String),
}

/// Parses `"<number><unit>"` where unit is one of `ms`, `s`, `min`, `h`.
///
/// Decimal values are converted exactly and the fractional millisecond is
/// truncated, so `"1.5ms"` is 1 ms and `"0.1h"` is 360000 ms. A bare number
/// is read as milliseconds.
pub fn parse_duration(text: &str) -> Result<DurationMs, DurationError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(DurationError::Empty);
    }
    if text.starts_with('-') {
        return Err(DurationError::Negative(text.to_string()));
    }
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '+'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let unit = unit.trim();
    let scale = match unit {
        "" | "ms" => 1,
        "s" => MS_PER_SECOND,
        "min" => MS_PER_MINUTE,
        "h" => MS_PER_HOUR,
        other => return Err(DurationError::UnknownUnit(other.to_string())),
    };
    scale_decimal(number, scale)
        .map(DurationMs)
        .map_err(|e| match e {
            ScaleError::Malformed => DurationError::Malformed(number.to_string()),
            ScaleError::Overflow => DurationError::Overflow(text.to_string()),
        })
}

enum ScaleError {
    Malformed,
    Overflow,
}

fn scale_decimal(number: &str, scale: u64) -> Result<u64, ScaleError> {
    let number = number.strip_prefix('+').unwrap_or(number);
    let (int_part, frac_part) = match number.split_once('.') {
        Some((i, f)) => (i, f),
        None => (number, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(ScaleError::Malformed);
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(ScaleError::Malformed);
    }
    let int_value: u128 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| ScaleError::Overflow)?
    };
    let mut total = int_value
        .checked_mul(scale as u128)
        .ok_or(ScaleError::Overflow)?;
    if !frac_part.is_empty() {
        // Only the first 20 fractional digits can matter at millisecond scale.
        let frac = &frac_part[..frac_part.len().min(20)];
        let numerator: u128 = frac.parse().map_err(|_| ScaleError::Malformed)?;
        let denominator = 10u128.pow(frac.len() as u32);
        total += numerator * scale as u128 / denominator;
    }
    u64::try_from(total).map_err(|_| ScaleError::Overflow)
}

impl fmt::Display for DurationMs {
    /// Canonical form: the largest unit that divides the value exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0;
        if ms == 0 {
            write!(f, "0ms")
        } else if ms.is_multiple_of(MS_PER_HOUR) {
            write!(f, "{}h", ms / MS_PER_HOUR)
        } else if ms.is_multiple_of(MS_PER_MINUTE) {
            write!(f, "{}min", ms / MS_PER_MINUTE)
        } else if ms.is_multiple_of(MS_PER_SECOND) {
            write!(f, "{}s", ms / MS_PER_SECOND)
        } else {
            write!(f, "{ms}ms")
        }
    }
}

impl FromStr for DurationMs {
    type Err = DurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_duration(s)
    }
}

impl Serialize for DurationMs {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DurationMs {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(ms) => Ok(DurationMs(ms)),
            Raw::Float(ms) if ms >= 0.0 && ms.is_finite() => Ok(DurationMs(ms.trunc() as u64)),
            Raw::Float(ms) => Err(serde::de::Error::custom(format!("invalid duration {ms}"))),
            Raw::Text(text) => parse_duration(&text).map_err(serde::de::Error::custom),
        }
    }
}
