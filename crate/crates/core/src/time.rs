//! Time-of-day arithmetic, analysis windows and bin grids.
//!
//! Everything here is whole-second resolution. A [`BinGrid`] splits a
//! [`TimeWindow`] into `bin_count` half-open bins `[lo, hi)` of identical
//! integer width, so every in-window timestamp lands in exactly one bin.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: u32 = 86_400;

/// Seconds since midnight, always in `[0, 86400)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub fn from_seconds(secs: u32) -> Result<Self> {
        if secs < SECONDS_PER_DAY {
            Ok(TimeOfDay(secs))
        } else {
            Err(Error::InvalidTime(secs.to_string()))
        }
    }

    pub fn from_hms(h: u32, m: u32, s: u32) -> Result<Self> {
        if h > 23 || m > 59 || s > 59 {
            return Err(Error::InvalidTime(format!("{h:02}:{m:02}:{s:02}")));
        }
        Ok(TimeOfDay(h * 3600 + m * 60 + s))
    }

    pub fn seconds(self) -> u32 {
        self.0
    }

    pub fn hms(self) -> (u32, u32, u32) {
        (self.0 / 3600, self.0 / 60 % 60, self.0 % 60)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, m, s) = self.hms();
        write!(f, "{h:02}:{m:02}:{s:02}")
    }
}

impl FromStr for TimeOfDay {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidTime(text.to_string());
        let mut parts = text.split(':');
        let mut field = || -> Result<u32> {
            let p = parts.next().ok_or_else(bad)?;
            if p.len() != 2 || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            p.parse().map_err(|_| bad())
        };
        let (h, m, s) = (field()?, field()?, field()?);
        if parts.next().is_some() {
            return Err(bad());
        }
        TimeOfDay::from_hms(h, m, s).map_err(|_| bad())
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Analysis window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct TimeWindow {
    start: TimeOfDay,
    end: TimeOfDay,
}

#[derive(Deserialize)]
struct RawWindow {
    start: TimeOfDay,
    end: TimeOfDay,
}

impl TryFrom<RawWindow> for TimeWindow {
    type Error = Error;
    fn try_from(raw: RawWindow) -> Result<Self> {
        TimeWindow::new(raw.start, raw.end)
    }
}

impl TimeWindow {
    pub fn new(start: TimeOfDay, end: TimeOfDay) -> Result<Self> {
        if start >= end {
            return Err(Error::EmptyWindow {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(TimeWindow { start, end })
    }

    /// The 06:00:00–09:00:00 morning commuter window.
    pub fn morning_commute() -> Self {
        TimeWindow {
            start: TimeOfDay(6 * 3600),
            end: TimeOfDay(9 * 3600),
        }
    }

    pub fn start(&self) -> TimeOfDay {
        self.start
    }

    pub fn end(&self) -> TimeOfDay {
        self.end
    }

    pub fn length_secs(&self) -> u32 {
        self.end.0 - self.start.0
    }

    pub fn contains(&self, t: TimeOfDay) -> bool {
        self.start <= t && t < self.end
    }
}

/// A window split into `bin_count` equal whole-second bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct BinGrid {
    window: TimeWindow,
    bin_count: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    window: TimeWindow,
    bin_count: usize,
}

impl TryFrom<RawGrid> for BinGrid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        BinGrid::new(raw.window, raw.bin_count)
    }
}

impl BinGrid {
    pub fn new(window: TimeWindow, bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::ZeroBins);
        }
        let len = window.length_secs();
        if !(len as usize).is_multiple_of(bin_count) {
            return Err(Error::InexactBins {
                window_secs: len,
                bins: bin_count,
            });
        }
        Ok(BinGrid { window, bin_count })
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn width_secs(&self) -> u32 {
        self.window.length_secs() / self.bin_count as u32
    }

    /// Half-open bounds `[lo, hi)` of bin `i`, in seconds since midnight.
    pub fn bounds(&self, i: usize) -> (u32, u32) {
        let lo = self.window.start.0 + i as u32 * self.width_secs();
        (lo, lo + self.width_secs())
    }

    /// Bin holding `t`, or `None` when `t` falls outside the window.
    pub fn bin_index(&self, t: TimeOfDay) -> Option<usize> {
        if !self.window.contains(t) {
            return None;
        }
        Some(((t.0 - self.window.start.0) / self.width_secs()) as usize)
    }

    /// Interval label in the `6.00-6.15am` style.
    pub fn label(&self, i: usize) -> String {
        let (lo, hi) = self.bounds(i);
        let (lo_h, lo_m, lo_ampm) = clock12(lo);
        let (hi_h, hi_m, hi_ampm) = clock12(hi);
        if lo_ampm == hi_ampm {
            format!("{lo_h}.{lo_m:02}-{hi_h}.{hi_m:02}{hi_ampm}")
        } else {
            format!("{lo_h}.{lo_m:02}{lo_ampm}-{hi_h}.{hi_m:02}{hi_ampm}")
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.bin_count).map(|i| self.label(i)).collect()
    }
}

// `secs` may equal 86400 for the upper bound of a bin ending at midnight.
fn clock12(secs: u32) -> (u32, u32, &'static str) {
    let secs = secs % SECONDS_PER_DAY;
    let h = secs / 3600;
    let m = secs / 60 % 60;
    let ampm = if h < 12 { "am" } else { "pm" };
    let h12 = match h % 12 {
        0 => 12,
        x => x,
    };
    (h12, m, ampm)
}

/// One vehicle's first departure of the day within one sampling session.
///
/// Vehicles are assumed independent of one another, and each session's
/// per-bin counts are treated as Poisson samples of a common rate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepartureRecord {
    pub vehicle_id: String,
    pub session_id: String,
    pub departure: TimeOfDay,
}

impl DepartureRecord {
    pub fn new(vehicle_id: impl Into<String>, session_id: impl Into<String>, departure: TimeOfDay) -> Self {
        DepartureRecord {
            vehicle_id: vehicle_id.into(),
            session_id: session_id.into(),
            departure,
        }
    }
}
