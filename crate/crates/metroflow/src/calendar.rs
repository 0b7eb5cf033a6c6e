//! Daily time windows and date classification.
//!
//! A [`DayWindow`] is a clock-time interval inside one service day, stored as
//! seconds after midnight so that `24:00` (end of day) is representable.
//! A [`Calendar`] assigns every date one of three day classes: ordinary
//! weekday (Monday through Thursday), Friday, or rest day (weekend or
//! holiday).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SECS_PER_DAY: u32 = 86_400;

/// Clock-time interval `[start, end)` within one day, `end <= 24:00`.
///
/// Two interpretations are exposed and used by different consumers:
/// binning treats the window half-open (`slot_of`), while swipe validation
/// treats both bounds inclusive (`contains_swipe`), so a tap at exactly the
/// closing time is still in service.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayWindow {
    start_sec: u32,
    end_sec: u32,
}

impl DayWindow {
    pub fn new(start_sec: u32, end_sec: u32) -> Result<Self> {
        if end_sec > SECS_PER_DAY {
            return Err(Error::Parameter(format!(
                "day window end {end_sec}s is past 24:00"
            )));
        }
        if start_sec >= end_sec {
            return Err(Error::Parameter(format!(
                "day window start {start_sec}s is not before end {end_sec}s"
            )));
        }
        Ok(DayWindow { start_sec, end_sec })
    }

    /// Parses `"HH:MM"` or `"HH:MM:SS"`; `"24:00"` is accepted as end of day.
    pub fn parse_time(s: &str) -> Result<u32> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(Error::Parameter(format!("bad clock time `{s}`")));
        }
        let num = |p: &str| -> Result<u32> {
            p.parse::<u32>()
                .map_err(|_| Error::Parameter(format!("bad clock time `{s}`")))
        };
        let (h, m) = (num(parts[0])?, num(parts[1])?);
        let sec = if parts.len() == 3 { num(parts[2])? } else { 0 };
        if h > 24 || m > 59 || sec > 59 || (h == 24 && (m > 0 || sec > 0)) {
            return Err(Error::Parameter(format!("bad clock time `{s}`")));
        }
        Ok(h * 3600 + m * 60 + sec)
    }

    pub fn start_sec(&self) -> u32 {
        self.start_sec
    }

    pub fn end_sec(&self) -> u32 {
        self.end_sec
    }

    pub fn len_secs(&self) -> u32 {
        self.end_sec - self.start_sec
    }

    /// Number of bins of `interval_secs` the window divides into; errors
    /// unless the interval divides the window length exactly.
    pub fn bins(&self, interval_secs: u32) -> Result<usize> {
        if interval_secs == 0 {
            return Err(Error::Parameter("interval must be positive".into()));
        }
        let len = self.len_secs();
        if len % interval_secs != 0 {
            return Err(Error::Parameter(format!(
                "interval {interval_secs}s does not divide the {}s day window exactly",
                len
            )));
        }
        Ok((len / interval_secs) as usize)
    }

    /// Bin index of a time of day under the half-open reading, or `None`
    /// when the time falls outside `[start, end)`.
    pub fn slot_of(&self, t: NaiveTime, interval_secs: u32) -> Option<usize> {
        let sec = t.num_seconds_from_midnight();
        if sec < self.start_sec || sec >= self.end_sec {
            return None;
        }
        Some(((sec - self.start_sec) / interval_secs) as usize)
    }

    /// Inclusive-bounds check used for operating-hours validation.
    pub fn contains_swipe(&self, t: NaiveTime) -> bool {
        let sec = t.num_seconds_from_midnight();
        sec >= self.start_sec && sec <= self.end_sec
    }

    /// Timestamp of the start of bin `slot` on `date`.
    pub fn slot_start(&self, date: NaiveDate, slot: usize, interval_secs: u32) -> NaiveDateTime {
        let sec = self.start_sec + slot as u32 * interval_secs;
        date.and_time(NaiveTime::MIN) + chrono::Duration::seconds(sec as i64)
    }
}

impl fmt::Display for DayWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hhmm = |s: u32| format!("{:02}:{:02}", s / 3600, (s % 3600) / 60);
        write!(f, "{}-{}", hhmm(self.start_sec), hhmm(self.end_sec))
    }
}

impl FromStr for DayWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::Parameter(format!("bad day window `{s}`, expected HH:MM-HH:MM")))?;
        DayWindow::new(Self::parse_time(a.trim())?, Self::parse_time(b.trim())?)
    }
}

impl Serialize for DayWindow {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DayWindow {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Day classification used to build forecasting scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayClass {
    WeekdayExclFri,
    Friday,
    RestDay,
}

/// Forecasting scenario: one of the three day classes, or the unsplit whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    WeekdayExclFri,
    Friday,
    RestDay,
    All,
}

impl Scenario {
    pub fn of_class(class: DayClass) -> Scenario {
        match class {
            DayClass::WeekdayExclFri => Scenario::WeekdayExclFri,
            DayClass::Friday => Scenario::Friday,
            DayClass::RestDay => Scenario::RestDay,
        }
    }

    /// The three class-bound scenarios, in report order.
    pub const SPLIT: [Scenario; 3] = [Scenario::WeekdayExclFri, Scenario::Friday, Scenario::RestDay];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scenario::WeekdayExclFri => "weekday_excl_fri",
            Scenario::Friday => "friday",
            Scenario::RestDay => "rest_day",
            Scenario::All => "all",
        };
        f.write_str(name)
    }
}

/// Date-to-class assignment.
///
/// The rule form classifies every date: holidays are rest days, then
/// Saturday/Sunday are rest days, then Friday, then ordinary weekday.
/// The explicit form classifies only the listed dates and reports an error
/// for anything else.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calendar {
    Rule { holidays: BTreeSet<NaiveDate> },
    Explicit(BTreeMap<NaiveDate, DayClass>),
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar::Rule {
            holidays: BTreeSet::new(),
        }
    }
}

impl Calendar {
    pub fn with_holidays<I: IntoIterator<Item = NaiveDate>>(holidays: I) -> Self {
        Calendar::Rule {
            holidays: holidays.into_iter().collect(),
        }
    }

    pub fn classify(&self, date: NaiveDate) -> Result<DayClass> {
        match self {
            Calendar::Rule { holidays } => {
                if holidays.contains(&date) {
                    return Ok(DayClass::RestDay);
                }
                Ok(match date.weekday() {
                    Weekday::Sat | Weekday::Sun => DayClass::RestDay,
                    Weekday::Fri => DayClass::Friday,
                    _ => DayClass::WeekdayExclFri,
                })
            }
            Calendar::Explicit(map) => map
                .get(&date)
                .copied()
                .ok_or_else(|| Error::Input(format!("calendar does not classify date {date}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn window_parse_and_display() {
        let w: DayWindow = "05:30-22:30".parse().unwrap();
        assert_eq!(w.start_sec(), 5 * 3600 + 30 * 60);
        assert_eq!(w.end_sec(), 22 * 3600 + 30 * 60);
        assert_eq!(w.to_string(), "05:30-22:30");

        let full: DayWindow = "05:00-24:00".parse().unwrap();
        assert_eq!(full.end_sec(), SECS_PER_DAY);
        assert_eq!(full.bins(300).unwrap(), 228);
    }

    #[test]
    fn window_rejects_bad_bounds() {
        assert!("22:00-05:00".parse::<DayWindow>().is_err());
        assert!("05:00-25:00".parse::<DayWindow>().is_err());
        assert!("05:xx-06:00".parse::<DayWindow>().is_err());
        assert!(DayWindow::new(100, 100).is_err());
    }

    #[test]
    fn window_interval_must_divide() {
        let w: DayWindow = "05:00-24:00".parse().unwrap();
        assert!(w.bins(7 * 60).is_err());
        assert_eq!(w.bins(900).unwrap(), 76);
    }

    #[test]
    fn slot_is_half_open_swipe_is_inclusive() {
        let w: DayWindow = "05:00-22:00".parse().unwrap();
        let t = |h: u32, m: u32, s: u32| NaiveTime::from_hms_opt(h, m, s).unwrap();
        assert_eq!(w.slot_of(t(5, 0, 0), 300), Some(0));
        assert_eq!(w.slot_of(t(5, 4, 59), 300), Some(0));
        assert_eq!(w.slot_of(t(5, 5, 0), 300), Some(1));
        assert_eq!(w.slot_of(t(22, 0, 0), 300), None);
        assert_eq!(w.slot_of(t(4, 59, 59), 300), None);
        assert!(w.contains_swipe(t(22, 0, 0)));
        assert!(!w.contains_swipe(t(22, 0, 1)));
    }

    #[test]
    fn rule_calendar_classifies_all_days() {
        let cal = Calendar::with_holidays([d("2023-05-01")]);
        assert_eq!(cal.classify(d("2023-05-01")).unwrap(), DayClass::RestDay); // holiday Monday
        assert_eq!(cal.classify(d("2023-05-08")).unwrap(), DayClass::WeekdayExclFri);
        assert_eq!(cal.classify(d("2023-05-12")).unwrap(), DayClass::Friday);
        assert_eq!(cal.classify(d("2023-05-13")).unwrap(), DayClass::RestDay);
        assert_eq!(cal.classify(d("2023-05-14")).unwrap(), DayClass::RestDay);
    }

    #[test]
    fn explicit_calendar_errors_on_missing_date() {
        let cal = Calendar::Explicit(BTreeMap::from([(d("2023-05-01"), DayClass::Friday)]));
        assert_eq!(cal.classify(d("2023-05-01")).unwrap(), DayClass::Friday);
        let err = cal.classify(d("2023-05-02")).unwrap_err();
        assert!(err.to_string().contains("2023-05-02"));
    }

    #[test]
    fn serde_round_trip() {
        let w: DayWindow = "06:15-23:45".parse().unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "\"06:15-23:45\"");
        let back: DayWindow = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }
}
