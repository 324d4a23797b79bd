//! Day types, intra-day ordering slots and the holiday calendar.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
    Holiday,
}

impl DayType {
    pub const ALL: [DayType; 3] = [DayType::Weekday, DayType::Weekend, DayType::Holiday];
}

/// Intra-day slot. Intervals are half-open; night wraps midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// 06:00-11:00
    Morning,
    /// 11:00-15:00
    Noon,
    /// 15:00-19:00
    Afternoon,
    /// 19:00-22:00
    Evening,
    /// 22:00-06:00
    Night,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::Morning, Slot::Noon, Slot::Afternoon, Slot::Evening, Slot::Night];

    pub fn of_hour(hour: u32) -> Slot {
        match hour {
            6..=10 => Slot::Morning,
            11..=14 => Slot::Noon,
            15..=18 => Slot::Afternoon,
            19..=21 => Slot::Evening,
            _ => Slot::Night,
        }
    }

    /// Minute-of-day ranges covered by the slot, as half-open `[start, end)` pairs.
    pub fn minute_ranges(self) -> &'static [(u32, u32)] {
        match self {
            Slot::Morning => &[(360, 660)],
            Slot::Noon => &[(660, 900)],
            Slot::Afternoon => &[(900, 1140)],
            Slot::Evening => &[(1140, 1320)],
            Slot::Night => &[(1320, 1440), (0, 360)],
        }
    }
}

/// One of the 15 (day type, slot) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotLabel {
    pub day_type: DayType,
    pub slot: Slot,
}

impl SlotLabel {
    pub const COUNT: usize = 15;

    pub fn new(day_type: DayType, slot: Slot) -> Self {
        SlotLabel { day_type, slot }
    }

    /// Dense index in `0..15`: day type major, slot minor.
    pub fn index(self) -> usize {
        self.day_type as usize * 5 + self.slot as usize
    }

    pub fn from_index(i: usize) -> Option<SlotLabel> {
        (i < Self::COUNT).then(|| SlotLabel::new(DayType::ALL[i / 5], Slot::ALL[i % 5]))
    }

    pub fn all() -> impl Iterator<Item = SlotLabel> {
        (0..Self::COUNT).filter_map(SlotLabel::from_index)
    }
}

impl fmt::Display for SlotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}-{:?}", self.day_type, self.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HolidayCalendar {
    holiday_dates: BTreeSet<NaiveDate>,
    /// Weekday indices counted from Monday = 0.
    weekend_days: BTreeSet<u32>,
}

impl Default for HolidayCalendar {
    fn default() -> Self {
        HolidayCalendar { holiday_dates: BTreeSet::new(), weekend_days: [5, 6].into() }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CalendarFile {
    Dates(Vec<NaiveDate>),
    Full {
        #[serde(default, alias = "holiday_dates")]
        holidays: Vec<NaiveDate>,
        weekend_days: Option<Vec<u32>>,
    },
}

impl HolidayCalendar {
    pub fn new(holidays: impl IntoIterator<Item = NaiveDate>, weekend_days: impl IntoIterator<Item = u32>) -> Result<Self> {
        let weekend_days: BTreeSet<u32> = weekend_days.into_iter().collect();
        if weekend_days.is_empty() || weekend_days.iter().any(|&d| d > 6) {
            return Err(Error::Config(format!("weekend_days must be a non-empty subset of 0..=6, got {weekend_days:?}")));
        }
        Ok(HolidayCalendar { holiday_dates: holidays.into_iter().collect(), weekend_days })
    }

    pub fn with_holidays(holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        HolidayCalendar { holiday_dates: holidays.into_iter().collect(), ..Default::default() }
    }

    /// Parses either a bare JSON list of `YYYY-MM-DD` strings or an object
    /// `{"holidays": [...], "weekend_days": [5, 6]}`.
    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        let parsed: CalendarFile = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let cal = match parsed {
            CalendarFile::Dates(d) => HolidayCalendar::with_holidays(d),
            CalendarFile::Full { holidays, weekend_days } => {
                HolidayCalendar::new(holidays, weekend_days.unwrap_or_else(|| vec![5, 6])).map_err(|e| e.to_string())?
            }
        };
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn holidays(&self) -> impl Iterator<Item = &NaiveDate> {
        self.holiday_dates.iter()
    }

    pub fn weekend_days(&self) -> impl Iterator<Item = &u32> {
        self.weekend_days.iter()
    }

    /// Holiday takes precedence over weekend.
    pub fn day_type(&self, date: NaiveDate) -> DayType {
        if self.holiday_dates.contains(&date) {
            DayType::Holiday
        } else if self.weekend_days.contains(&date.weekday().num_days_from_monday()) {
            DayType::Weekend
        } else {
            DayType::Weekday
        }
    }
}

/// Slot label of a local civil timestamp. Night is attributed to the
/// timestamp's own civil date.
pub fn time_slot(ts: NaiveDateTime, cal: &HolidayCalendar) -> SlotLabel {
    SlotLabel::new(cal.day_type(ts.date()), Slot::of_hour(ts.hour()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveTime};

    fn at(y: i32, m: u32, d: u32, h: u32, min: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_time(NaiveTime::from_hms_opt(h, min, 0).unwrap())
    }

    #[test]
    fn wednesday_noon() {
        // 2016-03-09 is a Wednesday
        let s = time_slot(at(2016, 3, 9, 12, 30), &HolidayCalendar::default());
        assert_eq!(s, SlotLabel::new(DayType::Weekday, Slot::Noon));
    }

    #[test]
    fn saturday_night() {
        let s = time_slot(at(2016, 3, 12, 2, 0), &HolidayCalendar::default());
        assert_eq!(s, SlotLabel::new(DayType::Weekend, Slot::Night));
    }

    #[test]
    fn holiday_overrides_weekday_and_weekend() {
        let monday = NaiveDate::from_ymd_opt(2016, 4, 4).unwrap();
        let sunday = NaiveDate::from_ymd_opt(2016, 4, 3).unwrap();
        let cal = HolidayCalendar::with_holidays([monday, sunday]);
        assert_eq!(time_slot(at(2016, 4, 4, 12, 0), &cal), SlotLabel::new(DayType::Holiday, Slot::Noon));
        assert_eq!(cal.day_type(sunday), DayType::Holiday);
    }

    #[test]
    fn boundaries_are_half_open() {
        let cal = HolidayCalendar::default();
        let slot = |h, m| time_slot(at(2016, 3, 9, h, m), &cal).slot;
        assert_eq!(slot(11, 0), Slot::Noon);
        assert_eq!(slot(10, 59), Slot::Morning);
        assert_eq!(slot(6, 0), Slot::Morning);
        assert_eq!(slot(5, 59), Slot::Night);
        assert_eq!(slot(15, 0), Slot::Afternoon);
        assert_eq!(slot(19, 0), Slot::Evening);
        assert_eq!(slot(22, 0), Slot::Night);
    }

    #[test]
    fn minute_ranges_agree_with_of_hour() {
        for slot in Slot::ALL {
            for &(a, b) in slot.minute_ranges() {
                for m in a..b {
                    assert_eq!(Slot::of_hour(m / 60), slot);
                }
            }
        }
        let total: u32 = Slot::ALL.iter().flat_map(|s| s.minute_ranges()).map(|(a, b)| b - a).sum();
        assert_eq!(total, 1440);
    }

    #[test]
    fn two_year_scan_hits_every_label() {
        let cal = HolidayCalendar::with_holidays([NaiveDate::from_ymd_opt(2016, 10, 3).unwrap()]);
        let mut seen = [0usize; SlotLabel::COUNT];
        let mut t = at(2016, 1, 1, 0, 0);
        let end = at(2018, 1, 1, 0, 0);
        while t < end {
            seen[time_slot(t, &cal).index()] += 1;
            t += Duration::minutes(1);
        }
        assert!(seen.iter().all(|&c| c > 0));
        assert_eq!(seen.iter().sum::<usize>() as i64, (end - at(2016, 1, 1, 0, 0)).num_minutes());
    }

    #[test]
    fn index_round_trip() {
        for (i, l) in SlotLabel::all().enumerate() {
            assert_eq!(l.index(), i);
        }
    }

    #[test]
    fn calendar_json_forms() {
        let a = HolidayCalendar::from_json_str(r#"["2016-01-01","2016-10-01"]"#).unwrap();
        assert_eq!(a.holidays().count(), 2);
        let b = HolidayCalendar::from_json_str(r#"{"holidays":["2016-01-01"],"weekend_days":[4,5]}"#).unwrap();
        assert_eq!(b.weekend_days().copied().collect::<Vec<_>>(), vec![4, 5]);
        assert!(HolidayCalendar::from_json_str(r#"{"holidays":[],"weekend_days":[]}"#).is_err());
        assert!(HolidayCalendar::from_json_str(r#"["2016-13-01"]"#).is_err());
    }
}

/// Civil year-month, formatted `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth { year: date.year(), month: date.month() }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid year-month")
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth { year: self.year + 1, month: 1 }
        } else {
            YearMonth { year: self.year, month: self.month + 1 }
        }
    }

    /// Months from `self` to `other` (positive when `other` is later).
    pub fn months_until(self, other: YearMonth) -> i64 {
        (other.year as i64 - self.year as i64) * 12 + other.month as i64 - self.month as i64
    }

    pub fn plus_months(self, n: i64) -> Self {
        let idx = self.year as i64 * 12 + self.month as i64 - 1 + n;
        YearMonth { year: idx.div_euclid(12) as i32, month: idx.rem_euclid(12) as u32 + 1 }
    }

    pub fn days_in_month(self) -> u32 {
        (self.succ().first_day() - self.first_day()).num_days() as u32
    }

    /// Inclusive range of months.
    pub fn range_inclusive(from: YearMonth, to: YearMonth) -> impl Iterator<Item = YearMonth> {
        let n = from.months_until(to);
        (0..=n.max(-1)).map(move |i| from.plus_months(i))
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl std::str::FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (y, m) = s.trim().split_once('-').ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
        let year = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        YearMonth::new(year, month).ok_or_else(|| format!("month out of range in {s:?}"))
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
