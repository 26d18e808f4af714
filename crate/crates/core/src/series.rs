//! Calendars of 15-minute periods and the time series defined over them.

use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{mean, Scalar};

/// Minutes in one scheduling period.
pub const PERIOD_MINUTES: usize = 15;
/// Periods in a day at the standard resolution.
pub const PERIODS_PER_DAY: usize = 96;
/// First working period of a day (9:00).
pub const WORK_START: usize = 36;
/// One past the last working period of a day (17:00).
pub const WORK_END: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    /// Monday = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Weekday {
        Self::ALL[i % 7]
    }

    pub fn is_weekday(self) -> bool {
        self.index() < 5
    }

    fn from_chrono(w: chrono::Weekday) -> Weekday {
        Self::from_index(w.num_days_from_monday() as usize)
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// How a day is cut into periods and which of them are working hours.
///
/// The standard layout is 96 periods with working hours `[36, 68)`. Shorter
/// layouts are useful for small exhaustive experiments; energy accounting
/// always treats a period as a quarter hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayLayout {
    pub periods_per_day: usize,
    pub work_start: usize,
    pub work_end: usize,
}

impl Default for DayLayout {
    fn default() -> Self {
        Self { periods_per_day: PERIODS_PER_DAY, work_start: WORK_START, work_end: WORK_END }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    start: NaiveDate,
    days: usize,
    layout: DayLayout,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalendarError {
    #[error("a calendar needs at least one day")]
    NoDays,
    #[error("invalid year/month {0}-{1}")]
    BadMonth(i32, u32),
    #[error("invalid day layout {0:?}")]
    BadLayout(DayLayout),
}

impl Calendar {
    pub fn new(start: NaiveDate, days: usize) -> Result<Self, CalendarError> {
        if days == 0 {
            return Err(CalendarError::NoDays);
        }
        Ok(Self { start, days, layout: DayLayout::default() })
    }

    /// The whole calendar month `year-month`.
    pub fn month(year: i32, month: u32) -> Result<Self, CalendarError> {
        let start = NaiveDate::from_ymd_opt(year, month, 1).ok_or(CalendarError::BadMonth(year, month))?;
        let next = if month == 12 {
            NaiveDate::from_ymd_opt(year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(year, month + 1, 1)
        }
        .ok_or(CalendarError::BadMonth(year, month))?;
        Self::new(start, (next - start).num_days() as usize)
    }

    /// A calendar of `days` days whose first day falls on `first`.
    /// The concrete dates are taken from a fixed reference week.
    pub fn starting_on(first: Weekday, days: usize) -> Result<Self, CalendarError> {
        // 2024-01-01 was a Monday.
        let monday = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid reference date");
        Self::new(monday + Duration::days(first.index() as i64), days)
    }

    pub fn with_layout(mut self, layout: DayLayout) -> Result<Self, CalendarError> {
        if layout.periods_per_day == 0 || layout.work_start >= layout.work_end || layout.work_end > layout.periods_per_day {
            return Err(CalendarError::BadLayout(layout));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn days_in_month(&self) -> usize {
        self.days
    }

    pub fn layout(&self) -> DayLayout {
        self.layout
    }

    pub fn periods_per_day(&self) -> usize {
        self.layout.periods_per_day
    }

    pub fn horizon(&self) -> usize {
        self.days * self.layout.periods_per_day
    }

    pub fn first_weekday(&self) -> Weekday {
        Weekday::from_chrono(self.start.weekday())
    }

    pub fn weekday_of_day(&self, day: usize) -> Weekday {
        Weekday::from_index(self.first_weekday().index() + day)
    }

    pub fn weekday_of_period(&self, t: usize) -> Weekday {
        self.weekday_of_day(t / self.layout.periods_per_day)
    }

    pub fn is_working_period(&self, t: usize) -> bool {
        let p = t % self.layout.periods_per_day;
        t < self.horizon()
            && self.weekday_of_period(t).is_weekday()
            && p >= self.layout.work_start
            && p < self.layout.work_end
    }

    /// Days of the month falling on `weekday`.
    pub fn days_on(&self, weekday: Weekday) -> impl Iterator<Item = usize> + '_ {
        (0..self.days).filter(move |&d| self.weekday_of_day(d) == weekday)
    }

    /// Weekdays (Mon..Fri) that occur at least once in the month, in the
    /// order they first appear.
    pub fn active_weekdays(&self) -> Vec<Weekday> {
        (0..self.days.min(7)).map(|d| self.weekday_of_day(d)).filter(|w| w.is_weekday()).collect()
    }

    /// Position of `weekday` within the first week of the month (0..7).
    pub fn week_offset(&self, weekday: Weekday) -> usize {
        (weekday.index() + 7 - self.first_weekday().index()) % 7
    }

    /// Maps a timestamp on the 15-minute grid to its period index.
    pub fn period_of(&self, ts: NaiveDateTime) -> Option<usize> {
        if self.layout.periods_per_day != PERIODS_PER_DAY {
            return None;
        }
        let day = (ts.date() - self.start).num_days();
        if day < 0 || day as usize >= self.days {
            return None;
        }
        let minute = (ts.hour() * 60 + ts.minute()) as usize;
        if !minute.is_multiple_of(PERIOD_MINUTES) || ts.second() != 0 || ts.nanosecond() != 0 {
            return None;
        }
        Some(day as usize * PERIODS_PER_DAY + minute / PERIOD_MINUTES)
    }

    pub fn timestamp_of(&self, t: usize) -> NaiveDateTime {
        let day = t / self.layout.periods_per_day;
        let minutes = (t % self.layout.periods_per_day) * (24 * 60 / self.layout.periods_per_day);
        (self.start + Duration::days(day as i64)).and_hms_opt(0, 0, 0).expect("midnight exists")
            + Duration::minutes(minutes as i64)
    }
}

/// All working periods of the month in increasing order.
pub fn working_periods(calendar: &Calendar) -> Vec<usize> {
    (0..calendar.horizon()).filter(|&t| calendar.is_working_period(t)).collect()
}

/// A series over the calendar horizon with possibly missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries<T> {
    pub values: Vec<Option<T>>,
}

impl<T: Scalar> RawSeries<T> {
    pub fn missing(horizon: usize) -> Self {
        Self { values: vec![None; horizon] }
    }

    pub fn from_values(values: impl IntoIterator<Item = T>) -> Self {
        Self { values: values.into_iter().map(Some).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    /// Dense copy with missing entries read as zero.
    pub fn zero_filled(&self) -> Vec<T> {
        self.values.iter().map(|v| v.unwrap_or_else(T::zero)).collect()
    }
}

/// Net base load in kW per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetLoadSeries<T>(pub Vec<T>);

/// Wholesale price in $/MWh per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceSeries<T>(pub Vec<T>);

macro_rules! dense_series {
    ($name:ident) => {
        impl<T: Scalar> $name<T> {
            /// Checks length and finiteness against the calendar.
            pub fn new(values: Vec<T>, calendar: &Calendar) -> Result<Self, SeriesError> {
                if values.len() != calendar.horizon() {
                    return Err(SeriesError::HorizonMismatch { expected: calendar.horizon(), found: values.len() });
                }
                if let Some(t) = values.iter().position(|v| !v.is_finite()) {
                    return Err(SeriesError::NonFinite { period: t });
                }
                Ok(Self(values))
            }

            pub fn values(&self) -> &[T] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }
    };
}

dense_series!(NetLoadSeries);
dense_series!(PriceSeries);

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series length {found} does not match horizon {expected}")]
    HorizonMismatch { expected: usize, found: usize },
    #[error("non-finite value at period {period}")]
    NonFinite { period: usize },
    #[error("row {row}: timestamp {ts} lies outside the calendar")]
    OutsideHorizon { row: usize, ts: String },
    #[error("row {row}: timestamp {ts} is not on the {minutes}-minute grid")]
    OffGrid { row: usize, ts: String, minutes: usize },
    #[error("row {row}: duplicate timestamp {ts}")]
    Duplicate { row: usize, ts: String },
    #[error("row {row}: timestamp {ts} is earlier than the previous row")]
    NonMonotone { row: usize, ts: String },
    #[error("row {row}: cannot parse timestamp `{ts}`")]
    BadTimestamp { row: usize, ts: String },
    #[error("row {row}: cannot parse value `{value}`")]
    BadValue { row: usize, value: String },
    #[error("row {row}: missing price")]
    MissingPrice { row: usize },
    #[error("expected header `timestamp,<name>`, found `{0}`")]
    BadHeader(String),
    #[error("series has no present values")]
    AllMissing,
    #[error("calendar layout does not use 15-minute periods")]
    UnsupportedLayout,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` or the same with a space separator.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    let s = s.trim();
    FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// One parsed CSV row: timestamp text, timestamp, raw value text.
#[derive(Debug, Clone)]
pub struct CsvRow {
    pub ts_text: String,
    pub ts: NaiveDateTime,
    pub value_text: String,
}

/// Reads `timestamp,<name>` rows without aligning them to a calendar.
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<CsvRow>, SeriesError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" {
        return Err(SeriesError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let ts_text = rec.get(0).unwrap_or("").to_string();
        let ts = parse_timestamp(&ts_text).ok_or_else(|| SeriesError::BadTimestamp { row, ts: ts_text.clone() })?;
        rows.push(CsvRow { ts_text, ts, value_text: rec.get(1).unwrap_or("").to_string() });
    }
    Ok(rows)
}

fn parse_value<T: Scalar>(row: usize, text: &str) -> Result<Option<T>, SeriesError> {
    if text.is_empty() {
        return Ok(None);
    }
    match text.parse::<T>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(SeriesError::BadValue { row, value: text.to_string() }),
    }
}

/// Aligns a `timestamp,value` CSV to the calendar. Periods with no row and
/// rows with an empty value are missing.
pub fn read_series_csv<T: Scalar, R: Read>(reader: R, calendar: &Calendar) -> Result<RawSeries<T>, SeriesError> {
    if calendar.periods_per_day() != PERIODS_PER_DAY {
        return Err(SeriesError::UnsupportedLayout);
    }
    let mut series = RawSeries::missing(calendar.horizon());
    let mut last: Option<usize> = None;
    for (i, r) in read_rows(reader)?.into_iter().enumerate() {
        let row = i + 2;
        let in_range = {
            let day = (r.ts.date() - calendar.start()).num_days();
            day >= 0 && (day as usize) < calendar.days_in_month()
        };
        if !in_range {
            return Err(SeriesError::OutsideHorizon { row, ts: r.ts_text });
        }
        let t = calendar
            .period_of(r.ts)
            .ok_or_else(|| SeriesError::OffGrid { row, ts: r.ts_text.clone(), minutes: PERIOD_MINUTES })?;
        match last {
            Some(prev) if prev == t => return Err(SeriesError::Duplicate { row, ts: r.ts_text }),
            Some(prev) if prev > t => return Err(SeriesError::NonMonotone { row, ts: r.ts_text }),
            _ => {}
        }
        last = Some(t);
        series.values[t] = parse_value(row, &r.value_text)?;
    }
    Ok(series)
}

pub fn load_series_csv<T: Scalar>(path: impl AsRef<Path>, calendar: &Calendar) -> Result<RawSeries<T>, SeriesError> {
    read_series_csv(std::fs::File::open(path)?, calendar)
}

/// Reads a complete half-hourly `timestamp,price` CSV covering the calendar.
pub fn read_price_csv<T: Scalar, R: Read>(reader: R, calendar: &Calendar) -> Result<Vec<T>, SeriesError> {
    if calendar.periods_per_day() != PERIODS_PER_DAY {
        return Err(SeriesError::UnsupportedLayout);
    }
    let expected = calendar.horizon() / 2;
    let rows = read_rows(reader)?;
    let mut out = Vec::with_capacity(expected);
    for (i, r) in rows.into_iter().enumerate() {
        let row = i + 2;
        let t = calendar
            .period_of(r.ts)
            .ok_or_else(|| SeriesError::OutsideHorizon { row, ts: r.ts_text.clone() })?;
        if t % 2 != 0 {
            return Err(SeriesError::OffGrid { row, ts: r.ts_text, minutes: 2 * PERIOD_MINUTES });
        }
        match (t / 2).cmp(&out.len()) {
            std::cmp::Ordering::Less if t / 2 + 1 == out.len() => {
                return Err(SeriesError::Duplicate { row, ts: r.ts_text })
            }
            std::cmp::Ordering::Less => return Err(SeriesError::NonMonotone { row, ts: r.ts_text }),
            std::cmp::Ordering::Greater => return Err(SeriesError::MissingPrice { row }),
            std::cmp::Ordering::Equal => {}
        }
        out.push(parse_value(row, &r.value_text)?.ok_or(SeriesError::MissingPrice { row })?);
    }
    if out.len() != expected {
        return Err(SeriesError::HorizonMismatch { expected, found: out.len() });
    }
    Ok(out)
}

pub fn load_price_csv<T: Scalar>(path: impl AsRef<Path>, calendar: &Calendar) -> Result<Vec<T>, SeriesError> {
    read_price_csv(std::fs::File::open(path)?, calendar)
}

/// Building demand minus solar generation, missing entries counted as zero.
pub fn net_load<T: Scalar>(
    buildings: &[RawSeries<T>],
    solars: &[RawSeries<T>],
    calendar: &Calendar,
) -> Result<NetLoadSeries<T>, SeriesError> {
    let h = calendar.horizon();
    if let Some(s) = buildings.iter().chain(solars).find(|s| s.len() != h) {
        return Err(SeriesError::HorizonMismatch { expected: h, found: s.len() });
    }
    let mut out = vec![T::zero(); h];
    for s in buildings {
        for (o, v) in out.iter_mut().zip(&s.values) {
            *o = *o + v.unwrap_or_else(T::zero);
        }
    }
    for s in solars {
        for (o, v) in out.iter_mut().zip(&s.values) {
            *o = *o - v.unwrap_or_else(T::zero);
        }
    }
    NetLoadSeries::new(out, calendar)
}

/// Repeats each half-hourly price over its two 15-minute periods.
pub fn expand_prices<T: Scalar>(halfhourly: &[T], calendar: &Calendar) -> Result<PriceSeries<T>, SeriesError> {
    let h = calendar.horizon();
    if !h.is_multiple_of(2) || halfhourly.len() * 2 != h {
        return Err(SeriesError::HorizonMismatch { expected: h / 2, found: halfhourly.len() });
    }
    PriceSeries::new(halfhourly.iter().flat_map(|&p| [p, p]).collect(), calendar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats<T> {
    pub count: usize,
    pub mean: T,
    /// Sample standard deviation (n - 1 denominator; 0 for a single value).
    pub std: T,
    pub iqr: T,
    pub min: T,
    pub max: T,
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Summary statistics over the present values only.
pub fn descriptive_stats<T: Scalar>(series: &RawSeries<T>) -> Result<DescriptiveStats<T>, SeriesError> {
    let mut xs: Vec<T> = series.present().collect();
    if xs.is_empty() {
        return Err(SeriesError::AllMissing);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = xs.len();
    let m = mean(&xs).expect("non-empty");
    let std = if n > 1 {
        let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
        (ss / T::from_usize_lossy(n - 1)).sqrt()
    } else {
        T::zero()
    };
    Ok(DescriptiveStats {
        count: n,
        mean: m,
        std,
        iqr: quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25),
        min: xs[0],
        max: xs[n - 1],
    })
}
