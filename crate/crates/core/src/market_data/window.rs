use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AlignedPanel;
use crate::error::{Error, Result};

/// Calendar unit of a window side, converted to trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowUnit {
    Day,
    Week,
    Month,
}

impl WindowUnit {
    /// Trading days per unit: day = 1, week = 5, month = 25.
    pub fn trading_days(self) -> usize {
        match self {
            WindowUnit::Day => 1,
            WindowUnit::Week => 5,
            WindowUnit::Month => 25,
        }
    }

    fn name(self, plural: bool) -> &'static str {
        match (self, plural) {
            (WindowUnit::Day, false) => "day",
            (WindowUnit::Day, true) => "days",
            (WindowUnit::Week, false) => "week",
            (WindowUnit::Week, true) => "weeks",
            (WindowUnit::Month, false) => "month",
            (WindowUnit::Month, true) => "months",
        }
    }
}

impl FromStr for WindowUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "day" | "days" => Ok(WindowUnit::Day),
            "w" | "week" | "weeks" => Ok(WindowUnit::Week),
            "m" | "month" | "months" => Ok(WindowUnit::Month),
            other => Err(format!("unknown window unit `{other}`")),
        }
    }
}

/// A count of calendar units on one side of the outcome date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub count: usize,
    pub unit: WindowUnit,
}

impl Span {
    pub fn new(count: usize, unit: WindowUnit) -> Self {
        Self { count, unit }
    }

    pub fn days(count: usize) -> Self {
        Self::new(count, WindowUnit::Day)
    }

    pub fn weeks(count: usize) -> Self {
        Self::new(count, WindowUnit::Week)
    }

    pub fn months(count: usize) -> Self {
        Self::new(count, WindowUnit::Month)
    }

    pub fn trading_days(self) -> usize {
        self.count * self.unit.trading_days()
    }

    fn label(self) -> String {
        format!("{} {}", self.count, self.unit.name(self.count != 1))
    }
}

/// Announcement window `[t_O - before, t_O + after]`.
///
/// Parses from `-2d,+2d`, `-1 week,+1 week` or the table label form
/// `(-1 month,2 months)`; displays as the table label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub before: Span,
    pub after: Span,
}

impl WindowSpec {
    pub fn new(before: Span, after: Span) -> Self {
        Self { before, after }
    }

    /// Trading days before the outcome day.
    pub fn n_before(&self) -> usize {
        self.before.trading_days()
    }

    /// Trading days after the outcome day.
    pub fn n_after(&self) -> usize {
        self.after.trading_days()
    }

    /// Window length including the outcome day.
    pub fn len(&self) -> usize {
        self.n_before() + self.n_after() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The five windows reported per outcome group.
    pub fn standard_set() -> Vec<WindowSpec> {
        vec![
            WindowSpec::new(Span::days(2), Span::days(2)),
            WindowSpec::new(Span::weeks(1), Span::weeks(1)),
            WindowSpec::new(Span::weeks(2), Span::weeks(2)),
            WindowSpec::new(Span::months(1), Span::months(1)),
            WindowSpec::new(Span::months(1), Span::months(2)),
        ]
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(-{},{})", self.before.label(), self.after.label())
    }
}

fn parse_span(raw: &str, expect_negative: bool) -> std::result::Result<Span, String> {
    let mut s = raw.trim();
    if let Some(rest) = s.strip_prefix('-') {
        if !expect_negative {
            return Err(format!("window end `{raw}` must not be negative"));
        }
        s = rest;
    } else if let Some(rest) = s.strip_prefix('+') {
        s = rest;
    }
    let s = s.trim();
    let split = s
        .find(|c: char| !c.is_ascii_digit())
        .ok_or_else(|| format!("missing unit in `{raw}`"))?;
    let (count, unit) = s.split_at(split);
    let count: usize = count
        .parse()
        .map_err(|_| format!("bad count in `{raw}`"))?;
    Ok(Span::new(count, unit.parse()?))
}

impl FromStr for WindowSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let inner = s.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .unwrap_or(inner);
        let (before, after) = inner
            .split_once(',')
            .ok_or_else(|| format!("window `{s}` must have the form `-N<unit>,+M<unit>`"))?;
        Ok(WindowSpec::new(
            parse_span(before, true)?,
            parse_span(after, false)?,
        ))
    }
}

impl Serialize for WindowSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WindowSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index range of the announcement window in `panel`.
///
/// Outcome dates on non-trading days snap forward to the next trading day.
pub fn resolve_window(
    panel: &AlignedPanel,
    outcome_date: NaiveDate,
    spec: &WindowSpec,
) -> Result<Range<usize>> {
    let outcome = panel
        .snap_forward(outcome_date)
        .ok_or(Error::OutcomeDateBeyondData(outcome_date))?;
    let start = outcome as i64 - spec.n_before() as i64;
    let end = outcome as i64 + spec.n_after() as i64;
    if start < 0 || end >= panel.len() as i64 {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            len: panel.len(),
        });
    }
    Ok(start as usize..end as usize + 1)
}

/// The `length` trading days ending the day before `window_start`.
pub fn estimation_range_before(window_start: usize, length: usize) -> Result<Range<usize>> {
    if length == 0 || window_start < length {
        return Err(Error::InsufficientHistory {
            needed: length,
            available: window_start,
        });
    }
    Ok(window_start - length..window_start)
}

/// Estimation range immediately preceding the announcement window.
pub fn estimation_range(
    panel: &AlignedPanel,
    outcome_date: NaiveDate,
    spec: &WindowSpec,
    length: usize,
) -> Result<Range<usize>> {
    let window = resolve_window(panel, outcome_date, spec)?;
    estimation_range_before(window.start, length)
}
