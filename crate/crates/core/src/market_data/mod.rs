//! Price and case ingestion, log returns, calendar alignment and
//! announcement-window resolution in trading-day units.

mod io;
mod window;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_cases, read_cases_from, read_prices, read_prices_from, read_returns, read_returns_from, ticker_panel,
    write_cases, write_cases_to, write_prices, write_prices_to, write_returns, write_returns_to,
    PriceTable,
};
pub use window::{estimation_range, estimation_range_before, resolve_window, Span, WindowSpec, WindowUnit};

/// One adjusted close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

impl PricePoint {
    pub fn new(date: NaiveDate, price: f64) -> Self {
        Self { date, price }
    }
}

/// Dated log returns. Dates are strictly increasing and every return is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self> {
        if dates.len() != returns.len() {
            return Err(Error::DegenerateData(format!(
                "{} dates but {} returns",
                dates.len(),
                returns.len()
            )));
        }
        check_increasing(&dates)?;
        if let Some(index) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFiniteReturn { index });
        }
        Ok(Self { dates, returns })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    for (i, w) in dates.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::UnorderedDates {
                index: i + 1,
                date: w[1],
            });
        }
    }
    Ok(())
}

/// Stock and benchmark returns restricted to their common trading days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    stock: Vec<f64>,
    market: Vec<f64>,
}

impl AlignedPanel {
    /// Builds a panel from already-aligned columns.
    pub fn from_columns(dates: Vec<NaiveDate>, stock: Vec<f64>, market: Vec<f64>) -> Result<Self> {
        if dates.len() != stock.len() || dates.len() != market.len() {
            return Err(Error::DegenerateData(
                "panel columns have different lengths".into(),
            ));
        }
        if dates.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        check_increasing(&dates)?;
        if let Some(index) = stock
            .iter()
            .chain(market.iter())
            .position(|r| !r.is_finite())
        {
            return Err(Error::NonFiniteReturn {
                index: index % dates.len(),
            });
        }
        Ok(Self {
            dates,
            stock,
            market,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn stock(&self) -> &[f64] {
        &self.stock
    }

    pub fn market(&self) -> &[f64] {
        &self.market
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Index of the first trading day on or after `date`.
    pub fn snap_forward(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.dates.partition_point(|d| *d < date);
        (idx < self.dates.len()).then_some(idx)
    }
}

/// `returns[k] = ln(price[k+1] / price[k])`, dated at the later price.
pub fn compute_log_returns(prices: &[PricePoint]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::TooShortSeries {
            len: prices.len(),
            min: 2,
        });
    }
    if let Some((index, p)) = prices
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.price.is_finite() && p.price > 0.0))
    {
        return Err(Error::NonPositivePrice {
            index,
            price: p.price,
        });
    }
    let dates: Vec<NaiveDate> = prices.iter().map(|p| p.date).collect();
    check_increasing(&dates)?;
    let returns = prices
        .windows(2)
        .map(|w| (w[1].price / w[0].price).ln())
        .collect();
    ReturnSeries::new(dates[1..].to_vec(), returns)
}

/// Restricts both series to the intersection of their calendars.
pub fn align(stock: &ReturnSeries, market: &ReturnSeries) -> Result<AlignedPanel> {
    let (mut i, mut j) = (0, 0);
    let mut dates = Vec::new();
    let mut s = Vec::new();
    let mut m = Vec::new();
    while i < stock.len() && j < market.len() {
        match stock.dates[i].cmp(&market.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dates.push(stock.dates[i]);
                s.push(stock.returns[i]);
                m.push(market.returns[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(AlignedPanel {
        dates,
        stock: s,
        market: m,
    })
}

/// Arbitration outcome classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeGroup {
    Investor,
    State,
    /// Settled out of court or discontinued.
    Settled,
}

impl OutcomeGroup {
    pub const ALL: [OutcomeGroup; 3] = [Self::Investor, Self::State, Self::Settled];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Investor => "investor",
            Self::State => "state",
            Self::Settled => "settled",
        }
    }

    /// Investor and state outcomes carry an award decision.
    pub fn is_decided(self) -> bool {
        !matches!(self, Self::Settled)
    }
}

impl fmt::Display for OutcomeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutcomeGroup {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "investor" => Ok(Self::Investor),
            "state" => Ok(Self::State),
            "settled" | "discontinued" | "settled/discontinued" => Ok(Self::Settled),
            other => Err(format!(
                "unknown outcome group `{other}` (expected investor, state or settled)"
            )),
        }
    }
}

/// One investment dispute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCase {
    pub case_id: String,
    pub ticker: String,
    pub outcome_date: NaiveDate,
    pub registration_date: Option<NaiveDate>,
    pub outcome_group: OutcomeGroup,
    /// Million USD.
    pub amount_claimed: Option<f64>,
    /// Million USD.
    pub amount_awarded: Option<f64>,
    /// Extra columns from the case file, booleans stored as 0/1.
    pub covariates: BTreeMap<String, f64>,
}

impl EventCase {
    pub fn new(
        case_id: impl Into<String>,
        ticker: impl Into<String>,
        outcome_date: NaiveDate,
        outcome_group: OutcomeGroup,
    ) -> Self {
        Self {
            case_id: case_id.into(),
            ticker: ticker.into(),
            outcome_date,
            registration_date: None,
            outcome_group,
            amount_claimed: None,
            amount_awarded: None,
            covariates: BTreeMap::new(),
        }
    }

    /// Case-insensitive covariate lookup.
    pub fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied().or_else(|| {
            self.covariates
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| *v)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(offset: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(offset)
    }

    fn prices(values: &[f64]) -> Vec<PricePoint> {
        values
            .iter()
            .enumerate()
            .map(|(i, &p)| PricePoint::new(d(i as i64), p))
            .collect()
    }

    fn series(days: &[i64]) -> ReturnSeries {
        ReturnSeries::new(
            days.iter().map(|&o| d(o)).collect(),
            days.iter().map(|&o| o as f64 * 0.001).collect(),
        )
        .unwrap()
    }

    #[test]
    fn log_returns_examples() {
        assert_eq!(compute_log_returns(&prices(&[1.0, 1.0])).unwrap().returns(), &[0.0]);

        let r = compute_log_returns(&prices(&[100.0, 110.0])).unwrap();
        assert!((r.returns()[0] - 0.095_310_179_804_324_87).abs() < 1e-12);
        assert_eq!(r.dates(), &[d(1)]);

        let e = std::f64::consts::E;
        let r = compute_log_returns(&prices(&[e, e * e])).unwrap();
        assert!((r.returns()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_returns_errors() {
        assert!(matches!(
            compute_log_returns(&prices(&[1.0])),
            Err(Error::TooShortSeries { len: 1, .. })
        ));
        assert!(matches!(
            compute_log_returns(&prices(&[1.0, 0.0, 2.0])),
            Err(Error::NonPositivePrice { index: 1, .. })
        ));
        assert!(matches!(
            compute_log_returns(&prices(&[1.0, -3.0])),
            Err(Error::NonPositivePrice { .. })
        ));
        let mut p = prices(&[1.0, 2.0, 3.0]);
        p.swap(1, 2);
        assert!(matches!(compute_log_returns(&p), Err(Error::UnorderedDates { .. })));
    }

    #[test]
    fn align_examples() {
        let days: Vec<i64> = (0..10).collect();
        let full = align(&series(&days), &series(&days)).unwrap();
        assert_eq!(full.len(), 10);

        // stock misses one market holiday
        let stock_days: Vec<i64> = (0..10).filter(|&x| x != 4).collect();
        let panel = align(&series(&stock_days), &series(&days)).unwrap();
        let expected: std::collections::BTreeSet<i64> = stock_days
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .intersection(&days.iter().copied().collect())
            .copied()
            .collect();
        assert_eq!(panel.len(), expected.len());
        assert_eq!(panel.len(), 9);
        assert!(!panel.dates().contains(&d(4)));
        assert_eq!(panel.market()[4], 0.005);

        assert!(matches!(
            align(&series(&[0, 1, 2]), &series(&[5, 6])),
            Err(Error::EmptyIntersection)
        ));
    }

    #[test]
    fn outcome_group_vocabulary() {
        assert_eq!("Investor".parse::<OutcomeGroup>().unwrap(), OutcomeGroup::Investor);
        assert_eq!("STATE".parse::<OutcomeGroup>().unwrap(), OutcomeGroup::State);
        assert_eq!("Discontinued".parse::<OutcomeGroup>().unwrap(), OutcomeGroup::Settled);
        assert!("draw".parse::<OutcomeGroup>().is_err());
    }

    proptest! {
        #[test]
        fn log_returns_scale_free(
            path in prop::collection::vec(0.01f64..1e4, 2..40),
            scale in 1e-3f64..1e3,
        ) {
            let base = compute_log_returns(&prices(&path)).unwrap();
            let scaled: Vec<f64> = path.iter().map(|p| p * scale).collect();
            let other = compute_log_returns(&prices(&scaled)).unwrap();
            for (a, b) in base.returns().iter().zip(other.returns()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn align_dates_commute(
            a in prop::collection::btree_set(0i64..200, 1..60),
            b in prop::collection::btree_set(0i64..200, 1..60),
        ) {
            let a: Vec<i64> = a.into_iter().collect();
            let b: Vec<i64> = b.into_iter().collect();
            let ab = align(&series(&a), &series(&b));
            let ba = align(&series(&b), &series(&a));
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.dates(), y.dates()),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }
    }
}
