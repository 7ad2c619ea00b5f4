//! CSV formats for prices, cases and return series.
//!
//! Prices: `date,ticker,adj_close`, one row per ticker-day.
//! Cases: `case_id,ticker,outcome_date,registration_date,outcome_group,amount_claimed,amount_awarded`
//! followed by any number of covariate columns. Returns: `date,return`.
//! Empty cells are missing optional values; any malformed row is an error
//! carrying its line number.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use csv::StringRecord;

use super::{align, compute_log_returns, AlignedPanel, EventCase, OutcomeGroup, PricePoint, ReturnSeries};
use crate::error::{Error, Result};

/// Adjusted closes per ticker, each sorted by date.
pub type PriceTable = BTreeMap<String, Vec<PricePoint>>;

const PRICE_HEADER: [&str; 3] = ["date", "ticker", "adj_close"];
const CASE_HEADER: [&str; 7] = [
    "case_id",
    "ticker",
    "outcome_date",
    "registration_date",
    "outcome_group",
    "amount_claimed",
    "amount_awarded",
];
const RETURN_HEADER: [&str; 2] = ["date", "return"];
const DATE_FORMAT: &str = "%Y-%m-%d";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_error(source: &str, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(source, e),
        other => Error::parse(source, line, format!("{other:?}")),
    }
}

fn check_header(source: &str, found: &StringRecord, expected: &[&str]) -> Result<()> {
    let ok = found.len() >= expected.len()
        && expected
            .iter()
            .zip(found.iter())
            .all(|(e, f)| f.eq_ignore_ascii_case(e));
    if ok {
        Ok(())
    } else {
        Err(Error::parse(
            source,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ))
    }
}

fn parse_date(source: &str, line: u64, field: &str, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, DATE_FORMAT)
        .map_err(|_| Error::parse(source, line, format!("{field}: invalid date `{raw}`")))
}

fn parse_f64(source: &str, line: u64, field: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(source, line, format!("{field}: invalid number `{raw}`")))
}

fn optional(record: &StringRecord, idx: usize) -> Option<&str> {
    record.get(idx).filter(|s| !s.is_empty())
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

pub fn read_prices(path: impl AsRef<Path>) -> Result<PriceTable> {
    let path = path.as_ref();
    read_prices_from(open(path)?, &path.display().to_string())
}

/// Reads a price table; `source` names the input in error messages.
pub fn read_prices_from<R: Read>(input: R, source: &str) -> Result<PriceTable> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    check_header(source, &header, &PRICE_HEADER)?;

    let mut rows: BTreeMap<String, Vec<(PricePoint, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = line_of(&record);
        if record.len() != PRICE_HEADER.len() {
            return Err(Error::parse(
                source,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let date = parse_date(source, line, "date", &record[0])?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(Error::parse(source, line, "ticker: empty"));
        }
        let price = parse_f64(source, line, "adj_close", &record[2])?;
        if price <= 0.0 {
            return Err(Error::parse(
                source,
                line,
                format!("adj_close: price must be positive, got {price}"),
            ));
        }
        rows.entry(ticker)
            .or_default()
            .push((PricePoint::new(date, price), line));
    }

    let mut table = PriceTable::new();
    for (ticker, mut points) in rows {
        points.sort_by_key(|(p, _)| p.date);
        if let Some(w) = points.windows(2).find(|w| w[0].0.date == w[1].0.date) {
            return Err(Error::parse(
                source,
                w[1].1,
                format!("duplicate date {} for ticker {ticker}", w[1].0.date),
            ));
        }
        table.insert(ticker, points.into_iter().map(|(p, _)| p).collect());
    }
    Ok(table)
}

/// Aligned stock and benchmark returns for one ticker.
pub fn ticker_panel(table: &PriceTable, ticker: &str, market_ticker: &str) -> Result<AlignedPanel> {
    let series = |t: &str| {
        table
            .get(t)
            .ok_or_else(|| Error::UnknownTicker(t.to_string()))
            .and_then(|p| compute_log_returns(p))
    };
    align(&series(ticker)?, &series(market_ticker)?)
}

pub fn write_prices(path: impl AsRef<Path>, table: &PriceTable) -> Result<()> {
    let path = path.as_ref();
    write_prices_to(create(path)?, table).map_err(|e| relabel(e, path))
}

pub fn write_prices_to<W: Write>(output: W, table: &PriceTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let wrap = |e: csv::Error| csv_error("<output>", e);
    w.write_record(PRICE_HEADER).map_err(wrap)?;
    for (ticker, points) in table {
        for p in points {
            w.write_record([
                p.date.format(DATE_FORMAT).to_string(),
                ticker.clone(),
                p.price.to_string(),
            ])
            .map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn read_cases(path: impl AsRef<Path>) -> Result<Vec<EventCase>> {
    let path = path.as_ref();
    read_cases_from(open(path)?, &path.display().to_string())
}

fn parse_covariate(source: &str, line: u64, field: &str, raw: &str) -> Result<f64> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" => Ok(1.0),
        "false" | "no" => Ok(0.0),
        _ => parse_f64(source, line, field, raw),
    }
}

pub fn read_cases_from<R: Read>(input: R, source: &str) -> Result<Vec<EventCase>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    check_header(source, &header, &CASE_HEADER)?;
    let covariate_names: Vec<String> = header
        .iter()
        .skip(CASE_HEADER.len())
        .map(str::to_string)
        .collect();

    let mut cases = Vec::new();
    let mut seen = BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(Error::parse(
                source,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let case_id = record[0].to_string();
        if case_id.is_empty() {
            return Err(Error::parse(source, line, "case_id: empty"));
        }
        if !seen.insert(case_id.clone()) {
            return Err(Error::parse(source, line, format!("duplicate case_id `{case_id}`")));
        }
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(Error::parse(source, line, "ticker: empty"));
        }
        let outcome_date = parse_date(source, line, "outcome_date", &record[2])?;
        let registration_date = optional(&record, 3)
            .map(|raw| parse_date(source, line, "registration_date", raw))
            .transpose()?;
        let outcome_group: OutcomeGroup = record[4]
            .parse()
            .map_err(|msg: String| Error::parse(source, line, format!("outcome_group: {msg}")))?;
        let amount = |idx: usize, field: &str| -> Result<Option<f64>> {
            optional(&record, idx)
                .map(|raw| {
                    let v = parse_f64(source, line, field, raw)?;
                    if v < 0.0 {
                        Err(Error::parse(source, line, format!("{field}: negative amount {v}")))
                    } else {
                        Ok(v)
                    }
                })
                .transpose()
        };
        let amount_claimed = amount(5, "amount_claimed")?;
        let amount_awarded = amount(6, "amount_awarded")?;

        let mut covariates = BTreeMap::new();
        for (offset, name) in covariate_names.iter().enumerate() {
            if let Some(raw) = optional(&record, CASE_HEADER.len() + offset) {
                covariates.insert(name.clone(), parse_covariate(source, line, name, raw)?);
            }
        }

        cases.push(EventCase {
            case_id,
            ticker,
            outcome_date,
            registration_date,
            outcome_group,
            amount_claimed,
            amount_awarded,
            covariates,
        });
    }
    Ok(cases)
}

pub fn write_cases(path: impl AsRef<Path>, cases: &[EventCase]) -> Result<()> {
    let path = path.as_ref();
    write_cases_to(create(path)?, cases).map_err(|e| relabel(e, path))
}

pub fn write_cases_to<W: Write>(output: W, cases: &[EventCase]) -> Result<()> {
    let covariates: BTreeSet<&String> = cases.iter().flat_map(|c| c.covariates.keys()).collect();
    let mut w = csv::Writer::from_writer(output);
    let wrap = |e: csv::Error| csv_error("<output>", e);
    let header: Vec<&str> = CASE_HEADER
        .iter()
        .copied()
        .chain(covariates.iter().map(|s| s.as_str()))
        .collect();
    w.write_record(&header).map_err(wrap)?;
    let opt_num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in cases {
        let mut row = vec![
            c.case_id.clone(),
            c.ticker.clone(),
            c.outcome_date.format(DATE_FORMAT).to_string(),
            c.registration_date
                .map(|d| d.format(DATE_FORMAT).to_string())
                .unwrap_or_default(),
            c.outcome_group.to_string(),
            opt_num(c.amount_claimed),
            opt_num(c.amount_awarded),
        ];
        row.extend(covariates.iter().map(|k| opt_num(c.covariates.get(*k).copied())));
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn read_returns(path: impl AsRef<Path>) -> Result<ReturnSeries> {
    let path = path.as_ref();
    read_returns_from(open(path)?, &path.display().to_string())
}

pub fn read_returns_from<R: Read>(input: R, source: &str) -> Result<ReturnSeries> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    check_header(source, &header, &RETURN_HEADER)?;
    let mut dates = Vec::new();
    let mut returns = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = line_of(&record);
        if record.len() != 2 {
            return Err(Error::parse(source, line, "expected 2 fields"));
        }
        let date = parse_date(source, line, "date", &record[0])?;
        if dates.last().is_some_and(|last| *last >= date) {
            return Err(Error::parse(source, line, "dates must be strictly increasing"));
        }
        dates.push(date);
        returns.push(parse_f64(source, line, "return", &record[1])?);
    }
    ReturnSeries::new(dates, returns)
}

pub fn write_returns(path: impl AsRef<Path>, series: &ReturnSeries) -> Result<()> {
    let path = path.as_ref();
    write_returns_to(create(path)?, series).map_err(|e| relabel(e, path))
}

pub fn write_returns_to<W: Write>(output: W, series: &ReturnSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let wrap = |e: csv::Error| csv_error("<output>", e);
    w.write_record(RETURN_HEADER).map_err(wrap)?;
    for (d, r) in series.dates().iter().zip(series.returns()) {
        w.write_record([d.format(DATE_FORMAT).to_string(), r.to_string()])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

fn relabel(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Parse { line, message, .. } => Error::parse(path, line, message),
        other => other,
    }
}
