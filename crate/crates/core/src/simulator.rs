//! Synthetic panels from the market model with GARCH(1,1) errors, with an
//! optional multiplicative variance effect inside each case's announcement
//! window.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_study::CaseData;
use crate::garch::GarchParams;
use crate::market_data::{AlignedPanel, EventCase, OutcomeGroup, PricePoint, PriceTable, WindowSpec};

const BASE_PRICE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    /// Per-case parameters; a single entry applies to every case.
    pub params: Vec<GarchParams>,
    /// Number of cases `K`.
    pub cases: usize,
    /// Prices per ticker `T` (returns are `T - 1`).
    pub days: usize,
    pub market_sd: f64,
    pub window: WindowSpec,
    pub estimation_length: usize,
    /// Variance multiplier inside the announcement window; 1 is the null.
    pub injected_m: f64,
    /// Outcome groups assigned round-robin.
    pub groups: Vec<OutcomeGroup>,
    pub burn_in: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub market_ticker: String,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            params: vec![GarchParams::new(0.0002, 1.0, 1.25e-5, 0.90, 0.05)],
            cases: 20,
            days: 1200,
            market_sd: 0.01,
            window: "-1m,+2m".parse().expect("static window"),
            estimation_length: 500,
            injected_m: 1.0,
            groups: vec![OutcomeGroup::Investor, OutcomeGroup::State, OutcomeGroup::Settled],
            burn_in: 1000,
            seed: 1,
            start_date: NaiveDate::from_ymd_opt(2005, 1, 3).expect("static date"),
            market_ticker: "SPX".into(),
        }
    }
}

impl SimSpec {
    fn params_for(&self, case: usize) -> GarchParams {
        self.params[if self.params.len() == 1 { 0 } else { case }]
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() || (self.params.len() != 1 && self.params.len() != self.cases) {
            return Err(Error::InvalidParams(format!(
                "need 1 or {} parameter sets, got {}",
                self.cases,
                self.params.len()
            )));
        }
        for p in &self.params {
            p.validate()?;
        }
        if self.groups.is_empty() {
            return Err(Error::InvalidParams("at least one outcome group required".into()));
        }
        if !(self.injected_m >= 0.0 && self.injected_m.is_finite()) {
            return Err(Error::InvalidParams("injected multiplier must be >= 0".into()));
        }
        if !(self.market_sd >= 0.0 && self.market_sd.is_finite()) {
            return Err(Error::InvalidParams("market sd must be >= 0".into()));
        }
        let needed = self.estimation_length + self.window.len();
        if self.days < needed + 2 {
            return Err(Error::InsufficientHistory {
                needed: needed + 2,
                available: self.days,
            });
        }
        Ok(())
    }
}

/// One simulated stock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCase {
    pub case: EventCase,
    pub returns: Vec<f64>,
    /// True conditional variances of the undisturbed error process.
    pub sigma2: Vec<f64>,
    /// Return index of the outcome day.
    pub outcome_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStudy {
    /// Price dates (weekdays); return `j` is dated `dates[j + 1]`.
    pub dates: Vec<NaiveDate>,
    pub market_returns: Vec<f64>,
    pub cases: Vec<SimulatedCase>,
    pub market_ticker: String,
}

impl SimulatedStudy {
    pub fn return_dates(&self) -> &[NaiveDate] {
        &self.dates[1..]
    }

    pub fn event_cases(&self) -> Vec<EventCase> {
        self.cases.iter().map(|c| c.case.clone()).collect()
    }

    /// Panels built directly from the simulated returns.
    pub fn case_data(&self) -> Vec<CaseData> {
        self.cases
            .iter()
            .map(|c| CaseData {
                case: c.case.clone(),
                panel: AlignedPanel::from_columns(
                    self.return_dates().to_vec(),
                    c.returns.clone(),
                    self.market_returns.clone(),
                )
                .expect("simulated columns are aligned"),
            })
            .collect()
    }

    /// Prices for every ticker and the benchmark, exp-cumulated from 100.
    pub fn price_table(&self) -> PriceTable {
        let to_prices = |returns: &[f64]| {
            let mut level = 0.0;
            let mut out = Vec::with_capacity(returns.len() + 1);
            out.push(PricePoint::new(self.dates[0], BASE_PRICE));
            for (r, d) in returns.iter().zip(&self.dates[1..]) {
                level += r;
                out.push(PricePoint::new(*d, BASE_PRICE * level.exp()));
            }
            out
        };
        let mut table = PriceTable::new();
        table.insert(self.market_ticker.clone(), to_prices(&self.market_returns));
        for c in &self.cases {
            table.insert(c.case.ticker.clone(), to_prices(&c.returns));
        }
        table
    }
}

/// Consecutive weekdays starting on or after `start`.
pub fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws a study. Stream 0 drives the benchmark, stream `i + 1` case `i`.
pub fn simulate_panel(spec: &SimSpec) -> Result<SimulatedStudy> {
    spec.validate()?;
    let dates = weekdays(spec.start_date, spec.days);
    let n = spec.days - 1;

    let mut market_rng = stream(spec.seed, 0);
    let market_returns: Vec<f64> = (0..n).map(|_| spec.market_sd * normal(&mut market_rng)).collect();

    let (nb, na) = (spec.window.n_before(), spec.window.n_after());
    let lowest = spec.estimation_length + nb;
    let highest = n - 1 - na;

    let cases = (0..spec.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(spec.seed, i as u64 + 1);
            let p = spec.params_for(i);
            let outcome_index = rng.random_range(lowest..=highest);
            let window = outcome_index - nb..=outcome_index + na;
            let scale = spec.injected_m.sqrt();

            let mut s2 = p.unconditional_variance();
            let mut e = s2.sqrt() * normal(&mut rng);
            for _ in 0..spec.burn_in {
                s2 = p.psi0 + p.psi1 * s2 + p.psi2 * e * e;
                e = s2.sqrt() * normal(&mut rng);
            }
            let mut returns = Vec::with_capacity(n);
            let mut sigma2 = Vec::with_capacity(n);
            for (t, m) in market_returns.iter().enumerate() {
                s2 = p.psi0 + p.psi1 * s2 + p.psi2 * e * e;
                e = s2.sqrt() * normal(&mut rng);
                let shock = if window.contains(&t) { scale * e } else { e };
                returns.push(p.alpha + p.beta * m + shock);
                sigma2.push(s2);
            }

            let group = spec.groups[i % spec.groups.len()];
            let outcome_date = dates[outcome_index + 1];
            let mut case = EventCase::new(format!("SIM-{:03}", i + 1), format!("S{:03}", i + 1), outcome_date, group);
            case.registration_date = Some(outcome_date - Duration::days(rng.random_range(365..2200)));
            let claimed = 10.0 + 990.0 * rng.random::<f64>();
            case.amount_claimed = Some(round2(claimed));
            case.amount_awarded = match group {
                OutcomeGroup::Investor => Some(round2(claimed * rng.random_range(0.05..1.0))),
                OutcomeGroup::State => Some(0.0),
                OutcomeGroup::Settled => None,
            };
            case.covariates.insert("pic".into(), round4(normal(&mut rng)));
            case.covariates.insert("rl".into(), round4(normal(&mut rng)));
            for flag in ["ar", "co", "ie"] {
                case.covariates.insert(flag.into(), f64::from(u8::from(rng.random::<bool>())));
            }
            SimulatedCase {
                case,
                returns,
                sigma2,
                outcome_index,
            }
        })
        .collect();

    Ok(SimulatedStudy {
        dates,
        market_returns,
        cases,
        market_ticker: spec.market_ticker.clone(),
    })
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
