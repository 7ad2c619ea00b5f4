//! Fixtures shared by the benchmarks.

use eventvol::event_study::{CaseData, CrossSection};
use eventvol::garch::{GarchParams, WindowResiduals};
use eventvol::market_data::WindowSpec;
use eventvol::{simulate_panel, OutcomeGroup, SimSpec};

pub fn study_cases(cases: usize, days: usize, seed: u64) -> Vec<CaseData> {
    simulate_panel(&SimSpec {
        cases,
        days,
        window: window(),
        groups: vec![OutcomeGroup::Investor],
        seed,
        ..SimSpec::default()
    })
    .expect("valid simulation")
    .case_data()
}

pub fn window() -> WindowSpec {
    "-2w,+2w".parse().expect("static window")
}

/// Stock and market returns from one simulated GARCH series.
pub fn series(days: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let sim = simulate_panel(&SimSpec {
        params: vec![GarchParams::new(0.0, 1.0, 0.05, 0.90, 0.05)],
        cases: 1,
        days: days.max(1000),
        market_sd: 1.0,
        seed,
        ..SimSpec::default()
    })
    .expect("valid simulation");
    let mut stock = sim.cases[0].returns.clone();
    let mut market = sim.market_returns;
    stock.truncate(days);
    market.truncate(days);
    (stock, market)
}

/// Deterministic cross-section with `k` cases and `days` window days.
pub fn cross_section(k: usize, days: usize) -> CrossSection {
    let rows = (0..k)
        .map(|i| WindowResiduals {
            residuals: (0..days).map(|t| ((i * 31 + t * 17) % 13) as f64 / 6.0 - 1.0).collect(),
            variances: (0..days).map(|t| 0.5 + ((i + t) % 5) as f64 / 4.0).collect(),
        })
        .collect();
    CrossSection::new(rows).expect("valid cross-section")
}
