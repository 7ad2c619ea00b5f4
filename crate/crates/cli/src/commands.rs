use std::collections::BTreeMap;
use std::fmt::Write as _;

use eventvol::cross_section::{build_design, case_abnormal_volatility, fit_design};
use eventvol::event_study::{run_group_study, CaseData, CavResult, GroupStudy, StudyConfig};
use eventvol::garch::fit_panel;
use eventvol::market_data::{
    estimation_range, read_cases, read_prices, ticker_panel, write_cases_to, write_prices_to, EventCase,
    PriceTable, Span, WindowSpec, WindowUnit,
};
use eventvol::{simulate_panel, CaseFailure, Error, OutcomeGroup, StdErrors};
use log::{error, info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{digest_input, FileDigest, OutputDir};
use crate::CliError;

struct Inputs {
    prices: PriceTable,
    cases: Vec<EventCase>,
    digests: Vec<FileDigest>,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs, CliError> {
    let price_path = config.price_file()?;
    let case_path = config.case_file()?;
    let prices = read_prices(price_path)?;
    let cases = read_cases(case_path)?;
    if !prices.contains_key(&config.market_ticker) {
        return Err(Error::UnknownTicker(config.market_ticker.clone()).into());
    }
    info!(
        "loaded {} tickers from {} and {} cases from {}",
        prices.len(),
        price_path.display(),
        cases.len(),
        case_path.display()
    );
    Ok(Inputs {
        digests: vec![digest_input(price_path)?, digest_input(case_path)?],
        prices,
        cases,
    })
}

/// File-name fragment for a window: "(-1 month,2 months)" becomes "m1m_p2m".
pub fn window_slug(spec: &WindowSpec) -> String {
    let unit = |s: &Span| match s.unit {
        WindowUnit::Day => 'd',
        WindowUnit::Week => 'w',
        WindowUnit::Month => 'm',
    };
    format!(
        "m{}{}_p{}{}",
        spec.before.count,
        unit(&spec.before),
        spec.after.count,
        unit(&spec.after)
    )
}

fn panel_title(group: OutcomeGroup) -> &'static str {
    match group {
        OutcomeGroup::Investor => "Decided in favor of investor",
        OutcomeGroup::State => "Decided in favor of state",
        OutcomeGroup::Settled => "Settled or discontinued",
    }
}

fn table_text(results: &[&CavResult], groups: &[OutcomeGroup]) -> String {
    let mut text = String::new();
    for (i, group) in groups.iter().enumerate() {
        let rows: Vec<_> = results.iter().filter(|r| r.group == *group).collect();
        let panel = (b'A' + i as u8) as char;
        let _ = writeln!(text, "Panel {panel}: {}", panel_title(*group));
        let _ = writeln!(
            text,
            "{:<24} {:>4} {:>9} {:>8} {:>7} {:>10}",
            "Window", "K", "CAV", "% vol", "p-val", "p-val boot"
        );
        for r in rows {
            let boot = r.p_boot().map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                text,
                "{:<24} {:>4} {:>9.3} {:>8.3} {:>7.3} {:>10}",
                r.window.to_string(),
                r.k,
                r.cav,
                r.pct_vol,
                r.p_asymptotic,
                boot
            );
        }
        text.push('\n');
    }
    text
}

#[derive(Serialize)]
struct FailedStudy {
    group: OutcomeGroup,
    window: WindowSpec,
    error: String,
    dropped_cases: Vec<CaseFailure>,
}

pub fn study(config: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(config)?;
    let mut load_failures: BTreeMap<OutcomeGroup, Vec<CaseFailure>> = BTreeMap::new();
    let mut data = Vec::new();
    for case in inputs.cases.into_iter().filter(|c| config.groups.contains(&c.outcome_group)) {
        match ticker_panel(&inputs.prices, &case.ticker, &config.market_ticker) {
            Ok(panel) => data.push(CaseData { case, panel }),
            Err(e) => {
                warn!("dropping case {}: {e}", case.case_id);
                load_failures.entry(case.outcome_group).or_default().push(CaseFailure {
                    case_id: case.case_id,
                    reason: e.to_string(),
                });
            }
        }
    }

    let study_config = StudyConfig {
        estimation_length: config.estimation_length,
        fit: config.fit,
        replications: config.bootstrap.replications,
        seed: config.seed,
    };
    let mut out = OutputDir::create(&config.out)?;
    let mut studies: Vec<GroupStudy> = Vec::new();
    let mut failed = Vec::new();
    for &group in &config.groups {
        let earlier = load_failures.get(&group).cloned().unwrap_or_default();
        for window in &config.windows {
            match run_group_study(&data, group, window, &study_config) {
                Ok(mut s) => {
                    s.failures.splice(0..0, earlier.iter().cloned());
                    let stem = format!("results/{group}_{}", window_slug(window));
                    out.write_json(&format!("{stem}.json"), &s)?;
                    out.write_csv(&format!("{stem}.csv"), &CavResult::CSV_HEADER, [s.result.csv_row()])?;
                    studies.push(s);
                }
                Err(e) => {
                    error!("{group} {window}: {e}");
                    let mut dropped = earlier.clone();
                    if let Error::TooFewCases { failures, .. } = &e {
                        dropped.extend(failures.iter().cloned());
                    }
                    failed.push(FailedStudy {
                        group,
                        window: *window,
                        error: e.to_string(),
                        dropped_cases: dropped,
                    });
                }
            }
        }
    }

    let results: Vec<&CavResult> = studies.iter().map(|s| &s.result).collect();
    out.write_csv("summary.csv", &CavResult::CSV_HEADER, results.iter().map(|r| r.csv_row()))?;
    out.write("summary.txt", table_text(&results, &config.groups).as_bytes())?;
    let cumulative = studies.iter().flat_map(|s| {
        s.cumulative.iter().map(move |p| {
            [
                s.result.group.to_string(),
                s.result.window.to_string(),
                p.day_offset.to_string(),
                format!("{:.6}", p.cav),
            ]
        })
    });
    out.write_csv("cumulative.csv", &["group", "window", "day_offset", "cav"], cumulative)?;
    if !failed.is_empty() {
        out.write_json("failed.json", &failed)?;
    }
    out.finish("study", config, inputs.digests)?;
    print!("{}", table_text(&results, &config.groups));

    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::PartialFailure {
            failed: failed.len(),
            total: config.groups.len() * config.windows.len(),
        })
    }
}

#[derive(Serialize)]
struct RegressionReport<'a> {
    window: WindowSpec,
    pre_event_length: usize,
    result: &'a eventvol::RegressionResult,
    case_ids: &'a [String],
    response: &'a [f64],
    excluded: Vec<CaseFailure>,
}

pub fn regress(config: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(config)?;
    let section = &config.regress;
    let pre = section.pre_event_length.unwrap_or(config.estimation_length);
    let mut excluded = Vec::new();
    let mut pairs = Vec::new();
    for case in inputs.cases.into_iter().filter(|c| c.outcome_group.is_decided()) {
        let av = ticker_panel(&inputs.prices, &case.ticker, &config.market_ticker)
            .and_then(|panel| case_abnormal_volatility(&panel, &case, &section.window, pre));
        match av {
            Ok(av) => pairs.push((case, av)),
            Err(e) => {
                warn!("excluding case {} from the regression: {e}", case.case_id);
                excluded.push(CaseFailure {
                    case_id: case.case_id,
                    reason: e.to_string(),
                });
            }
        }
    }
    let design = build_design(&pairs, &section.extra_columns, section.strict)?;
    excluded.extend(design.excluded.iter().cloned());
    let kind = if section.robust {
        StdErrors::Robust
    } else {
        StdErrors::Homoskedastic
    };
    let result = fit_design(&design, kind)?;

    let mut out = OutputDir::create(&config.out)?;
    let text = format!("{result}\n");
    out.write("regression.txt", text.as_bytes())?;
    out.write_json(
        "regression.json",
        &RegressionReport {
            window: section.window,
            pre_event_length: pre,
            result: &result,
            case_ids: &design.case_ids,
            response: &design.response,
            excluded,
        },
    )?;
    out.finish("regress", config, inputs.digests)?;
    print!("{text}");
    Ok(())
}

pub fn simulate(config: &RunConfig) -> Result<(), CliError> {
    let mut spec = config.simulate.clone();
    spec.market_ticker = config.market_ticker.clone();
    let sim = simulate_panel(&spec)?;
    let mut prices = Vec::new();
    write_prices_to(&mut prices, &sim.price_table())?;
    let mut cases = Vec::new();
    write_cases_to(&mut cases, &sim.event_cases())?;

    let mut out = OutputDir::create(&config.out)?;
    out.write("prices.csv", &prices)?;
    out.write("cases.csv", &cases)?;
    out.finish("simulate", config, Vec::new())?;
    info!(
        "wrote {} tickers x {} prices and {} cases to {}",
        sim.cases.len() + 1,
        sim.dates.len(),
        sim.cases.len(),
        config.out.display()
    );
    Ok(())
}

pub fn fit(config: &RunConfig, case_id: &str) -> Result<(), CliError> {
    let inputs = load_inputs(config)?;
    let case = inputs
        .cases
        .iter()
        .find(|c| c.case_id == case_id)
        .ok_or_else(|| CliError::Config(format!("case {case_id} is not in the case file")))?;
    let window = &config.windows[0];
    let panel = ticker_panel(&inputs.prices, &case.ticker, &config.market_ticker)?;
    let range = estimation_range(&panel, case.outcome_date, window, config.estimation_length)?;
    let fit = fit_panel(&panel, range, &config.fit)?;

    let mut out = OutputDir::create(&config.out)?;
    let name: String = case_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    out.write_json(&format!("fit_{name}.json"), &fit)?;
    out.finish("fit", config, inputs.digests)?;
    let p = fit.params;
    println!(
        "{case_id}: alpha={:.6} beta={:.4} psi0={:.3e} psi1={:.4} psi2={:.4} persistence={:.4} loglik={:.3} iterations={}",
        p.alpha,
        p.beta,
        p.psi0,
        p.psi1,
        p.psi2,
        p.persistence(),
        fit.log_likelihood,
        fit.iterations
    );
    Ok(())
}
