use std::ops::Range;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bootstrap, BootstrapPool, CavResult, CrossSection, PoolCase, MIN_CASES};
use crate::error::{CaseFailure, Error, Result};
use crate::garch::{self, FitConfig, GarchFit, WindowResiduals};
use crate::market_data::{
    estimation_range_before, resolve_window, AlignedPanel, EventCase, OutcomeGroup, WindowSpec,
};
use crate::stats;

/// A case together with its aligned stock/benchmark returns.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    pub case: EventCase,
    pub panel: AlignedPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Trading days in each GARCH estimation sample.
    pub estimation_length: usize,
    pub fit: FitConfig,
    /// Bootstrap replications; zero skips the bootstrap.
    pub replications: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            estimation_length: 500,
            fit: FitConfig::default(),
            replications: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    /// Trading days relative to the outcome day.
    pub day_offset: i64,
    pub cav: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRatio {
    pub case_id: String,
    pub ratio: f64,
}

/// Everything produced for one outcome group and window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStudy {
    pub result: CavResult,
    /// Running sum of `M_t - 1` across the window.
    pub cumulative: Vec<CumulativePoint>,
    /// Cross-sectional mean residual per day (diagnostic only).
    pub abnormal_returns: Vec<f64>,
    /// Per-case realized-to-forecast variance ratios (diagnostic only).
    pub case_ratios: Vec<CaseRatio>,
    pub median_ratio: f64,
    pub cases_used: Vec<String>,
    pub failures: Vec<CaseFailure>,
    pub bootstrap_seed: Option<u64>,
}

struct FittedCase<'a> {
    data: &'a CaseData,
    fit: GarchFit,
    window: Range<usize>,
    residuals: WindowResiduals,
}

fn prepare<'a>(data: &'a CaseData, spec: &WindowSpec, config: &StudyConfig) -> Result<FittedCase<'a>> {
    let window = resolve_window(&data.panel, data.case.outcome_date, spec)?;
    let estimation = estimation_range_before(window.start, config.estimation_length)?;
    let fit = garch::fit_panel(&data.panel, estimation, &config.fit)?;
    let residuals = garch::window_residuals(&fit, &data.panel, window.clone())?;
    Ok(FittedCase {
        data,
        fit,
        window,
        residuals,
    })
}

/// Seed for one (group, window) bootstrap, derived from the master seed.
pub fn bootstrap_seed(master: u64, group: OutcomeGroup, window: &WindowSpec) -> u64 {
    let label = format!("{group}|{window}");
    stats::mix_seed(master, stats::label_hash(&label))
}

/// Fits, forecasts and tests one outcome group over one window.
///
/// Cases whose window cannot be placed or whose fit fails are dropped and
/// listed in `failures`; the study aborts only when fewer than three
/// cases remain.
pub fn run_group_study(
    cases: &[CaseData],
    group: OutcomeGroup,
    spec: &WindowSpec,
    config: &StudyConfig,
) -> Result<GroupStudy> {
    let members: Vec<&CaseData> = cases
        .iter()
        .filter(|c| c.case.outcome_group == group)
        .collect();
    let prepared: Vec<(String, Result<FittedCase>)> = members
        .par_iter()
        .map(|c| (c.case.case_id.clone(), prepare(c, spec, config)))
        .collect();

    let mut fitted = Vec::new();
    let mut failures = Vec::new();
    for (case_id, outcome) in prepared {
        match outcome {
            Ok(f) => fitted.push(f),
            Err(e) => {
                warn!("{group} {spec}: dropping case {case_id}: {e}");
                failures.push(CaseFailure {
                    case_id,
                    reason: e.to_string(),
                });
            }
        }
    }
    if fitted.len() < MIN_CASES {
        return Err(Error::TooFewCases {
            k: fitted.len(),
            min: MIN_CASES,
            failures,
        });
    }

    let cross_section = CrossSection::new(fitted.iter().map(|f| f.residuals.clone()).collect())?;
    let mut result = CavResult::from_cross_section(group, *spec, &cross_section)?;

    let mut bootstrap_seed_used = None;
    if config.replications > 0 {
        let pool_cases: Vec<PoolCase> = fitted
            .iter()
            .map(|f| PoolCase {
                case_id: &f.data.case.case_id,
                panel: &f.data.panel,
                params: f.fit.params,
                event_window: f.window.clone(),
            })
            .collect();
        let pool = BootstrapPool::build(&pool_cases, spec.len(), config.estimation_length)?;
        let seed = bootstrap_seed(config.seed, group, spec);
        let boot = bootstrap(&pool, cross_section.cases(), result.cav, config.replications, seed)?;
        result.p_boot_upper = Some(boot.p_upper);
        result.p_boot_lower = Some(boot.p_lower);
        bootstrap_seed_used = Some(seed);
    }

    let mut running = 0.0;
    let cumulative = result
        .m_hat
        .iter()
        .enumerate()
        .map(|(j, m)| {
            running += m - 1.0;
            CumulativePoint {
                day_offset: j as i64 - spec.n_before() as i64,
                cav: running,
            }
        })
        .collect();
    let ratios = cross_section.variance_ratios();
    let case_ratios: Vec<CaseRatio> = fitted
        .iter()
        .zip(&ratios)
        .map(|(f, r)| CaseRatio {
            case_id: f.data.case.case_id.clone(),
            ratio: *r,
        })
        .collect();
    info!(
        "{group} {spec}: K = {}, CAV = {:.3}, p = {:.3}",
        result.k, result.cav, result.p_asymptotic
    );

    Ok(GroupStudy {
        median_ratio: stats::median(&ratios).unwrap_or(f64::NAN),
        abnormal_returns: cross_section.abnormal_returns(),
        cumulative,
        case_ratios,
        cases_used: fitted.iter().map(|f| f.data.case.case_id.clone()).collect(),
        failures,
        bootstrap_seed: bootstrap_seed_used,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch::GarchParams;
    use crate::simulator::{simulate_panel, SimSpec};

    fn sim(cases: usize, m: f64, seed: u64) -> Vec<CaseData> {
        simulate_panel(&SimSpec {
            params: vec![GarchParams::new(0.0, 1.0, 1e-5, 0.85, 0.10)],
            cases,
            days: 800,
            window: "-1w,+1w".parse().unwrap(),
            injected_m: m,
            groups: vec![OutcomeGroup::Investor],
            seed,
            ..SimSpec::default()
        })
        .unwrap()
        .case_data()
    }

    fn config() -> StudyConfig {
        StudyConfig {
            replications: 200,
            seed: 4,
            ..StudyConfig::default()
        }
    }

    #[test]
    fn too_few_usable_cases() {
        let mut data = sim(3, 1.0, 1);
        // push the outcome date past the data so the window cannot be placed
        data[0].case.outcome_date = chrono::NaiveDate::from_ymd_opt(2030, 1, 1).unwrap();
        let spec = "-1w,+1w".parse().unwrap();
        match run_group_study(&data, OutcomeGroup::Investor, &spec, &config()) {
            Err(Error::TooFewCases { k, failures, .. }) => {
                assert_eq!(k, 2);
                assert_eq!(failures.len(), 1);
                assert_eq!(failures[0].case_id, data[0].case.case_id);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn failures_are_reported_not_fatal() {
        let mut data = sim(5, 1.0, 2);
        data[1].case.outcome_date = chrono::NaiveDate::from_ymd_opt(2030, 1, 1).unwrap();
        let spec = "-1w,+1w".parse().unwrap();
        let study = run_group_study(&data, OutcomeGroup::Investor, &spec, &config()).unwrap();
        assert_eq!(study.result.k, 4);
        assert_eq!(study.failures.len(), 1);
        assert_eq!(study.cumulative.len(), 11);
        assert_eq!(study.cumulative[0].day_offset, -5);
        assert!((study.cumulative.last().unwrap().cav - study.result.cav).abs() < 1e-9);
        assert!(study.result.p_boot_upper.is_some());
    }

    #[test]
    fn other_groups_are_ignored() {
        let data = sim(4, 1.0, 3);
        let spec = "-1w,+1w".parse().unwrap();
        assert!(matches!(
            run_group_study(&data, OutcomeGroup::State, &spec, &config()),
            Err(Error::TooFewCases { k: 0, .. })
        ));
    }

    #[test]
    fn injected_effect_is_recovered() {
        let data = sim(40, 2.0, 9);
        let spec: WindowSpec = "-1w,+1w".parse().unwrap();
        let study = run_group_study(&data, OutcomeGroup::Investor, &spec, &config()).unwrap();
        let target = spec.len() as f64;
        assert!(
            (study.result.cav - target).abs() < 0.5 * target,
            "cav {}",
            study.result.cav
        );
        assert!(study.result.p_asymptotic < 0.01);
        assert!(study.median_ratio > 1.3);
    }

    #[test]
    fn seeds_differ_by_group_and_window() {
        let a: WindowSpec = "-1w,+1w".parse().unwrap();
        let b: WindowSpec = "-2d,+2d".parse().unwrap();
        assert_ne!(bootstrap_seed(1, OutcomeGroup::Investor, &a), bootstrap_seed(1, OutcomeGroup::State, &a));
        assert_ne!(bootstrap_seed(1, OutcomeGroup::Investor, &a), bootstrap_seed(1, OutcomeGroup::Investor, &b));
        assert_eq!(bootstrap_seed(7, OutcomeGroup::Settled, &b), bootstrap_seed(7, OutcomeGroup::Settled, &b));
    }
}
