use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::{self, GarchParams, WindowResiduals};
use crate::market_data::AlignedPanel;

/// One fitted case offered to the resampler.
#[derive(Debug, Clone)]
pub struct PoolCase<'a> {
    pub case_id: &'a str,
    pub panel: &'a AlignedPanel,
    /// Parameters estimated before the case's true announcement window.
    pub params: GarchParams,
    /// The true announcement window; pseudo windows never overlap it.
    pub event_window: Range<usize>,
}

/// Precomputed pseudo-event windows for every case.
///
/// A pseudo window starting at row `p` uses the case's own parameters,
/// filtered over the `estimation_length` rows before `p` and seeded the
/// same way as a real estimation sample, to forecast variances for
/// `p..p + L`.
#[derive(Debug, Clone)]
pub struct BootstrapPool {
    window_len: usize,
    case_ids: Vec<String>,
    windows: Vec<Vec<WindowResiduals>>,
}

impl BootstrapPool {
    pub fn build(cases: &[PoolCase<'_>], window_len: usize, estimation_length: usize) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::EmptyWindow);
        }
        let windows = cases
            .par_iter()
            .map(|case| pseudo_windows(case, window_len, estimation_length))
            .collect::<Result<Vec<_>>>()?;
        let (case_ids, windows): (Vec<String>, Vec<Vec<WindowResiduals>>) = cases
            .iter()
            .zip(windows)
            .filter(|(_, w)| !w.is_empty())
            .map(|(c, w)| (c.case_id.to_string(), w))
            .unzip();
        if windows.is_empty() {
            return Err(Error::NoEligibleDates);
        }
        Ok(Self {
            window_len,
            case_ids,
            windows,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Cases with at least one eligible pseudo date.
    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    /// Total number of (case, pseudo date) pairs.
    pub fn eligible(&self) -> usize {
        self.windows.iter().map(Vec::len).sum()
    }

    fn draw_cav(&self, k: usize, rng: &mut ChaCha8Rng) -> f64 {
        let rows: Vec<&WindowResiduals> = (0..k)
            .map(|_| {
                let case = &self.windows[rng.random_range(0..self.windows.len())];
                &case[rng.random_range(0..case.len())]
            })
            .collect();
        let kf = k as f64;
        let mut total = 0.0;
        for t in 0..self.window_len {
            let sum_e: f64 = rows.iter().map(|w| w.residuals[t]).sum();
            let sum_v: f64 = rows.iter().map(|w| w.variances[t]).sum();
            let acc: f64 = rows
                .iter()
                .map(|w| {
                    let dev = kf * w.residuals[t] - sum_e;
                    dev * dev / (kf * (kf - 2.0) * w.variances[t] + sum_v)
                })
                .sum();
            total += acc / (kf - 1.0);
        }
        total - self.window_len as f64
    }
}

fn pseudo_windows(case: &PoolCase<'_>, len: usize, estimation_length: usize) -> Result<Vec<WindowResiduals>> {
    let n = case.panel.len();
    if estimation_length == 0 || n < estimation_length + len {
        return Ok(Vec::new());
    }
    let stock = case.panel.stock();
    let market = case.panel.market();
    let p = &case.params;
    let mut out = Vec::new();
    for start in estimation_length..=n - len {
        let end = start + len;
        if start < case.event_window.end && case.event_window.start < end {
            continue;
        }
        let est = start - estimation_length..start;
        let filtered = match garch::filter(p, &stock[est.clone()], &market[est]) {
            Ok(f) => f,
            Err(Error::NonPositiveVariance { .. }) => continue,
            Err(e) => return Err(e),
        };
        let state = filtered.terminal_state();
        let residuals = (start..end)
            .map(|t| stock[t] - p.alpha - p.beta * market[t])
            .collect();
        let variances = (1..=len)
            .map(|h| garch::forecast_from_state(p, &state, h))
            .collect::<Result<_>>()?;
        out.push(WindowResiduals {
            residuals,
            variances,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub replications: usize,
    /// Resampled CAV values, ascending.
    pub distribution: Vec<f64>,
    /// Share of draws at or above the observed CAV.
    pub p_upper: f64,
    /// Share of draws at or below the observed CAV.
    pub p_lower: f64,
    pub seed: u64,
}

/// Null distribution of CAV from `replications` pseudo cross-sections of
/// `k` cases drawn with replacement (case uniformly, then date uniformly).
///
/// Replication `r` draws from ChaCha stream `r` of `seed`, so the result
/// does not depend on how replications are scheduled across threads.
pub fn bootstrap(
    pool: &BootstrapPool,
    k: usize,
    observed_cav: f64,
    replications: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if k < super::MIN_CASES {
        return Err(Error::TooFewCases {
            k,
            min: super::MIN_CASES,
            failures: Vec::new(),
        });
    }
    if replications == 0 {
        return Err(Error::InvalidWindow("bootstrap needs at least one replication".into()));
    }
    let mut distribution: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            pool.draw_cav(k, &mut rng)
        })
        .collect();
    distribution.sort_by(f64::total_cmp);
    let reps = replications as f64;
    let upper = distribution.iter().filter(|&&c| c >= observed_cav).count();
    let lower = distribution.iter().filter(|&&c| c <= observed_cav).count();
    Ok(BootstrapResult {
        replications,
        p_upper: upper as f64 / reps,
        p_lower: lower as f64 / reps,
        distribution,
        seed,
    })
}
