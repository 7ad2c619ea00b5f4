use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{GarchFit, GarchParams, TerminalState};
use crate::error::{Error, Result};
use crate::market_data::AlignedPanel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceForecast {
    pub horizon: usize,
    pub value: f64,
}

/// k-step conditional variance forecast from a terminal state:
/// `v + p^(k-1) * (s2_{t+1|t} - v)` with `p = psi1 + psi2` and
/// `v = psi0 / (1 - p)`.
pub fn forecast_from_state(params: &GarchParams, state: &TerminalState, horizon: usize) -> Result<f64> {
    params.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidWindow("forecast horizon must be at least 1".into()));
    }
    let one_step =
        params.psi0 + params.psi1 * state.sigma2 + params.psi2 * state.residual * state.residual;
    let persistence = params.persistence();
    let long_run = params.unconditional_variance();
    let decay = persistence.powi((horizon - 1).min(i32::MAX as usize) as i32);
    Ok(long_run + decay * (one_step - long_run))
}

pub fn forecast_variance(fit: &GarchFit, horizon: usize) -> Result<VarianceForecast> {
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
        });
    }
    Ok(VarianceForecast {
        horizon,
        value: forecast_from_state(&fit.params, &fit.terminal_state, horizon)?,
    })
}

/// Market-model residuals over an announcement window paired with their
/// forecast variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResiduals {
    pub residuals: Vec<f64>,
    pub variances: Vec<f64>,
}

impl WindowResiduals {
    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Residuals over `window`, which must start right after the fit's
/// estimation range; day `j` of the window gets the `(j+1)`-step forecast.
pub fn window_residuals(fit: &GarchFit, panel: &AlignedPanel, window: Range<usize>) -> Result<WindowResiduals> {
    if window.start != fit.estimation.end {
        return Err(Error::InvalidWindow(format!(
            "window starts at {} but estimation ends at {}",
            window.start, fit.estimation.end
        )));
    }
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if window.end > panel.len() {
        return Err(Error::WindowOutOfRange {
            start: window.start as i64,
            end: window.end as i64 - 1,
            len: panel.len(),
        });
    }
    let p = &fit.params;
    let residuals = window
        .clone()
        .map(|t| panel.stock()[t] - p.alpha - p.beta * panel.market()[t])
        .collect();
    let variances = (1..=window.len())
        .map(|k| forecast_variance(fit, k).map(|f| f.value))
        .collect::<Result<_>>()?;
    Ok(WindowResiduals {
        residuals,
        variances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn state(sigma2: f64, residual: f64) -> TerminalState {
        TerminalState { sigma2, residual }
    }

    fn fit_with(params: GarchParams, st: TerminalState, estimation: Range<usize>) -> GarchFit {
        GarchFit {
            params,
            log_likelihood: 0.0,
            initial_log_likelihood: 0.0,
            sigma2_seed: 1.0,
            sigma2_path: vec![st.sigma2],
            terminal_state: st,
            converged: true,
            iterations: 1,
            estimation,
        }
    }

    fn panel(stock: Vec<f64>, market: Vec<f64>) -> AlignedPanel {
        let start = NaiveDate::from_ymd_opt(2015, 3, 2).unwrap();
        let dates = (0..stock.len())
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect();
        AlignedPanel::from_columns(dates, stock, market).unwrap()
    }

    #[test]
    fn constant_variance() {
        let p = GarchParams::new(0.0, 0.0, 0.1, 0.0, 0.0);
        for k in [1, 2, 17] {
            assert_eq!(forecast_from_state(&p, &state(5.0, 3.0), k).unwrap(), 0.1);
        }
    }

    #[test]
    fn hand_recursion() {
        let p = GarchParams::new(0.0, 0.0, 0.1, 0.8, 0.1);
        let s = state(2.0, 0.0);
        assert!((forecast_from_state(&p, &s, 1).unwrap() - 1.7).abs() < 1e-15);
        assert!((forecast_from_state(&p, &s, 2).unwrap() - 1.63).abs() < 1e-15);
        assert!((forecast_from_state(&p, &s, 1000).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn horizon_zero_and_nonstationary_rejected() {
        let p = GarchParams::new(0.0, 0.0, 0.1, 0.8, 0.1);
        assert!(forecast_from_state(&p, &state(1.0, 0.0), 0).is_err());
        let bad = GarchParams::new(0.0, 0.0, 0.1, 0.8, 0.3);
        assert!(matches!(
            forecast_from_state(&bad, &state(1.0, 0.0), 1),
            Err(Error::NonStationaryParams { .. })
        ));
    }

    #[test]
    fn unconverged_fit_cannot_forecast() {
        let mut f = fit_with(GarchParams::new(0.0, 0.0, 0.1, 0.8, 0.1), state(1.0, 0.0), 0..1);
        f.converged = false;
        assert!(matches!(forecast_variance(&f, 1), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn zero_mean_model_keeps_raw_returns() {
        let stock = vec![0.01, -0.02, 0.03, 0.004, -0.01];
        let market = vec![0.5, 0.1, -0.2, 0.3, 0.0];
        let f = fit_with(GarchParams::new(0.0, 0.0, 0.1, 0.0, 0.0), state(1.0, 0.0), 0..2);
        let w = window_residuals(&f, &panel(stock.clone(), market), 2..5).unwrap();
        assert_eq!(w.residuals, stock[2..].to_vec());
    }

    #[test]
    fn perfect_hedge_has_zero_residuals() {
        let r = vec![0.01, -0.02, 0.03, 0.004];
        let f = fit_with(GarchParams::new(0.0, 1.0, 0.1, 0.0, 0.0), state(1.0, 0.0), 0..1);
        let w = window_residuals(&f, &panel(r.clone(), r), 1..4).unwrap();
        assert!(w.residuals.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn three_day_window_by_hand() {
        let stock = vec![0.0, 0.0, 0.02, -0.01, 0.005];
        let market = vec![0.0, 0.0, 0.01, 0.004, -0.003];
        let p = GarchParams::new(0.001, 1.2, 0.2, 0.5, 0.3);
        let f = fit_with(p, state(1.5, -0.5), 0..2);
        let w = window_residuals(&f, &panel(stock, market), 2..5).unwrap();
        // e = r - 0.001 - 1.2 m
        let expected_e = [0.02 - 0.001 - 0.012, -0.01 - 0.001 - 0.0048, 0.005 - 0.001 + 0.0036];
        // one-step 0.2 + 0.75 + 0.075 = 1.025, long run 1.0, decay 0.8
        let expected_v = [1.025, 1.02, 1.016];
        for j in 0..3 {
            assert!((w.residuals[j] - expected_e[j]).abs() < 1e-15);
            assert!((w.variances[j] - expected_v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn window_must_follow_estimation() {
        let r = vec![0.0; 6];
        let f = fit_with(GarchParams::new(0.0, 1.0, 0.1, 0.0, 0.0), state(1.0, 0.0), 0..2);
        assert!(window_residuals(&f, &panel(r.clone(), r.clone()), 3..5).is_err());
        assert!(window_residuals(&f, &panel(r.clone(), r), 2..9).is_err());
    }

    proptest! {
        #[test]
        fn forecasts_converge_monotonically(
            psi0 in 1e-6f64..1.0,
            persistence in 0.0f64..0.999,
            share in 0.0f64..1.0,
            sigma2 in 1e-6f64..10.0,
            residual in -5.0f64..5.0,
        ) {
            let p = GarchParams::new(0.0, 0.0, psi0, persistence * share, persistence * (1.0 - share));
            let s = state(sigma2, residual);
            let v = p.unconditional_variance();
            let mut last = f64::INFINITY;
            for k in 1..200 {
                let gap = (forecast_from_state(&p, &s, k).unwrap() - v).abs();
                prop_assert!(gap <= last * (1.0 + 1e-12) + 1e-300);
                last = gap;
            }
        }
    }
}
