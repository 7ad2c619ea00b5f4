//! Market model with GARCH(1,1) errors, estimated jointly by Gaussian
//! maximum likelihood:
//!
//! ```text
//! r_t      = alpha + beta * m_t + e_t,      e_t ~ N(0, s2_t)
//! s2_t     = psi0 + psi1 * s2_{t-1} + psi2 * e_{t-1}^2
//! ```
//!
//! The pre-sample variance and squared residual are both set to the
//! sample variance of the mean-equation residuals, so every entry of the
//! variance path satisfies the recursion.

mod forecast;
pub mod optimizer;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::AlignedPanel;
use optimizer::{BfgsSettings, Objective};

pub use forecast::{forecast_from_state, forecast_variance, window_residuals, VarianceForecast, WindowResiduals};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mean-equation and variance-equation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    /// Mean intercept.
    pub alpha: f64,
    /// Market loading.
    pub beta: f64,
    /// Variance intercept.
    pub psi0: f64,
    /// Weight on the lagged conditional variance.
    pub psi1: f64,
    /// Weight on the lagged squared residual.
    pub psi2: f64,
}

impl GarchParams {
    pub fn new(alpha: f64, beta: f64, psi0: f64, psi1: f64, psi2: f64) -> Self {
        Self { alpha, beta, psi0, psi1, psi2 }
    }

    pub fn persistence(&self) -> f64 {
        self.psi1 + self.psi2
    }

    /// `psi0 / (1 - psi1 - psi2)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.psi0 / (1.0 - self.persistence())
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.psi0, self.psi1, self.psi2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if self.psi0 <= 0.0 {
            return Err(Error::InvalidParams(format!("psi0 must be positive, got {}", self.psi0)));
        }
        if self.psi1 < 0.0 || self.psi2 < 0.0 {
            return Err(Error::InvalidParams("psi1 and psi2 must be non-negative".into()));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::NonStationaryParams {
                persistence: self.persistence(),
            });
        }
        Ok(())
    }
}

/// Last conditional variance and residual of the estimation sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalState {
    pub sigma2: f64,
    pub residual: f64,
}

/// Residuals and conditional variances of a sample under fixed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub residuals: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Pre-sample variance and squared residual.
    pub seed: f64,
    pub log_likelihood: f64,
}

impl Filtered {
    pub fn terminal_state(&self) -> TerminalState {
        TerminalState {
            sigma2: *self.sigma2.last().expect("non-empty sample"),
            residual: *self.residuals.last().expect("non-empty sample"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    pub log_likelihood: f64,
    /// Log-likelihood at the starting values.
    pub initial_log_likelihood: f64,
    pub sigma2_seed: f64,
    pub sigma2_path: Vec<f64>,
    pub terminal_state: TerminalState,
    pub converged: bool,
    pub iterations: usize,
    /// Panel indices the model was estimated on.
    pub estimation: Range<usize>,
}

impl GarchFit {
    pub fn n_obs(&self) -> usize {
        self.sigma2_path.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Smallest sample accepted by `fit`.
    pub min_obs: usize,
    pub max_iterations: usize,
    /// Relative log-likelihood change treated as convergence.
    pub tolerance: f64,
    /// Return `NonConvergence` instead of an unconverged fit.
    pub require_convergence: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            min_obs: 100,
            max_iterations: 500,
            tolerance: 1e-8,
            require_convergence: true,
        }
    }
}

fn check_sample(stock: &[f64], market: &[f64]) -> Result<()> {
    if stock.len() != market.len() {
        return Err(Error::DegenerateData(format!(
            "stock has {} observations, market {}",
            stock.len(),
            market.len()
        )));
    }
    if stock.is_empty() {
        return Err(Error::TooShortWindow { len: 0, min: 1 });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance of the mean-equation residuals (denominator n).
fn residual_seed(stock: &[f64], market: &[f64], alpha: f64, beta: f64) -> f64 {
    let e: Vec<f64> = stock
        .iter()
        .zip(market)
        .map(|(r, m)| r - alpha - beta * m)
        .collect();
    let mu = mean(&e);
    e.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / e.len() as f64
}

/// Gaussian log-likelihood and its gradient with respect to
/// `[alpha, beta, psi0, psi1, psi2]`. Parameters are not validated here.
fn loglik_and_gradient(
    p: &GarchParams,
    stock: &[f64],
    market: &[f64],
    path: Option<&mut Vec<f64>>,
) -> Result<(f64, [f64; 5])> {
    let n = stock.len() as f64;
    let e: Vec<f64> = stock
        .iter()
        .zip(market)
        .map(|(r, m)| r - p.alpha - p.beta * m)
        .collect();
    let e_bar = mean(&e);
    let m_bar = mean(market);
    let seed = e.iter().map(|v| (v - e_bar).powi(2)).sum::<f64>() / n;
    let dseed_dbeta = -2.0 / n
        * e.iter()
            .zip(market)
            .map(|(ei, mi)| (ei - e_bar) * (mi - m_bar))
            .sum::<f64>();

    let mut prev_s2 = seed;
    let mut prev_e2 = seed;
    let mut d_prev_s2 = [0.0, dseed_dbeta, 0.0, 0.0, 0.0];
    let mut d_prev_e2 = d_prev_s2;
    let mut ll = 0.0;
    let mut grad = [0.0; 5];
    let mut path = path;
    if let Some(v) = path.as_deref_mut() {
        v.clear();
        v.reserve(e.len());
    }

    for (t, (&et, &mt)) in e.iter().zip(market).enumerate() {
        let s2 = p.psi0 + p.psi1 * prev_s2 + p.psi2 * prev_e2;
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::NonPositiveVariance { index: t, value: s2 });
        }
        let mut ds2 = [0.0, 0.0, 1.0, prev_s2, prev_e2];
        for j in 0..5 {
            ds2[j] += p.psi1 * d_prev_s2[j] + p.psi2 * d_prev_e2[j];
        }
        let z2 = et * et / s2;
        ll -= 0.5 * (LN_2PI + s2.ln() + z2);

        let w = -0.5 * (1.0 - z2) / s2;
        let de = [-1.0, -mt, 0.0, 0.0, 0.0];
        for j in 0..5 {
            grad[j] += w * ds2[j] - et / s2 * de[j];
        }

        if let Some(v) = path.as_deref_mut() {
            v.push(s2);
        }
        prev_s2 = s2;
        prev_e2 = et * et;
        d_prev_s2 = ds2;
        for j in 0..5 {
            d_prev_e2[j] = 2.0 * et * de[j];
        }
    }
    Ok((ll, grad))
}

/// Gaussian log-likelihood of the market model with GARCH(1,1) errors.
pub fn log_likelihood(params: &GarchParams, stock: &[f64], market: &[f64]) -> Result<f64> {
    params.validate()?;
    check_sample(stock, market)?;
    loglik_and_gradient(params, stock, market, None).map(|(ll, _)| ll)
}

/// Log-likelihood with an explicit pre-sample variance `seed`.
pub fn log_likelihood_with_seed(
    params: &GarchParams,
    stock: &[f64],
    market: &[f64],
    seed: f64,
) -> Result<f64> {
    params.validate()?;
    check_sample(stock, market)?;
    let mut prev_s2 = seed;
    let mut prev_e2 = seed;
    let mut ll = 0.0;
    for (t, (r, m)) in stock.iter().zip(market).enumerate() {
        let e = r - params.alpha - params.beta * m;
        let s2 = params.psi0 + params.psi1 * prev_s2 + params.psi2 * prev_e2;
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::NonPositiveVariance { index: t, value: s2 });
        }
        ll -= 0.5 * (LN_2PI + s2.ln() + e * e / s2);
        prev_s2 = s2;
        prev_e2 = e * e;
    }
    Ok(ll)
}

/// Runs the variance recursion over a sample with fixed parameters.
pub fn filter(params: &GarchParams, stock: &[f64], market: &[f64]) -> Result<Filtered> {
    params.validate()?;
    check_sample(stock, market)?;
    let mut sigma2 = Vec::new();
    let (log_likelihood, _) = loglik_and_gradient(params, stock, market, Some(&mut sigma2))?;
    let residuals = stock
        .iter()
        .zip(market)
        .map(|(r, m)| r - params.alpha - params.beta * m)
        .collect();
    Ok(Filtered {
        residuals,
        sigma2,
        seed: residual_seed(stock, market, params.alpha, params.beta),
        log_likelihood,
    })
}

/// Starting values: OLS mean equation, psi1 = 0.85, psi2 = 0.10 and psi0
/// by variance targeting.
pub fn initial_params(stock: &[f64], market: &[f64]) -> GarchParams {
    let (my, mx) = (mean(stock), mean(market));
    let sxx: f64 = market.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = market
        .iter()
        .zip(stock)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let alpha = my - beta * mx;
    let (psi1, psi2) = (0.85, 0.10);
    let s2 = residual_seed(stock, market, alpha, beta);
    GarchParams::new(alpha, beta, s2 * (1.0 - psi1 - psi2), psi1, psi2)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Negative mean log-likelihood over the unconstrained coordinates
/// `[alpha, beta, ln psi0, logit(psi1 + psi2), logit(psi1 / (psi1 + psi2))]`.
struct Transformed<'a> {
    stock: &'a [f64],
    market: &'a [f64],
}

impl Transformed<'_> {
    fn to_params(u: &[f64]) -> GarchParams {
        let persistence = logistic(u[3]);
        let share = logistic(u[4]);
        GarchParams::new(
            u[0],
            u[1],
            u[2].exp(),
            persistence * share,
            persistence * (1.0 - share),
        )
    }

    fn from_params(p: &GarchParams) -> Vec<f64> {
        let persistence = p.persistence();
        vec![
            p.alpha,
            p.beta,
            p.psi0.ln(),
            logit(persistence),
            logit(p.psi1 / persistence),
        ]
    }
}

impl Objective for Transformed<'_> {
    fn dim(&self) -> usize {
        5
    }

    fn eval(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        if u.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let p = Self::to_params(u);
        if p.validate().is_err() {
            return None;
        }
        let (ll, g) = loglik_and_gradient(&p, self.stock, self.market, None).ok()?;
        if !ll.is_finite() {
            return None;
        }
        let persistence = logistic(u[3]);
        let share = logistic(u[4]);
        let dp = persistence * (1.0 - persistence);
        let ds = share * (1.0 - share);
        let n = self.stock.len() as f64;
        let grad = vec![
            g[0],
            g[1],
            g[2] * p.psi0,
            (g[3] * share + g[4] * (1.0 - share)) * dp,
            (g[3] - g[4]) * persistence * ds,
        ];
        Some((-ll / n, grad.into_iter().map(|v| -v / n).collect()))
    }
}

/// Estimates the model on `stock`/`market` by maximum likelihood.
///
/// Data are rescaled internally so the stock return has unit standard
/// deviation; estimates are mapped back to the original units.
pub fn fit(stock: &[f64], market: &[f64], config: &FitConfig) -> Result<GarchFit> {
    check_sample(stock, market)?;
    if stock.len() < config.min_obs.max(2) {
        return Err(Error::TooShortWindow {
            len: stock.len(),
            min: config.min_obs.max(2),
        });
    }
    let mu = mean(stock);
    let variance = stock.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / stock.len() as f64;
    let mean_square = stock.iter().map(|r| r * r).sum::<f64>() / stock.len() as f64;
    if variance.is_nan() || variance <= 1e-20 * mean_square {
        return Err(Error::DegenerateData("stock returns have zero variance".into()));
    }
    let start = initial_params(stock, market);
    if !(start.psi0 > 1e-20 * variance && start.psi0.is_finite()) {
        return Err(Error::DegenerateData("market-model residuals have zero variance".into()));
    }

    let scale = 1.0 / variance.sqrt();
    let ys: Vec<f64> = stock.iter().map(|v| v * scale).collect();
    let xs: Vec<f64> = market.iter().map(|v| v * scale).collect();
    let objective = Transformed { stock: &ys, market: &xs };
    let start_scaled = initial_params(&ys, &xs);

    let settings = BfgsSettings {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        ..BfgsSettings::default()
    };
    let outcome = optimizer::minimize(&objective, &Transformed::from_params(&start_scaled), settings)
        .ok_or_else(|| Error::DegenerateData("likelihood undefined at starting values".into()))?;

    let mut params = Transformed::to_params(&outcome.x);
    params.alpha /= scale;
    params.psi0 /= scale * scale;

    let initial_log_likelihood = log_likelihood(&start, stock, market)?;
    let mut filtered = filter(&params, stock, market)?;
    let mut converged = outcome.converged;
    if filtered.log_likelihood < initial_log_likelihood {
        // Only possible through rounding in the unit change; keep the start.
        params = start;
        filtered = filter(&params, stock, market)?;
        converged = false;
    }
    if config.require_convergence && !converged {
        return Err(Error::NonConvergence {
            iterations: outcome.iterations,
        });
    }
    Ok(GarchFit {
        params,
        log_likelihood: filtered.log_likelihood,
        initial_log_likelihood,
        sigma2_seed: filtered.seed,
        terminal_state: filtered.terminal_state(),
        sigma2_path: filtered.sigma2,
        converged,
        iterations: outcome.iterations,
        estimation: 0..stock.len(),
    })
}

/// Fits the model on a contiguous range of panel rows.
pub fn fit_panel(panel: &AlignedPanel, range: Range<usize>, config: &FitConfig) -> Result<GarchFit> {
    if range.end > panel.len() || range.start >= range.end {
        return Err(Error::InvalidWindow(format!(
            "estimation range {range:?} outside panel of {} rows",
            panel.len()
        )));
    }
    let mut fit = fit(&panel.stock()[range.clone()], &panel.market()[range.clone()], config)?;
    fit.estimation = range;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect::<Vec<f64>>()
    }

    fn garch_sample(p: &GarchParams, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let market: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.01 * z
            })
            .collect();
        let mut s2 = p.unconditional_variance();
        let mut e_prev = 0.0f64;
        let mut stock = Vec::with_capacity(n);
        for (t, m) in market.iter().enumerate() {
            if t > 0 {
                s2 = p.psi0 + p.psi1 * s2 + p.psi2 * e_prev * e_prev;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            e_prev = s2.sqrt() * z;
            stock.push(p.alpha + p.beta * m + e_prev);
        }
        (stock, market)
    }

    #[test]
    fn single_observation_closed_forms() {
        let unit = GarchParams::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let ll = log_likelihood_with_seed(&unit, &[0.0], &[0.0], 1.0).unwrap();
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);
        let ll = log_likelihood_with_seed(&unit, &[1.0], &[0.0], 1.0).unwrap();
        assert!((ll + 1.418_938_533_204_672_7).abs() < 1e-12);
        // the default seed cannot matter when psi1 = psi2 = 0
        let ll = log_likelihood(&unit, &[1.0], &[0.0]).unwrap();
        assert!((ll + 1.418_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn iid_likelihood_when_no_dynamics() {
        let stock = gaussian(50, 0.3, 1);
        let market = gaussian(50, 0.2, 2);
        let p = GarchParams::new(0.01, 0.5, 0.07, 0.0, 0.0);
        let ll = log_likelihood(&p, &stock, &market).unwrap();
        // closed-form i.i.d. Gaussian log-likelihood
        let oracle: f64 = stock
            .iter()
            .zip(&market)
            .map(|(r, m)| {
                let e = r - 0.01 - 0.5 * m;
                -0.5 * ((2.0 * std::f64::consts::PI * 0.07).ln() + e * e / 0.07)
            })
            .sum();
        assert!((ll - oracle).abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid_params() {
        let s = [0.1, -0.1];
        assert!(matches!(
            log_likelihood(&GarchParams::new(0.0, 0.0, 0.1, 0.6, 0.4), &s, &s),
            Err(Error::NonStationaryParams { .. })
        ));
        assert!(matches!(
            log_likelihood(&GarchParams::new(0.0, 0.0, 0.0, 0.5, 0.4), &s, &s),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            log_likelihood(&GarchParams::new(0.0, 0.0, 0.1, -0.1, 0.4), &s, &s),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = GarchParams::new(0.001, 0.8, 2e-5, 0.85, 0.1);
        let (stock, market) = garch_sample(&p, 300, 7);
        let at = GarchParams::new(0.0005, 0.9, 3e-5, 0.8, 0.12);
        let (_, g) = loglik_and_gradient(&at, &stock, &market, None).unwrap();
        let base = [at.alpha, at.beta, at.psi0, at.psi1, at.psi2];
        for j in 0..5 {
            let h = 1e-6 * base[j].abs().max(1e-6);
            let mut up = base;
            let mut dn = base;
            up[j] += h;
            dn[j] -= h;
            let f = |v: [f64; 5]| {
                let q = GarchParams::new(v[0], v[1], v[2], v[3], v[4]);
                loglik_and_gradient(&q, &stock, &market, None).unwrap().0
            };
            let fd = (f(up) - f(dn)) / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0),
                "param {j}: analytic {} vs numeric {fd}",
                g[j]
            );
        }
    }

    #[test]
    fn sigma2_path_satisfies_recursion() {
        let p = GarchParams::new(0.0, 1.0, 1e-5, 0.9, 0.05);
        let (stock, market) = garch_sample(&p, 400, 3);
        let fit = fit(&stock, &market, &FitConfig::default()).unwrap();
        let q = fit.params;
        let mut prev_s2 = fit.sigma2_seed;
        let mut prev_e2 = fit.sigma2_seed;
        for (t, s2) in fit.sigma2_path.iter().enumerate() {
            let expected = q.psi0 + q.psi1 * prev_s2 + q.psi2 * prev_e2;
            assert_eq!(*s2, expected, "entry {t}");
            let e = stock[t] - q.alpha - q.beta * market[t];
            prev_s2 = *s2;
            prev_e2 = e * e;
        }
        assert!(fit.log_likelihood >= fit.initial_log_likelihood);
    }

    #[test]
    fn constant_returns_are_degenerate() {
        let stock = vec![0.01; 200];
        let market = gaussian(200, 0.01, 9);
        assert!(matches!(
            fit(&stock, &market, &FitConfig::default()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn short_sample_rejected() {
        let s = gaussian(50, 0.01, 1);
        assert!(matches!(
            fit(&s, &s, &FitConfig::default()),
            Err(Error::TooShortWindow { len: 50, min: 100 })
        ));
    }

    #[test]
    fn iid_input_targets_sample_variance() {
        for seed in 0..5 {
            let stock = gaussian(1000, 0.015, 100 + seed);
            let market = gaussian(1000, 0.01, 200 + seed);
            let fit = fit(&stock, &market, &FitConfig::default()).unwrap();
            let e: Vec<f64> = stock
                .iter()
                .zip(&market)
                .map(|(r, m)| r - fit.params.alpha - fit.params.beta * m)
                .collect();
            let mu = mean(&e);
            let sample = e.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
            let implied = fit.params.unconditional_variance();
            assert!(
                (implied / sample - 1.0).abs() < 0.10,
                "seed {seed}: implied {implied} sample {sample}"
            );
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let p = GarchParams::new(0.0002, 1.1, 1e-5, 0.88, 0.08);
        let (stock, market) = garch_sample(&p, 500, 11);
        let a = fit(&stock, &market, &FitConfig::default()).unwrap();
        let b = fit(&stock, &market, &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_relation() {
        let p = GarchParams::new(0.0003, 0.9, 2e-5, 0.87, 0.09);
        let (stock, market) = garch_sample(&p, 800, 21);
        let base = fit(&stock, &market, &FitConfig::default()).unwrap();
        for c in [0.1, 3.0, 250.0] {
            let s: Vec<f64> = stock.iter().map(|v| v * c).collect();
            let m: Vec<f64> = market.iter().map(|v| v * c).collect();
            let scaled = fit(&s, &m, &FitConfig::default()).unwrap();
            let q = scaled.params;
            assert!((q.psi0 / (c * c) / base.params.psi0 - 1.0).abs() < 1e-4);
            assert!((q.psi1 - base.params.psi1).abs() < 1e-4);
            assert!((q.psi2 - base.params.psi2).abs() < 1e-4);
            assert!((q.beta - base.params.beta).abs() < 1e-4);
            let shift = -(stock.len() as f64) * c.ln();
            assert!((scaled.log_likelihood - base.log_likelihood - shift).abs() < 1e-5);
        }
    }

    #[test]
    fn unconverged_fit_reported() {
        let p = GarchParams::new(0.0, 1.0, 1e-5, 0.9, 0.05);
        let (stock, market) = garch_sample(&p, 300, 5);
        let strict = FitConfig {
            max_iterations: 1,
            ..FitConfig::default()
        };
        assert!(matches!(
            fit(&stock, &market, &strict),
            Err(Error::NonConvergence { .. })
        ));
        let lenient = FitConfig {
            require_convergence: false,
            ..strict
        };
        let f = fit(&stock, &market, &lenient).unwrap();
        assert!(!f.converged);
    }

    #[test]
    fn fit_serializes_to_json() {
        let p = GarchParams::new(0.0, 1.0, 1e-5, 0.9, 0.05);
        let (stock, market) = garch_sample(&p, 300, 6);
        let f = fit(&stock, &market, &FitConfig::default()).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: GarchFit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert!(text.contains("\"terminal_state\""));
    }
}
