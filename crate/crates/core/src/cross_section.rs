//! Case-level abnormal volatility and its regression on dispute
//! characteristics.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CaseFailure, Error, Result};
use crate::market_data::{estimation_range, resolve_window, AlignedPanel, EventCase, WindowSpec};
use crate::stats::{sample_variance, t_two_sided};

/// Dispute characteristics for one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseFeatures {
    /// Award as a share of the amount claimed.
    pub sa: f64,
    /// Political instability and corruption index.
    pub pic: f64,
    /// Rule-of-law index.
    pub rl: f64,
    /// 1 if heard under UNCITRAL rules.
    pub ar: f64,
    /// 1 if the investor is from the US.
    pub co: f64,
    /// 1 if the claim is indirect expropriation.
    pub ie: f64,
}

pub const COLUMN_NAMES: [&str; 8] = ["Intercept", "SA", "PIC", "RL", "PIC x RL", "AR", "CO", "IE"];

fn indicator(case: &EventCase, column: &str) -> Result<f64> {
    let v = case.covariate(column).ok_or_else(|| Error::MissingFeature {
        case_id: case.case_id.clone(),
        column: column.to_uppercase(),
    })?;
    if v == 0.0 || v == 1.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!(
            "case {}: {} must be 0 or 1, got {v}",
            case.case_id,
            column.to_uppercase()
        )))
    }
}

fn real(case: &EventCase, column: &str) -> Result<f64> {
    match case.covariate(column) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::InvalidParams(format!(
            "case {}: {} is not finite ({v})",
            case.case_id,
            column.to_uppercase()
        ))),
        None => Err(Error::MissingFeature {
            case_id: case.case_id.clone(),
            column: column.to_uppercase(),
        }),
    }
}

impl CaseFeatures {
    pub fn from_case(case: &EventCase) -> Result<Self> {
        let missing = |column: &str| Error::MissingFeature {
            case_id: case.case_id.clone(),
            column: column.into(),
        };
        let claimed = case.amount_claimed.ok_or_else(|| missing("SA"))?;
        let awarded = case.amount_awarded.ok_or_else(|| missing("SA"))?;
        if claimed <= 0.0 {
            return Err(missing("SA"));
        }
        Ok(Self {
            sa: awarded / claimed,
            pic: real(case, "pic")?,
            rl: real(case, "rl")?,
            ar: indicator(case, "ar")?,
            co: indicator(case, "co")?,
            ie: indicator(case, "ie")?,
        })
    }

    pub fn row(&self) -> [f64; 8] {
        [1.0, self.sa, self.pic, self.rl, self.pic * self.rl, self.ar, self.co, self.ie]
    }
}

/// Log ratio of event-window to pre-event return variance.
pub fn abnormal_volatility(event: &[f64], pre_event: &[f64]) -> Result<f64> {
    for w in [event, pre_event] {
        if w.len() < 2 {
            return Err(Error::TooShortWindow { len: w.len(), min: 2 });
        }
    }
    let pre = sample_variance(pre_event);
    if pre.is_nan() || pre <= 0.0 {
        return Err(Error::ZeroPreEventVariance);
    }
    Ok((sample_variance(event) / pre).ln())
}

/// Abnormal volatility of one case: the announcement window against the
/// `pre_event_length` trading days before it.
pub fn case_abnormal_volatility(
    panel: &AlignedPanel,
    case: &EventCase,
    spec: &WindowSpec,
    pre_event_length: usize,
) -> Result<f64> {
    let window = resolve_window(panel, case.outcome_date, spec)?;
    let pre = estimation_range(panel, case.outcome_date, spec, pre_event_length)?;
    abnormal_volatility(&panel.stock()[window], &panel.stock()[pre])
}

/// Design matrix and response for the regression.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub case_ids: Vec<String>,
    /// Row-major, one row per case.
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    /// Cases left out because a feature was missing.
    pub excluded: Vec<CaseFailure>,
}

/// Builds the design from decided cases with their abnormal volatilities.
///
/// Settled or discontinued cases are skipped. With `strict`, a missing
/// feature is an error; otherwise the case is excluded with a warning.
/// `extra` names additional covariate columns appended after the standard
/// eight.
pub fn build_design(cases: &[(EventCase, f64)], extra: &[String], strict: bool) -> Result<Design> {
    let mut names: Vec<String> = COLUMN_NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(extra.iter().cloned());
    let mut design = Design {
        names,
        case_ids: Vec::new(),
        rows: Vec::new(),
        response: Vec::new(),
        excluded: Vec::new(),
    };
    for (case, av) in cases.iter().filter(|(c, _)| c.outcome_group.is_decided()) {
        let row = CaseFeatures::from_case(case).and_then(|f| {
            let mut row = f.row().to_vec();
            for name in extra {
                row.push(real(case, name)?);
            }
            Ok(row)
        });
        match row {
            Ok(row) => {
                design.case_ids.push(case.case_id.clone());
                design.rows.push(row);
                design.response.push(*av);
            }
            Err(e @ Error::MissingFeature { .. }) if !strict => {
                warn!("excluding case {} from the regression: {e}", case.case_id);
                design.excluded.push(CaseFailure {
                    case_id: case.case_id.clone(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(design)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdErrors {
    #[default]
    Homoskedastic,
    /// White's estimator with the n/(n-k) small-sample factor (HC1).
    Robust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    pub k: usize,
    pub std_errors_kind: StdErrors,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares via Householder QR.
pub fn fit_ols(names: &[String], rows: &[Vec<f64>], response: &[f64], kind: StdErrors) -> Result<RegressionResult> {
    let n = rows.len();
    let k = names.len();
    if rows.iter().any(|r| r.len() != k) || response.len() != n {
        return Err(Error::InvalidParams("design and response dimensions disagree".into()));
    }
    if n <= k {
        return Err(Error::InsufficientObservations { n, k });
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(response);

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    if (0..k).any(|j| r[(j, j)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularDesign)?;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::SingularDesign)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let df = (n - k) as f64;
    let cov = match kind {
        StdErrors::Homoskedastic => &xtx_inv * (rss / df),
        StdErrors::Robust => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = x.row(i).transpose();
                meat += &xi * xi.transpose() * (resid[i] * resid[i]);
            }
            &xtx_inv * meat * &xtx_inv * (n as f64 / df)
        }
    };

    let y_mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df;

    let estimates: Vec<f64> = beta.iter().copied().collect();
    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = estimates.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = t_values.iter().map(|t| t_two_sided(*t, df)).collect();
    Ok(RegressionResult {
        names: names.to_vec(),
        estimates,
        std_errors,
        t_values,
        p_values,
        r2,
        adj_r2,
        n,
        k,
        std_errors_kind: kind,
        residuals: resid.iter().copied().collect(),
    })
}

/// Fits the standard specification on a prepared design.
pub fn fit_design(design: &Design, kind: StdErrors) -> Result<RegressionResult> {
    fit_ols(&design.names, &design.rows, &design.response, kind)
}

pub fn significance_stars(p: f64) -> &'static str {
    match p {
        p if p < 0.01 => "***",
        p if p < 0.05 => "**",
        p if p < 0.10 => "*",
        _ => "",
    }
}

impl RegressionResult {
    pub fn fitted(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().zip(&self.estimates).map(|(x, b)| x * b).sum())
            .collect()
    }
}

impl fmt::Display for RegressionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(9);
        writeln!(
            f,
            "{:<width$} {:>10} {:>10} {:>9} {:>7}",
            "", "Estimate", "Std. Error", "t value", "P-val"
        )?;
        for j in 0..self.k {
            writeln!(
                f,
                "{:<width$} {:>10.3} {:>10.3} {:>9.3} {:>7.3} {}",
                self.names[j],
                self.estimates[j],
                self.std_errors[j],
                self.t_values[j],
                self.p_values[j],
                significance_stars(self.p_values[j])
            )?;
        }
        writeln!(f, "{:<width$} {:>10.4}", "adj R^2", self.adj_r2)?;
        write!(f, "n = {}, k = {}", self.n, self.k)
    }
}
