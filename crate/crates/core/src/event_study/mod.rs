//! Cross-sectional announcement-volatility multiplier, cumulative abnormal
//! volatility (CAV) and its asymptotic and bootstrap tests.

mod bootstrap;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::WindowResiduals;
use crate::market_data::{OutcomeGroup, WindowSpec};
use crate::stats;

pub use bootstrap::{bootstrap, BootstrapPool, BootstrapResult, PoolCase};
pub use pipeline::{
    bootstrap_seed, run_group_study, CaseData, CaseRatio, CumulativePoint, GroupStudy, StudyConfig,
};

/// Smallest cross-section the multiplier is defined for.
pub const MIN_CASES: usize = 3;

/// Window residuals and forecast variances for `K` cases over `L` days.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    residuals: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl CrossSection {
    pub fn new(rows: Vec<WindowResiduals>) -> Result<Self> {
        let (residuals, variances) = rows.into_iter().map(|w| (w.residuals, w.variances)).unzip();
        Self::from_matrices(residuals, variances)
    }

    /// `residuals[i][t]` and `variances[i][t]` for case `i`, window day `t`.
    pub fn from_matrices(residuals: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let k = residuals.len();
        if k < MIN_CASES {
            return Err(Error::TooFewCases {
                k,
                min: MIN_CASES,
                failures: Vec::new(),
            });
        }
        let len = residuals[0].len();
        if len == 0 {
            return Err(Error::EmptyWindow);
        }
        if variances.len() != k
            || residuals.iter().chain(&variances).any(|row| row.len() != len)
        {
            return Err(Error::DegenerateData("cross-section is not rectangular".into()));
        }
        if variances.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::DegenerateData("forecast variances must be positive".into()));
        }
        if residuals.iter().flatten().any(|e| !e.is_finite()) {
            return Err(Error::DegenerateData("non-finite residual".into()));
        }
        Ok(Self { residuals, variances })
    }

    /// Number of cases `K`.
    pub fn cases(&self) -> usize {
        self.residuals.len()
    }

    /// Window length `L`.
    pub fn days(&self) -> usize {
        self.residuals[0].len()
    }

    /// Cross-sectional mean residual on each day.
    pub fn abnormal_returns(&self) -> Vec<f64> {
        (0..self.days())
            .map(|t| self.residuals.iter().map(|row| row[t]).sum::<f64>() / self.cases() as f64)
            .collect()
    }

    /// Per-case mean of squared residual over forecast variance.
    pub fn variance_ratios(&self) -> Vec<f64> {
        self.residuals
            .iter()
            .zip(&self.variances)
            .map(|(e, v)| {
                e.iter().zip(v).map(|(e, v)| e * e / v).sum::<f64>() / e.len() as f64
            })
            .collect()
    }

    pub fn multiplier_path(&self) -> Vec<f64> {
        (0..self.days())
            .map(|t| multiplier_at(&self.residuals, &self.variances, t))
            .collect()
    }
}

fn multiplier_at(residuals: &[Vec<f64>], variances: &[Vec<f64>], t: usize) -> f64 {
    let k = residuals.len() as f64;
    let sum_e: f64 = residuals.iter().map(|row| row[t]).sum();
    let sum_v: f64 = variances.iter().map(|row| row[t]).sum();
    let total: f64 = residuals
        .iter()
        .zip(variances)
        .map(|(e, v)| {
            let dev = k * e[t] - sum_e;
            dev * dev / (k * (k - 2.0) * v[t] + sum_v)
        })
        .sum();
    total / (k - 1.0)
}

/// Announcement-volatility multiplier on window day `t`:
///
/// ```text
/// M_t = 1/(K-1) * sum_i (K e_i - sum_j e_j)^2 / (K (K-2) v_i + sum_j v_j)
/// ```
///
/// where `e` are window residuals and `v` their forecast variances.
pub fn multiplier(cross_section: &CrossSection, t: usize) -> Result<f64> {
    if t >= cross_section.days() {
        return Err(Error::InvalidWindow(format!(
            "day {t} outside window of {} days",
            cross_section.days()
        )));
    }
    Ok(multiplier_at(&cross_section.residuals, &cross_section.variances, t))
}

/// `sum_t M_t - L`.
pub fn cav(m_hat: &[f64]) -> Result<f64> {
    if m_hat.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(m_hat.iter().sum::<f64>() - m_hat.len() as f64)
}

/// Average abnormal volatility per window day.
pub fn pct_vol(cav: f64, window_len: usize) -> f64 {
    cav / window_len as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Test {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `(K-1) * sum_t M_t` against chi-square with `(K-1) * L` degrees of freedom.
pub fn chi2_test(m_hat: &[f64], cases: usize) -> Result<Chi2Test> {
    if cases < MIN_CASES {
        return Err(Error::TooFewCases {
            k: cases,
            min: MIN_CASES,
            failures: Vec::new(),
        });
    }
    if m_hat.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let k1 = (cases - 1) as f64;
    let statistic = k1 * m_hat.iter().sum::<f64>();
    let df = (cases - 1) * m_hat.len();
    Ok(Chi2Test {
        statistic,
        df,
        p_value: stats::chi2_upper_tail(statistic, df as f64),
    })
}

/// Inference for one outcome group and one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavResult {
    pub group: OutcomeGroup,
    pub window: WindowSpec,
    /// Cases in the cross-section.
    pub k: usize,
    pub m_hat: Vec<f64>,
    pub cav: f64,
    pub pct_vol: f64,
    pub chi2_stat: f64,
    pub chi2_df: usize,
    pub p_asymptotic: f64,
    pub p_boot_upper: Option<f64>,
    pub p_boot_lower: Option<f64>,
}

impl CavResult {
    pub fn from_cross_section(
        group: OutcomeGroup,
        window: WindowSpec,
        cross_section: &CrossSection,
    ) -> Result<Self> {
        let m_hat = cross_section.multiplier_path();
        let cav = cav(&m_hat)?;
        let test = chi2_test(&m_hat, cross_section.cases())?;
        Ok(Self {
            group,
            window,
            k: cross_section.cases(),
            pct_vol: pct_vol(cav, m_hat.len()),
            m_hat,
            cav,
            chi2_stat: test.statistic,
            chi2_df: test.df,
            p_asymptotic: test.p_value,
            p_boot_upper: None,
            p_boot_lower: None,
        })
    }

    pub fn window_len(&self) -> usize {
        self.m_hat.len()
    }

    /// Bootstrap p-value in the direction of the observed effect.
    pub fn p_boot(&self) -> Option<f64> {
        if self.cav >= 0.0 {
            self.p_boot_upper
        } else {
            self.p_boot_lower
        }
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "group",
        "window",
        "k",
        "cav",
        "pct_vol",
        "p_val",
        "p_val_boot",
        "p_boot_upper",
        "p_boot_lower",
    ];

    /// Summary row: group, window label, K, CAV, % vol, p-values.
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        vec![
            self.group.to_string(),
            self.window.to_string(),
            self.k.to_string(),
            format!("{:.3}", self.cav),
            format!("{:.3}", self.pct_vol),
            format!("{:.3}", self.p_asymptotic),
            opt(self.p_boot()),
            opt(self.p_boot_upper),
            opt(self.p_boot_lower),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn section(residuals: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> CrossSection {
        CrossSection::from_matrices(residuals, variances).unwrap()
    }

    /// Direct transcription of the estimator with explicit loops.
    fn multiplier_oracle(e: &[f64], v: &[f64]) -> f64 {
        let k = e.len();
        let mut sum_e = 0.0;
        let mut sum_v = 0.0;
        for i in 0..k {
            sum_e += e[i];
            sum_v += v[i];
        }
        let mut acc = 0.0;
        for i in 0..k {
            let num = (k as f64 * e[i] - sum_e).powi(2);
            let den = (k * (k - 2)) as f64 * v[i] + sum_v;
            acc += num / den;
        }
        acc / (k - 1) as f64
    }

    #[test]
    fn equal_residuals_give_zero() {
        let cs = section(vec![vec![0.3]; 5], vec![vec![1.0]; 5]);
        assert_eq!(multiplier(&cs, 0).unwrap(), 0.0);
    }

    #[test]
    fn three_case_hand_value() {
        let cs = section(vec![vec![1.0], vec![-1.0], vec![0.0]], vec![vec![1.0]; 3]);
        assert_eq!(multiplier(&cs, 0).unwrap(), 1.5);
    }

    #[test]
    fn too_few_cases() {
        assert!(matches!(
            CrossSection::from_matrices(vec![vec![1.0]; 2], vec![vec![1.0]; 2]),
            Err(Error::TooFewCases { k: 2, .. })
        ));
        assert!(matches!(chi2_test(&[1.0], 2), Err(Error::TooFewCases { .. })));
    }

    #[test]
    fn rejects_ragged_or_nonpositive_variances() {
        assert!(CrossSection::from_matrices(
            vec![vec![1.0, 2.0], vec![1.0], vec![0.0, 1.0]],
            vec![vec![1.0, 1.0]; 3]
        )
        .is_err());
        assert!(CrossSection::from_matrices(vec![vec![1.0]; 3], vec![vec![0.0]; 3]).is_err());
    }

    #[test]
    fn cav_examples() {
        assert_eq!(cav(&[1.0; 5]).unwrap(), 0.0);
        assert_eq!(cav(&[2.0; 5]).unwrap(), 5.0);
        assert_eq!(cav(&[1.5, 0.5, 1.0]).unwrap(), 0.0);
        assert!(matches!(cav(&[]), Err(Error::EmptyWindow)));
    }

    #[test]
    fn pct_vol_examples() {
        assert!((pct_vol(-1.010, 5) - -0.202).abs() < 1e-12);
        assert!((pct_vol(2.863, 11) - 0.2603).abs() < 1e-4);
        assert_eq!(pct_vol(0.0, 21), 0.0);
    }

    #[test]
    fn chi2_examples() {
        let t = chi2_test(&[1.0; 5], 10).unwrap();
        assert_eq!(t.statistic, 45.0);
        assert_eq!(t.df, 45);
        assert!(t.p_value > 0.4);
        let t = chi2_test(&[3.0; 5], 10).unwrap();
        assert_eq!(t.statistic, 135.0);
        assert_eq!(t.df, 45);
        assert!(t.p_value < 1e-6);
    }

    #[test]
    fn cav_result_invariants() {
        let cs = section(
            vec![vec![1.0, 0.2], vec![-1.0, 0.1], vec![0.0, -0.4], vec![0.5, 0.0]],
            vec![vec![1.0, 0.5]; 4],
        );
        let r = CavResult::from_cross_section(OutcomeGroup::State, "-1d,+0d".parse().unwrap(), &cs)
            .unwrap();
        assert_eq!(r.chi2_df, 3 * 2);
        assert!(r.m_hat.iter().all(|m| *m >= 0.0));
        assert!((r.cav - (r.m_hat.iter().sum::<f64>() - 2.0)).abs() < 1e-15);
        assert_eq!(r.csv_row()[1], "(-1 day,0 days)");
    }

    fn cross_sections() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (3usize..12, 1usize..6).prop_flat_map(|(k, l)| {
            (
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, l), k),
                prop::collection::vec(prop::collection::vec(0.05f64..4.0, l), k),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_loop_oracle((e, v) in cross_sections()) {
            let cs = section(e.clone(), v.clone());
            for t in 0..cs.days() {
                let col_e: Vec<f64> = e.iter().map(|r| r[t]).collect();
                let col_v: Vec<f64> = v.iter().map(|r| r[t]).collect();
                let m = multiplier(&cs, t).unwrap();
                prop_assert!((m - multiplier_oracle(&col_e, &col_v)).abs() <= 1e-12 * (1.0 + m));
                prop_assert!(m >= 0.0);
            }
        }

        #[test]
        fn permutation_invariant((e, v) in cross_sections(), rot in 0usize..20) {
            let base = section(e.clone(), v.clone()).multiplier_path();
            let k = e.len();
            let mut e2 = e.clone();
            let mut v2 = v.clone();
            e2.rotate_left(rot % k);
            v2.rotate_left(rot % k);
            e2.reverse();
            v2.reverse();
            let other = section(e2, v2).multiplier_path();
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }

        #[test]
        fn scale_invariant((e, v) in cross_sections(), c in 1e-3f64..1e3) {
            let base = section(e.clone(), v.clone()).multiplier_path();
            let e2 = e.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
            let v2 = v.iter().map(|r| r.iter().map(|x| x * c * c).collect()).collect();
            let other = section(e2, v2).multiplier_path();
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }

        #[test]
        fn cav_is_additive(m in prop::collection::vec(0.0f64..5.0, 2..40), cut in 1usize..39) {
            let cut = cut.min(m.len() - 1);
            let whole = cav(&m).unwrap();
            let parts = cav(&m[..cut]).unwrap() + cav(&m[cut..]).unwrap();
            prop_assert!((whole - parts).abs() < 1e-10);
        }

        #[test]
        fn chi2_df_structure(k in 3usize..60, l in 1usize..80) {
            let t = chi2_test(&vec![1.0; l], k).unwrap();
            prop_assert_eq!(t.df, (k - 1) * l);
        }
    }
}
