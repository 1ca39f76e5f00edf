//! Granger causality via nested least-squares models and an F-test.
//!
//! Unrestricted model for t = n .. T-1:
//!   y(t) = C + sum_i A_i y(t-i) + sum_j B_j x(t-j) + e(t)
//! The restricted model drops the x lags.

use serde::Serialize;

use super::distributions::f_survival;
use super::ols::ols_fit;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerResult {
    pub lags: usize,
    pub f_statistic: f64,
    pub p_value: f64,
    /// (numerator, denominator) degrees of freedom.
    pub df: (usize, usize),
    /// A_1..A_n, coefficients of lagged y.
    pub y_lag_coefficients: Vec<f64>,
    /// B_1..B_n, coefficients of lagged x.
    pub x_lag_coefficients: Vec<f64>,
    pub intercept: f64,
    pub residual_variance: f64,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
    pub observations: usize,
    /// Lagged x added no independent column (e.g. x constant); reported as
    /// non-causal with B = 0.
    pub degenerate_regressor: bool,
}

/// Minimum series length for `lags`: T - n usable rows must be >= 2n + 2.
pub fn minimum_length(lags: usize) -> usize {
    3 * lags + 2
}

/// Tests whether lags of `x` help predict `y`.
pub fn granger_test(x: &[f64], y: &[f64], lags: usize) -> Result<GrangerResult, StatsError> {
    if lags == 0 {
        return Err(StatsError::ZeroLags);
    }
    if x.len() != y.len() {
        return Err(StatsError::MisalignedSeries { x: x.len(), y: y.len() });
    }
    let len = y.len();
    if len < minimum_length(lags) {
        return Err(StatsError::SeriesTooShort { len, lags, min_len: minimum_length(lags) });
    }

    let response: Vec<f64> = y[lags..].to_vec();
    let restricted: Vec<Vec<f64>> = (lags..len)
        .map(|t| {
            let mut row = Vec::with_capacity(1 + lags);
            row.push(1.0);
            row.extend((1..=lags).map(|i| y[t - i]));
            row
        })
        .collect();
    let unrestricted: Vec<Vec<f64>> = restricted
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let t = k + lags;
            let mut row = row.clone();
            row.extend((1..=lags).map(|j| x[t - j]));
            row
        })
        .collect();

    let observations = response.len();
    let df_den = observations - 2 * lags - 1;
    let fit_r = ols_fit(&restricted, &response)?;

    match ols_fit(&unrestricted, &response) {
        Ok(fit_u) => {
            let rss_r = fit_r.rss;
            let rss_u = fit_u.rss;
            let gain = (rss_r - rss_u).max(0.0);
            let f_statistic = if rss_u > 0.0 {
                (gain / lags as f64) / (rss_u / df_den as f64)
            } else if gain > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let c = &fit_u.coefficients;
            Ok(GrangerResult {
                lags,
                f_statistic,
                p_value: f_survival(f_statistic, lags as f64, df_den as f64),
                df: (lags, df_den),
                intercept: c[0],
                y_lag_coefficients: c[1..=lags].to_vec(),
                x_lag_coefficients: c[lags + 1..].to_vec(),
                residual_variance: rss_u / df_den as f64,
                rss_restricted: rss_r,
                rss_unrestricted: rss_u,
                observations,
                degenerate_regressor: false,
            })
        }
        Err(StatsError::RankDeficient { column }) if column > lags => {
            let c = &fit_r.coefficients;
            Ok(GrangerResult {
                lags,
                f_statistic: 0.0,
                p_value: 1.0,
                df: (lags, df_den),
                intercept: c[0],
                y_lag_coefficients: c[1..].to_vec(),
                x_lag_coefficients: vec![0.0; lags],
                residual_variance: fit_r.rss / df_den as f64,
                rss_restricted: fit_r.rss,
                rss_unrestricted: fit_r.rss,
                observations,
                degenerate_regressor: true,
            })
        }
        Err(e) => Err(e),
    }
}
