//! Rank tests, least squares and Granger causality.

mod compare;
mod distributions;
mod granger;
mod mann_whitney;
mod ols;

use thiserror::Error;

pub use compare::{
    compare_cohorts, format_comparison, format_median, segment_change_ratio, segment_tags,
    significance_stars, usable_pairs, ComparisonReport, Metric, Segment, SegmentRow, SegmentTag,
};
pub use distributions::{f_survival, normal_cdf, normal_survival};
pub use granger::{granger_test, GrangerResult};
pub use mann_whitney::{
    exact_u_distribution, mann_whitney_u, mann_whitney_u_with, Alternative, MwMethod, MwMode,
    MwResult,
};
pub use ols::{ols_fit, OlsFit};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("group {0} is empty")]
    EmptyGroup(&'static str),
    #[error("exact Mann-Whitney mode needs tie-free samples with both groups of size <= {max}")]
    ExactUnavailable { max: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("design has {rows} rows and {cols} columns; need at least {} rows", .cols + 1)]
    TooFewRows { rows: usize, cols: usize },
    #[error("design rows ({rows}) and response length ({response}) differ")]
    DimensionMismatch { rows: usize, response: usize },
    #[error("design is rank deficient: column {column} is linearly dependent on earlier columns")]
    RankDeficient { column: usize },
    #[error("series of length {len} too short for {lags} lags; need at least {min_len} observations")]
    SeriesTooShort { len: usize, lags: usize, min_len: usize },
    #[error("series lengths differ ({x} vs {y})")]
    MisalignedSeries { x: usize, y: usize },
    #[error("lag order must be at least 1")]
    ZeroLags,
    #[error("need at least {needed} usable cohort pairs, found {found}")]
    TooFewPairs { needed: usize, found: usize },
}

/// Median of an unsorted slice; mean of the two middle values for even
/// lengths. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 0 { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] })
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[20.0, 1.0, 8.0]), Some(8.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]), Some(2.5));
    }
}
