//! Mann-Whitney U test with midranks, an exact small-sample distribution and
//! a tie-corrected normal approximation.

use serde::Serialize;

use super::distributions::{normal_cdf, normal_survival};
use super::{median, StatsError};

/// Largest per-group size for which the exact distribution is used.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// Group a tends to be smaller than group b.
    Less,
    /// Group a tends to be larger than group b.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MwMethod {
    /// Exact when both groups are small and tie-free, otherwise normal.
    #[default]
    Auto,
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMode {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MwResult {
    /// U of group a: pairs with a > b plus half the tied pairs.
    pub u_statistic: f64,
    pub p_value: f64,
    pub median_treatment: f64,
    pub median_control: f64,
    pub n_treatment: usize,
    pub n_control: usize,
    pub mode: MwMode,
    pub alternative: Alternative,
}

pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<MwResult, StatsError> {
    mann_whitney_u_with(a, b, alternative, MwMethod::Auto)
}

pub fn mann_whitney_u_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: MwMethod,
) -> Result<MwResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptyGroup("a"));
    }
    if b.is_empty() {
        return Err(StatsError::EmptyGroup("b"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (n1, n2) = (a.len(), b.len());
    let ranking = rank(a, b);
    let u = ranking.rank_sum_a - (n1 * (n1 + 1)) as f64 / 2.0;

    let small = n1 <= EXACT_MAX && n2 <= EXACT_MAX;
    let mode = match method {
        MwMethod::Auto if small && !ranking.has_ties => MwMode::Exact,
        MwMethod::Auto | MwMethod::NormalApprox => MwMode::NormalApprox,
        MwMethod::Exact if small && !ranking.has_ties => MwMode::Exact,
        MwMethod::Exact => return Err(StatsError::ExactUnavailable { max: EXACT_MAX }),
    };
    let p_value = match mode {
        MwMode::Exact => exact_p(u, n1, n2, alternative),
        MwMode::NormalApprox => normal_p(u, n1, n2, ranking.tie_term, alternative),
    };
    Ok(MwResult {
        u_statistic: u,
        p_value,
        median_treatment: median(a).expect("non-empty"),
        median_control: median(b).expect("non-empty"),
        n_treatment: n1,
        n_control: n2,
        mode,
        alternative,
    })
}

struct Ranking {
    rank_sum_a: f64,
    /// Sum of t^3 - t over tie groups.
    tie_term: f64,
    has_ties: bool,
}

fn rank(a: &[f64], b: &[f64]) -> Ranking {
    let mut pooled: Vec<(f64, bool)> =
        a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let t = (end - start) as f64;
        // Ranks are 1-based: positions start+1 ..= end.
        let midrank = (start + 1 + end) as f64 / 2.0;
        rank_sum_a += midrank * pooled[start..end].iter().filter(|(_, in_a)| *in_a).count() as f64;
        if end - start > 1 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        start = end;
    }
    Ranking { rank_sum_a, tie_term, has_ties }
}

/// Probability mass of U for tie-free samples of sizes (n1, n2), indexed by
/// U = 0 ..= n1*n2.
pub fn exact_u_distribution(n1: usize, n2: usize) -> Vec<f64> {
    // counts[m][n] over u, built with c(m,n,u) = c(m-1,n,u-n) + c(m,n-1,u).
    let max_u = n1 * n2;
    let mut table: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n2 + 1]; n1 + 1];
    for m in 0..=n1 {
        for n in 0..=n2 {
            let mut counts = vec![0.0; m * n + 1];
            if m == 0 || n == 0 {
                counts[0] = 1.0;
            } else {
                for (u, slot) in counts.iter_mut().enumerate() {
                    let keep = table[m][n - 1].get(u).copied().unwrap_or(0.0);
                    let shift =
                        if u >= n { table[m - 1][n].get(u - n).copied().unwrap_or(0.0) } else { 0.0 };
                    *slot = keep + shift;
                }
            }
            table[m][n] = counts;
        }
    }
    let counts = &table[n1][n2];
    let total: f64 = counts.iter().sum();
    debug_assert_eq!(counts.len(), max_u + 1);
    counts.iter().map(|c| c / total).collect()
}

fn exact_p(u: f64, n1: usize, n2: usize, alternative: Alternative) -> f64 {
    let pmf = exact_u_distribution(n1, n2);
    // Tie-free U is an integer.
    let u = u.round() as usize;
    let lower: f64 = pmf[..=u].iter().sum();
    let upper: f64 = pmf[u..].iter().sum();
    let p = match alternative {
        Alternative::Less => lower,
        Alternative::Greater => upper,
        Alternative::TwoSided => 2.0 * lower.min(upper),
    };
    p.min(1.0)
}

fn normal_p(u: f64, n1: usize, n2: usize, tie_term: f64, alternative: Alternative) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let mean = n1f * n2f / 2.0;
    let variance = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // Every value identical: no evidence either way.
        return 1.0;
    }
    let sd = variance.sqrt();
    let p = match alternative {
        Alternative::TwoSided => {
            let distance = ((u - mean).abs() - 0.5).max(0.0);
            2.0 * normal_survival(distance / sd)
        }
        Alternative::Less => normal_cdf((u - mean + 0.5) / sd),
        Alternative::Greater => normal_survival((u - mean - 0.5) / sd),
    };
    p.clamp(0.0, 1.0)
}
