//! Ordinary least squares through a Householder QR factorization.

use serde::Serialize;

use super::StatsError;

/// A column is treated as dependent when the part of it orthogonal to the
/// earlier columns is below this fraction of its own norm.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub observations: usize,
}

/// Least-squares fit of `y` on the row-major `design`. No intercept is added;
/// include a column of ones for one.
pub fn ols_fit(design: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, StatsError> {
    let rows = design.len();
    if rows != y.len() {
        return Err(StatsError::DimensionMismatch { rows, response: y.len() });
    }
    let cols = design.first().map_or(0, Vec::len);
    if design.iter().any(|r| r.len() != cols) {
        return Err(StatsError::DimensionMismatch { rows, response: y.len() });
    }
    if rows < cols + 1 {
        return Err(StatsError::TooFewRows { rows, cols });
    }
    if design.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| design.iter().map(|r| r[j]).collect()).collect();
    let mut qty = y.to_vec();
    let mut r_diag = vec![0.0; cols];

    for j in 0..cols {
        let column_norm = norm(&a[j]);
        let below = norm(&a[j][j..]);
        if column_norm == 0.0 || below <= RANK_TOLERANCE * column_norm {
            return Err(StatsError::RankDeficient { column: j });
        }
        let alpha = if a[j][j] > 0.0 { -below } else { below };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let beta = 2.0 / v_norm_sq;

        for column in a.iter_mut().skip(j) {
            reflect(&v, beta, &mut column[j..]);
        }
        reflect(&v, beta, &mut qty[j..]);
        r_diag[j] = alpha;
    }

    // Back substitution on the upper triangle R (stored in a[col][row]).
    let mut coefficients = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut acc = qty[i];
        for k in (i + 1)..cols {
            acc -= a[k][i] * coefficients[k];
        }
        coefficients[i] = acc / r_diag[i];
    }

    let rss = design
        .iter()
        .zip(y)
        .map(|(row, &obs)| {
            let fitted: f64 = row.iter().zip(&coefficients).map(|(x, b)| x * b).sum();
            (obs - fitted).powi(2)
        })
        .sum();
    Ok(OlsFit { coefficients, rss, observations: rows })
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large magnitudes.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(v: &[f64], beta: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let scale = beta * dot;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= scale * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Normal equations solved by Gaussian elimination with partial pivoting;
    /// an independent route to the same estimate.
    fn normal_equations(design: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let p = design[0].len();
        let mut m = vec![vec![0.0; p + 1]; p];
        for (row, &obs) in design.iter().zip(y) {
            for i in 0..p {
                for j in 0..p {
                    m[i][j] += row[i] * row[j];
                }
                m[i][p] += row[i] * obs;
            }
        }
        for col in 0..p {
            let pivot = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
            m.swap(col, pivot);
            for r in 0..p {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for c in col..=p {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
        (0..p).map(|i| m[i][p] / m[i][i]).collect()
    }

    #[test]
    fn exact_line_has_zero_rss() {
        let design: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 3.0 - 2.0 * i as f64).collect();
        let fit = ols_fit(&design, &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [2.0, 4.0, 9.0, 1.0];
        let design = vec![vec![1.0]; 4];
        let fit = ols_fit(&design, &y).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn random_system_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let design: Vec<Vec<f64>> =
                (0..20).map(|_| vec![1.0, rng.gen_range(-3.0..3.0), rng.gen_range(0.0..10.0)]).collect();
            let y: Vec<f64> = design
                .iter()
                .map(|r| 0.5 + 1.5 * r[1] - 0.25 * r[2] + rng.gen_range(-1.0..1.0))
                .collect();
            let fit = ols_fit(&design, &y).unwrap();
            let oracle = normal_equations(&design, &y);
            for (a, b) in fit.coefficients.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rank_deficiency_names_column() {
        let design: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64, 2.0 * i as f64 + 1.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(ols_fit(&design, &y), Err(StatsError::RankDeficient { column: 2 }));

        let zero: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, 0.0, i as f64]).collect();
        assert_eq!(ols_fit(&zero, &[1.0; 5]), Err(StatsError::RankDeficient { column: 1 }));
    }

    #[test]
    fn shape_errors() {
        let design = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
        assert_eq!(ols_fit(&design, &[1.0, 2.0]), Err(StatsError::TooFewRows { rows: 2, cols: 2 }));
        assert!(matches!(ols_fit(&design, &[1.0]), Err(StatsError::DimensionMismatch { .. })));
    }
}
