//! Correlations, logistic regression (fixed effects and random-intercept
//! GLMM) and fit diagnostics.

mod glmm;
mod logistic;
pub mod special;

pub use glmm::{fit_glmm, fit_glmm_with, nakagawa_r2, GlmmFit, GlmmOptions};
pub use logistic::{fit_logistic, fit_logistic_with, Coefficient, FitResult, IrlsOptions};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    SingularMatrix(String),
}

/// Product-moment correlation with a two-sided p-value from the t-transform
/// on n-2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::InvalidInput("length mismatch".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::InvalidInput(
            "need at least 3 paired observations".into(),
        ));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput(
            "zero variance in at least one input".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        special::t_two_sided(t, df)
    };
    Ok((r, p))
}

/// Rank correlation: Pearson over mid-ranks (ties get averaged ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    pearson(&midranks(x), &midranks(y))
}

/// Average ranks, 1-based, ties averaged.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Variance inflation factors for the non-intercept columns of a design
/// matrix (first column assumed to be the intercept). Values above
/// `VIF_WARN_THRESHOLD` flag multicollinearity.
pub const VIF_WARN_THRESHOLD: f64 = 5.0;

pub fn vif(x: &DMatrix<f64>, names: &[String]) -> Result<Vec<(String, f64)>, StatsError> {
    let p = x.ncols();
    if p < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(p - 1);
    for j in 1..p {
        let target = x.column(j).into_owned();
        let others = x.clone().remove_column(j);
        let gram = others.transpose() * &others;
        let rhs = others.transpose() * &target;
        let coef = logistic::solve_spd(&gram, &rhs)?;
        let fitted = others * coef;
        let mean = target.sum() / target.len() as f64;
        let sst: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
        let sse: f64 = target
            .iter()
            .zip(fitted.iter())
            .map(|(t, f)| (t - f).powi(2))
            .sum();
        let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
        let vif = if r2 >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - r2) };
        out.push((names[j].clone(), vif));
    }
    Ok(out)
}

/// Kolmogorov-Smirnov distance between a sample and U[0,1]; the p-value
/// calibration check uses it.
pub fn ks_distance_uniform(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let hi = (i as f64 + 1.0) / n - v;
            let lo = v - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let (r, _) = pearson(&x, &x).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let (r, _) = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_hand_example() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert!((p - 0.2).abs() < 1e-10);
    }

    #[test]
    fn pearson_invariances() {
        let x = [0.3, 1.7, 2.2, 5.0, 4.1];
        let y = [2.0, 0.5, 3.3, 1.1, 4.4];
        let (rxy, _) = pearson(&x, &y).unwrap();
        let (ryx, _) = pearson(&y, &x).unwrap();
        assert!((rxy - ryx).abs() < 1e-14);
        let scaled: Vec<f64> = x.iter().map(|v| -2.0 * v + 3.0).collect();
        let (rs, _) = pearson(&scaled, &y).unwrap();
        assert!((rs + rxy).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate_input() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn spearman_monotone_and_tied() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let fx: Vec<f64> = x.iter().map(|v| f64::exp(*v)).collect();
        let (rho, _) = spearman(&x, &fx).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = x.iter().rev().cloned().collect();
        let (rho, _) = spearman(&x, &rev).unwrap();
        assert!((rho + 1.0).abs() < 1e-12);
        // Tied case matches the rank-then-pearson oracle: sqrt(0.9).
        let (rho, _) = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn vif_flags_collinear_columns() {
        let n = 50;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64 + 0.001 * ((i * i) as f64).sin(),
        });
        let names: Vec<String> = ["intercept", "a", "b"].iter().map(|s| s.to_string()).collect();
        let factors = vif(&x, &names).unwrap();
        assert_eq!(factors.len(), 2);
        assert!(factors.iter().all(|(_, v)| *v > VIF_WARN_THRESHOLD));
    }

    #[test]
    fn ks_distance_detects_nonuniformity() {
        let uniformish: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance_uniform(&uniformish) < 0.01);
        let clumped: Vec<f64> = (0..1000).map(|i| 0.5 + (i as f64) * 1e-5).collect();
        assert!(ks_distance_uniform(&clumped) > 0.4);
    }

    #[test]
    fn pvalues_are_uniform_under_null() {
        // 1,000 independent replicates with no signal; fixed substream.
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::substream(2024, "stats.pvalue.calibration");
        let mut pvalues = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..40)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let y: Vec<f64> = (0..40)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let (_, p) = pearson(&x, &y).unwrap();
            pvalues.push(p);
        }
        let ks = ks_distance_uniform(&pvalues);
        assert!(ks < 0.05, "KS distance {ks}");
    }
}
