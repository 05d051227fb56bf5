//! Maximum-likelihood logistic regression via iteratively reweighted least
//! squares, with step-halving for robustness on near-separated data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::wald_p;
use super::StatsError;

/// One fitted coefficient row: estimate, Wald standard error, z and p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions {
    pub max_iter: usize,
    /// Convergence when the largest coefficient update is below this.
    pub tol: f64,
    /// Coefficient magnitude beyond which a still-improving likelihood is
    /// flagged as separation.
    pub separation_bound: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            max_iter: 100,
            tol: 1e-8,
            separation_bound: 30.0,
        }
    }
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Bernoulli log-likelihood of the linear predictor, evaluated stably.
pub(crate) fn bernoulli_loglik(eta: &DVector<f64>, y: &DVector<f64>) -> f64 {
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| yi * e - (e.max(0.0) + (-e.abs()).exp().ln_1p()))
        .sum()
}

pub(crate) fn validate_design(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), StatsError> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(StatsError::InvalidInput(format!(
            "{n} design rows but {} responses",
            y.len()
        )));
    }
    if n <= p {
        return Err(StatsError::InvalidInput(format!(
            "need more observations ({n}) than parameters ({p})"
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(StatsError::InvalidInput("responses must be 0/1".into()));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(StatsError::InvalidInput(
            "responses contain a single class".into(),
        ));
    }
    Ok(())
}

pub(crate) fn solve_spd(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, StatsError> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| StatsError::SingularMatrix("information matrix not invertible".into()))
}

pub(crate) fn invert_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.inverse());
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| StatsError::SingularMatrix("information matrix not invertible".into()))
}

/// Fits `P(y=1) = sigmoid(x' beta)`. The design matrix must already carry
/// its intercept column. Separation is reported through `warnings` with
/// `converged = false` rather than as an error.
pub fn fit_logistic(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<FitResult, StatsError> {
    fit_logistic_with(x, y, names, IrlsOptions::default())
}

pub fn fit_logistic_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    options: IrlsOptions,
) -> Result<FitResult, StatsError> {
    validate_design(x, y)?;
    let (n, p) = x.shape();
    assert_eq!(names.len(), p, "one name per design column");

    let mut beta = DVector::zeros(p);
    let mut eta = DVector::zeros(n);
    let mut loglik = bernoulli_loglik(&eta, y);
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    for iter in 1..=options.max_iter {
        iterations = iter;
        let probs = eta.map(sigmoid);
        let weights = probs.map(|pi| (pi * (1.0 - pi)).max(1e-10));
        let score = x.transpose() * (y - &probs);
        let info = weighted_gram(x, &weights);
        let delta = solve_spd(&info, &score)?;

        // Step-halving keeps the likelihood non-decreasing.
        let mut step = 1.0;
        let mut candidate;
        let mut candidate_ll;
        loop {
            candidate = &beta + &delta * step;
            let candidate_eta = x * &candidate;
            candidate_ll = bernoulli_loglik(&candidate_eta, y);
            if candidate_ll + 1e-12 >= loglik || step < 1e-8 {
                eta = candidate_eta;
                break;
            }
            step *= 0.5;
        }
        let improved = candidate_ll > loglik;
        let max_change = (&candidate - &beta).amax();
        beta = candidate;
        loglik = candidate_ll;

        if beta.amax() > options.separation_bound && improved {
            warnings.push(format!(
                "separation suspected: |coefficient| exceeded {} with improving likelihood",
                options.separation_bound
            ));
            break;
        }
        if max_change < options.tol {
            converged = true;
            break;
        }
    }

    let probs = eta.map(sigmoid);
    let weights = probs.map(|pi| (pi * (1.0 - pi)).max(1e-10));
    let covariance = invert_spd(&weighted_gram(x, &weights))?;
    let coefficients = assemble_coefficients(names, &beta, &covariance);

    Ok(FitResult {
        coefficients,
        log_likelihood: loglik,
        converged,
        iterations,
        warnings,
    })
}

pub(crate) fn weighted_gram(x: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let mut weighted = x.clone();
    for (mut row, &w) in weighted.row_iter_mut().zip(weights.iter()) {
        row *= w;
    }
    x.transpose() * weighted
}

pub(crate) fn assemble_coefficients(
    names: &[String],
    beta: &DVector<f64>,
    covariance: &DMatrix<f64>,
) -> Vec<Coefficient> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = beta[j];
            let std_error = covariance[(j, j)].max(0.0).sqrt();
            let z_value = if std_error > 0.0 { estimate / std_error } else { f64::NAN };
            Coefficient {
                name: name.clone(),
                estimate,
                std_error,
                z_value,
                p_value: if z_value.is_finite() { wald_p(z_value) } else { f64::NAN },
            }
        })
        .collect()
}
