//! Random-intercept logistic regression fitted by Laplace approximation.
//!
//! The model is `P(y_i = 1) = sigmoid(x_i' beta + u_g(i))` with one latent
//! intercept per group, `u_g ~ N(0, sigma^2)`. For a candidate variance the
//! joint penalized likelihood over `(beta, u)` is maximized by Newton steps
//! that exploit the arrow structure of the Hessian (the u-block is
//! diagonal), giving the Laplace-approximate marginal likelihood
//!
//! `sum_g [ l_g(u_g) - u_g^2 / (2 sigma^2) - 0.5 ln(1 + sigma^2 W_g) ]`
//!
//! where `W_g` is the group's summed Bernoulli weight at the mode. The
//! variance itself is profiled out by golden-section search over
//! `ln(sigma)`, with the boundary fit at `sigma^2 = 0` (plain logistic
//! regression) kept as a candidate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::logistic::{
    assemble_coefficients, bernoulli_loglik, fit_logistic_with, invert_spd, sigmoid, solve_spd,
    validate_design, FitResult, IrlsOptions,
};
use super::StatsError;

#[derive(Debug, Clone, Copy)]
pub struct GlmmOptions {
    /// Cap on golden-section evaluations.
    pub max_outer: usize,
    /// Golden-section tolerance on ln(sigma).
    pub outer_tol: f64,
    /// Inner Newton iteration cap and tolerance.
    pub max_inner: usize,
    pub inner_tol: f64,
    /// Search bracket for ln(sigma).
    pub ln_sigma_bounds: (f64, f64),
    /// Fit with this variance instead of profiling it (0 reproduces the
    /// fixed-effects fit exactly).
    pub fixed_sigma2: Option<f64>,
    /// Below this the variance is reported as a singular fit.
    pub singular_threshold: f64,
}

impl Default for GlmmOptions {
    fn default() -> Self {
        GlmmOptions {
            max_outer: 200,
            outer_tol: 1e-6,
            max_inner: 100,
            inner_tol: 1e-10,
            ln_sigma_bounds: ((1e-4f64).ln(), (50.0f64).ln()),
            fixed_sigma2: None,
            singular_threshold: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmmFit {
    #[serde(flatten)]
    pub fit: FitResult,
    pub random_intercept_variance: f64,
    pub group_count: usize,
    pub r2_marginal: f64,
    pub r2_conditional: f64,
    /// Posterior modes of the group intercepts, indexed by group.
    #[serde(skip)]
    pub random_intercepts: Vec<f64>,
}

struct InnerFit {
    beta: DVector<f64>,
    u: Vec<f64>,
    /// Laplace-approximate marginal log-likelihood.
    laplace_ll: f64,
    converged: bool,
    iterations: usize,
}

/// Fits the random-intercept model. `groups[i]` is the 0-based group index
/// of row `i`; indices must cover `0..group_count`.
pub fn fit_glmm(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    groups: &[usize],
    names: &[String],
) -> Result<GlmmFit, StatsError> {
    fit_glmm_with(x, y, groups, names, GlmmOptions::default())
}

pub fn fit_glmm_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    groups: &[usize],
    names: &[String],
    options: GlmmOptions,
) -> Result<GlmmFit, StatsError> {
    validate_design(x, y)?;
    let n = x.nrows();
    if groups.len() != n {
        return Err(StatsError::InvalidInput(format!(
            "{n} rows but {} group labels",
            groups.len()
        )));
    }
    let group_count = groups.iter().copied().max().map_or(0, |g| g + 1);
    if group_count < 2 {
        return Err(StatsError::InvalidInput(
            "random intercepts need at least 2 groups".into(),
        ));
    }
    if groups.iter().any(|&g| g >= group_count) {
        return Err(StatsError::InvalidInput("group index out of range".into()));
    }

    if let Some(sigma2) = options.fixed_sigma2 {
        return finish(x, y, groups, names, group_count, sigma2, &options);
    }

    // Profile ln(sigma) by golden section, warm-starting each evaluation.
    let (mut lo, mut hi) = options.ln_sigma_bounds;
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut evals = 0usize;
    let mut cache_beta: Option<DVector<f64>> = None;
    let mut cache_u: Option<Vec<f64>> = None;
    let objective = |ln_sigma: f64,
                         beta0: &mut Option<DVector<f64>>,
                         u0: &mut Option<Vec<f64>>,
                         evals: &mut usize|
     -> Result<f64, StatsError> {
        *evals += 1;
        let sigma2 = (2.0 * ln_sigma).exp();
        let inner = inner_mode(x, y, groups, group_count, sigma2, beta0.take(), u0.take(), &options)?;
        *beta0 = Some(inner.beta.clone());
        *u0 = Some(inner.u.clone());
        Ok(inner.laplace_ll)
    };

    let mut a = lo + (1.0 - inv_phi) * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = objective(a, &mut cache_beta, &mut cache_u, &mut evals)?;
    let mut fb = objective(b, &mut cache_beta, &mut cache_u, &mut evals)?;
    while hi - lo > options.outer_tol {
        if evals > options.max_outer {
            return Err(StatsError::NonConvergence(format!(
                "variance profiling exceeded {} evaluations",
                options.max_outer
            )));
        }
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = lo + (1.0 - inv_phi) * (hi - lo);
            fa = objective(a, &mut cache_beta, &mut cache_u, &mut evals)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = objective(b, &mut cache_beta, &mut cache_u, &mut evals)?;
        }
    }
    let ln_sigma_hat = 0.5 * (lo + hi);
    let mut sigma2_hat = (2.0 * ln_sigma_hat).exp();

    // The boundary sigma^2 = 0 competes with the interior optimum; lme4
    // reports such fits as singular.
    let boundary = inner_mode(x, y, groups, group_count, 0.0, None, None, &options)?;
    let interior = inner_mode(
        x,
        y,
        groups,
        group_count,
        sigma2_hat,
        cache_beta,
        cache_u,
        &options,
    )?;
    if boundary.laplace_ll >= interior.laplace_ll {
        sigma2_hat = 0.0;
    }
    finish(x, y, groups, names, group_count, sigma2_hat, &options)
}

fn finish(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    groups: &[usize],
    names: &[String],
    group_count: usize,
    sigma2: f64,
    options: &GlmmOptions,
) -> Result<GlmmFit, StatsError> {
    let inner = inner_mode(x, y, groups, group_count, sigma2, None, None, options)?;
    let mut warnings = Vec::new();
    if sigma2 < options.singular_threshold {
        warnings.push(format!(
            "singular fit: random-intercept variance {sigma2:.3e} is effectively zero"
        ));
    }
    if !inner.converged {
        warnings.push("inner mode search did not converge".into());
    }

    // Wald covariance of beta from the Schur complement of the joint
    // Hessian at the mode.
    let eta = linear_predictor(x, &inner.beta, &inner.u, groups);
    let weights = eta.map(|e| {
        let p = sigmoid(e);
        (p * (1.0 - p)).max(1e-10)
    });
    let covariance = if sigma2 == 0.0 {
        invert_spd(&super::logistic::weighted_gram(x, &weights))?
    } else {
        let blocks = group_blocks(x, &weights, groups, group_count, sigma2);
        invert_spd(&blocks.schur)?
    };
    let coefficients = assemble_coefficients(names, &inner.beta, &covariance);

    let (r2_marginal, r2_conditional) = nakagawa_r2(x, &inner.beta.as_slice().to_vec(), sigma2);

    Ok(GlmmFit {
        fit: FitResult {
            coefficients,
            log_likelihood: inner.laplace_ll,
            converged: inner.converged,
            iterations: inner.iterations,
            warnings,
        },
        random_intercept_variance: sigma2,
        group_count,
        r2_marginal,
        r2_conditional,
        random_intercepts: inner.u,
    })
}

fn linear_predictor(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    u: &[f64],
    groups: &[usize],
) -> DVector<f64> {
    let mut eta = x * beta;
    for (i, &g) in groups.iter().enumerate() {
        eta[i] += u[g];
    }
    eta
}

struct GroupBlocks {
    /// X'WX - M D^-1 M', the effective information for beta.
    schur: DMatrix<f64>,
    /// Per-group diagonal D_g = W_g + 1/sigma^2.
    diag: Vec<f64>,
    /// p x G cross block, column g = sum_{i in g} w_i x_i.
    cross: DMatrix<f64>,
}

fn group_blocks(
    x: &DMatrix<f64>,
    weights: &DVector<f64>,
    groups: &[usize],
    group_count: usize,
    sigma2: f64,
) -> GroupBlocks {
    let p = x.ncols();
    let mut cross = DMatrix::zeros(p, group_count);
    let mut group_weights = vec![0.0; group_count];
    for (i, &g) in groups.iter().enumerate() {
        let w = weights[i];
        group_weights[g] += w;
        for j in 0..p {
            cross[(j, g)] += w * x[(i, j)];
        }
    }
    let diag: Vec<f64> = group_weights.iter().map(|w| w + 1.0 / sigma2).collect();
    let mut schur = super::logistic::weighted_gram(x, weights);
    for g in 0..group_count {
        let col = cross.column(g);
        let scale = 1.0 / diag[g];
        for j in 0..p {
            for k in 0..p {
                schur[(j, k)] -= scale * col[j] * col[k];
            }
        }
    }
    GroupBlocks { schur, diag, cross }
}

/// Joint Newton maximization of the penalized likelihood for fixed
/// sigma^2. With sigma^2 = 0 the intercepts are pinned at zero and this is
/// exactly the IRLS logistic fit.
#[allow(clippy::too_many_arguments)]
fn inner_mode(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    groups: &[usize],
    group_count: usize,
    sigma2: f64,
    beta0: Option<DVector<f64>>,
    u0: Option<Vec<f64>>,
    options: &GlmmOptions,
) -> Result<InnerFit, StatsError> {
    let p = x.ncols();
    if sigma2 == 0.0 {
        let names: Vec<String> = (0..p).map(|j| format!("c{j}")).collect();
        let irls = fit_logistic_with(
            x,
            y,
            &names,
            IrlsOptions {
                tol: options.inner_tol.max(1e-10),
                ..IrlsOptions::default()
            },
        )?;
        let beta = DVector::from_vec(irls.estimates());
        let ll = bernoulli_loglik(&(x * &beta), y);
        return Ok(InnerFit {
            beta,
            u: vec![0.0; group_count],
            laplace_ll: ll,
            converged: irls.converged,
            iterations: irls.iterations,
        });
    }

    let mut beta = beta0.unwrap_or_else(|| DVector::zeros(p));
    let mut u = u0.unwrap_or_else(|| vec![0.0; group_count]);
    let penalty = |u: &[f64]| -> f64 { u.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma2) };
    let mut eta = linear_predictor(x, &beta, &u, groups);
    let mut pen_ll = bernoulli_loglik(&eta, y) - penalty(&u);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=options.max_inner {
        iterations = iter;
        let probs = eta.map(sigmoid);
        let weights = probs.map(|pi| (pi * (1.0 - pi)).max(1e-10));
        let blocks = group_blocks(x, &weights, groups, group_count, sigma2);

        let residual = y - &probs;
        let score_beta = x.transpose() * &residual;
        let mut score_u = vec![0.0; group_count];
        for (i, &g) in groups.iter().enumerate() {
            score_u[g] += residual[i];
        }
        for g in 0..group_count {
            score_u[g] -= u[g] / sigma2;
        }

        // Solve the arrow system via the Schur complement.
        let mut rhs = score_beta.clone();
        for g in 0..group_count {
            let scale = score_u[g] / blocks.diag[g];
            for j in 0..p {
                rhs[j] -= blocks.cross[(j, g)] * scale;
            }
        }
        let delta_beta = solve_spd(&blocks.schur, &rhs)?;
        let mut delta_u = vec![0.0; group_count];
        for g in 0..group_count {
            let mut cross_term = 0.0;
            for j in 0..p {
                cross_term += blocks.cross[(j, g)] * delta_beta[j];
            }
            delta_u[g] = (score_u[g] - cross_term) / blocks.diag[g];
        }

        let mut step = 1.0;
        let (mut new_beta, mut new_u, mut new_eta, mut new_ll);
        loop {
            new_beta = &beta + &delta_beta * step;
            new_u = u
                .iter()
                .zip(&delta_u)
                .map(|(ui, di)| ui + di * step)
                .collect::<Vec<f64>>();
            new_eta = linear_predictor(x, &new_beta, &new_u, groups);
            new_ll = bernoulli_loglik(&new_eta, y) - penalty(&new_u);
            if new_ll + 1e-12 >= pen_ll || step < 1e-8 {
                break;
            }
            step *= 0.5;
        }

        let max_change = (&new_beta - &beta)
            .amax()
            .max(
                new_u
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        beta = new_beta;
        u = new_u;
        eta = new_eta;
        pen_ll = new_ll;
        if max_change < options.inner_tol {
            converged = true;
            break;
        }
    }

    // Laplace correction at the mode.
    let probs = eta.map(sigmoid);
    let weights = probs.map(|pi| (pi * (1.0 - pi)).max(1e-10));
    let mut group_weights = vec![0.0; group_count];
    for (i, &g) in groups.iter().enumerate() {
        group_weights[g] += weights[i];
    }
    let correction: f64 = group_weights
        .iter()
        .map(|w| 0.5 * (1.0 + sigma2 * w).ln())
        .sum();
    Ok(InnerFit {
        beta,
        u,
        laplace_ll: pen_ll - correction,
        converged,
        iterations,
    })
}

/// Variance-partition R^2 for logistic links: the fixed-effects linear
/// predictor's sample variance against itself plus the random-intercept
/// variance plus the logistic residual variance pi^2 / 3.
pub fn nakagawa_r2(x: &DMatrix<f64>, beta: &[f64], sigma2: f64) -> (f64, f64) {
    let beta = DVector::from_vec(beta.to_vec());
    let eta = x * beta;
    let n = eta.len() as f64;
    let mean = eta.sum() / n;
    let var_fixed = if eta.len() > 1 {
        eta.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let residual = std::f64::consts::PI.powi(2) / 3.0;
    let denom = var_fixed + sigma2 + residual;
    (var_fixed / denom, (var_fixed + sigma2) / denom)
}
