//! Score-based tests for linear and simple null hypotheses, the
//! divergence-based test with parametric-bootstrap calibration, and the
//! chi-square tail probabilities they reference.

use crate::dpd::{
    dpd_divergence, empirical_probabilities, matrix_k, score, IntervalCounts,
};
use crate::error::{Error, Result};
use crate::estimate::{
    fit_mdpde, fit_restricted_mdpde, restricted_covariance, FitOptions, LinearConstraint,
};
use crate::exec::{map_indexed, Parallelism};
use crate::linalg::dot;
use crate::model::{failure_probabilities, ModelParams, StressPlan};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

/// Reference distribution used for the p-value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceDistribution {
    ChiSquare { df: u32 },
    Bootstrap {
        replicates: usize,
        null_estimate: ModelParams,
        failures: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub reference: ReferenceDistribution,
    pub p_value: f64,
    /// Decision per significance level, ordered by level.
    pub reject_at: Vec<(f64, bool)>,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

fn decisions(p_value: f64) -> Vec<(f64, bool)> {
    DEFAULT_ALPHAS
        .iter()
        .map(|&a| (a, p_value < a))
        .collect()
}

// ---- chi-square tail ----------------------------------------------------

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for (j, &c) in COEFFS.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    for n in 1..500 {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper-tail probability of the chi-square distribution via the
/// regularized incomplete gamma function.
pub fn chi_square_tail(x: f64, df: u32) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    let a = df as f64 / 2.0;
    let half = x / 2.0;
    if half < a + 1.0 {
        1.0 - gamma_p_series(a, half)
    } else {
        gamma_q_continued_fraction(a, half)
    }
}

// ---- score tests --------------------------------------------------------

/// Score test of the linear null m.theta = d, evaluated at the restricted
/// estimate; chi-square reference with one degree of freedom.
pub fn rao_statistic(
    counts: &IntervalCounts,
    plan: &StressPlan,
    beta: f64,
    constraint: &LinearConstraint,
) -> Result<TestOutcome> {
    let fit = fit_restricted_mdpde(counts, plan, beta, constraint, &FitOptions::default())?;
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
        });
    }
    let theta = fit.estimate;
    let p_hat = empirical_probabilities(counts);
    let u = score(&theta, plan, p_hat.probs(), beta)?.value;
    let k = matrix_k(&theta, plan, beta)?.value;
    let q = restricted_covariance(&theta, plan, beta, constraint)?.q;
    let qu = dot(q, u);
    let qkq = dot(q, k.mul_vec(q));
    if qkq.abs() < 1e-300 || !qkq.is_finite() {
        return Err(Error::Numerical(
            "degenerate score test: Q^T K Q is not invertible".into(),
        ));
    }
    let statistic = (counts.total() as f64 * qu * qu / qkq).max(0.0);
    let p_value = chi_square_tail(statistic, 1);
    Ok(TestOutcome {
        statistic,
        reference: ReferenceDistribution::ChiSquare { df: 1 },
        p_value,
        reject_at: decisions(p_value),
        beta,
        tau: None,
    })
}

/// Score test of the simple null theta = d0, no estimation involved;
/// chi-square reference with two degrees of freedom.
pub fn rao_simple_statistic(
    counts: &IntervalCounts,
    plan: &StressPlan,
    beta: f64,
    null_params: &ModelParams,
) -> Result<TestOutcome> {
    let p_hat = empirical_probabilities(counts);
    let u = score(null_params, plan, p_hat.probs(), beta)?.value;
    let k = matrix_k(null_params, plan, beta)?.value;
    let k_inv = k.inverse()?;
    let statistic = (counts.total() as f64 * dot(u, k_inv.mul_vec(u))).max(0.0);
    let p_value = chi_square_tail(statistic, 2);
    Ok(TestOutcome {
        statistic,
        reference: ReferenceDistribution::ChiSquare { df: 2 },
        p_value,
        reject_at: decisions(p_value),
        beta,
        tau: None,
    })
}

// ---- divergence-based test ----------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            replicates: 500,
            seed: 0,
            parallelism: Parallelism::Parallel,
        }
    }
}

/// Divergence-based test: 2N times the DPD at tuning parameter `tau`
/// between the cell probabilities at the unrestricted and restricted
/// estimates. The null law is calibrated by a parametric bootstrap at the
/// restricted estimate. `tau` defaults to `beta` when `None`.
pub fn dpd_test_statistic(
    counts: &IntervalCounts,
    plan: &StressPlan,
    beta: f64,
    tau: Option<f64>,
    constraint: &LinearConstraint,
    bootstrap: &BootstrapOptions,
) -> Result<TestOutcome> {
    let tau = tau.unwrap_or(beta);
    if tau <= 0.0 {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let n = counts.total();
    let free = fit_mdpde(counts, plan, beta, &FitOptions::default())?;
    let tied = fit_restricted_mdpde(counts, plan, beta, constraint, &FitOptions::default())?;
    if !free.converged || !tied.converged {
        return Err(Error::NonConvergence {
            iterations: free.iterations.max(tied.iterations),
        });
    }
    let observed = divergence_statistic(&free.estimate, &tied.estimate, plan, tau, n)?;

    // resample under the null estimate, refitting both ways warm-started
    // from the observed fits
    let null_probs = failure_probabilities(&tied.estimate, plan);
    let free_start = FitOptions {
        initial: Some(free.estimate),
        ..FitOptions::default()
    };
    let tied_start = FitOptions {
        initial: Some(tied.estimate),
        ..FitOptions::default()
    };
    let draws: Vec<Option<f64>> = map_indexed(
        bootstrap.replicates as u64,
        bootstrap.parallelism,
        |rep| {
            let mut rng = crate::sim::replication_rng(bootstrap.seed, rep);
            let resample = crate::sim::sample_counts(&null_probs, n, &mut rng);
            let f = fit_mdpde(&resample, plan, beta, &free_start).ok()?;
            let t = fit_restricted_mdpde(&resample, plan, beta, constraint, &tied_start).ok()?;
            if !f.converged || !t.converged {
                return None;
            }
            divergence_statistic(&f.estimate, &t.estimate, plan, tau, n).ok()
        },
    );
    let failures = draws.iter().filter(|d| d.is_none()).count();
    if failures as f64 > 0.05 * bootstrap.replicates as f64 {
        return Err(Error::CalibrationFailed {
            failures,
            total: bootstrap.replicates,
        });
    }
    let successes: Vec<f64> = draws.into_iter().flatten().collect();
    let exceed = successes.iter().filter(|&&t| t >= observed).count();
    let p_value = exceed as f64 / successes.len() as f64;
    Ok(TestOutcome {
        statistic: observed,
        reference: ReferenceDistribution::Bootstrap {
            replicates: bootstrap.replicates,
            null_estimate: tied.estimate,
            failures,
        },
        p_value,
        reject_at: decisions(p_value),
        beta,
        tau: Some(tau),
    })
}

fn divergence_statistic(
    free: &ModelParams,
    tied: &ModelParams,
    plan: &StressPlan,
    tau: f64,
    n: u64,
) -> Result<f64> {
    let pi_free = failure_probabilities(free, plan);
    let pi_tied = failure_probabilities(tied, plan);
    let d = dpd_divergence(pi_free.probs(), pi_tied.probs(), tau)?;
    Ok((2.0 * n as f64 * d).max(0.0))
}
