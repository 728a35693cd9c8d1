//! Unconstrained and linearly restricted minimum DPD estimation with
//! asymptotic covariance matrices.
//!
//! The loss is minimized over (log theta0, theta1), so the positivity of
//! theta0 holds by construction. Restricted fits parametrize the affine
//! line m.theta = d explicitly by its free coordinate, which makes the
//! constraint exact; the Lagrange stationarity condition is then checked
//! as a post-condition by the callers that need it.

use crate::dpd::{dpd_divergence, empirical_probabilities, matrix_j, matrix_k, score, IntervalCounts};
use crate::error::{Error, Result, Warning};
use crate::linalg::{dot, Mat2, Vec2};
use crate::model::{failure_probabilities, ModelParams, StressPlan};
use crate::optim::{minimize, SimplexOptions, SimplexResult};
use serde::{Deserialize, Serialize};

/// The affine restriction m.theta = d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    m: Vec2,
    d: f64,
}

impl LinearConstraint {
    pub fn new(m: Vec2, d: f64) -> Result<Self> {
        if m[0] == 0.0 && m[1] == 0.0 {
            return Err(Error::InvalidInput("constraint vector must be nonzero".into()));
        }
        if !m[0].is_finite() || !m[1].is_finite() || !d.is_finite() {
            return Err(Error::InvalidInput("constraint must be finite".into()));
        }
        Ok(LinearConstraint { m, d })
    }

    pub fn m(&self) -> Vec2 {
        self.m
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn residual(&self, params: &ModelParams) -> f64 {
        dot(self.m, params.as_vec()) - self.d
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Warm start; when set, the multi-start grid is skipped.
    pub initial: Option<ModelParams>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            initial: None,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: ModelParams,
    pub beta: f64,
    pub loss: f64,
    /// Asymptotic covariance of sqrt(N) * (estimator - truth), plug-in at
    /// the fitted point.
    pub covariance: Option<Mat2>,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<Warning>,
}

const GRID_LOG_T0: [f64; 5] = [-11.512925464970229, -8.635, -5.756, -2.878, 0.0]; // ln 1e-5 .. ln 1
const GRID_T1: [f64; 5] = [-0.2, -0.1, 0.0, 0.1, 0.2];

fn simplex_options(max_iterations: usize) -> SimplexOptions {
    SimplexOptions {
        loss_tol: 1e-12,
        diameter_tol: 1e-10,
        max_iterations,
        initial_step: 0.25,
    }
}

// The restricted problem is one-dimensional in the free coordinate, and
// the stationarity residual orthogonal to m inherits a 1/theta0 factor
// when the free coordinate is log theta0, so the simplex is driven much
// tighter than in the unconstrained fit.
fn restricted_simplex_options(max_iterations: usize) -> SimplexOptions {
    SimplexOptions {
        loss_tol: 1e-15,
        diameter_tol: 1e-13,
        max_iterations,
        initial_step: 0.25,
    }
}

fn boundary_warning(counts: &IntervalCounts) -> Option<Warning> {
    let n = counts.total();
    let first = counts.counts()[0];
    let last = *counts.counts().last().unwrap();
    if first == n || last == n {
        Some(Warning::BoundaryData)
    } else {
        None
    }
}

/// Minimum DPD estimator over the full parameter space. At beta = 0 this
/// is the maximum likelihood estimator of the multinomial model.
pub fn fit_mdpde(
    counts: &IntervalCounts,
    plan: &StressPlan,
    beta: f64,
    options: &FitOptions,
) -> Result<FitResult> {
    check_inputs(counts, plan, beta)?;
    let p_hat = empirical_probabilities(counts);
    let loss = |point: &[f64]| -> f64 {
        let params = match ModelParams::new(point[0].exp(), point[1]) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let pi = failure_probabilities(&params, plan);
        divergence_or_inf(p_hat.probs(), pi.probs(), beta)
    };

    let starts: Vec<[f64; 2]> = match &options.initial {
        Some(p) => vec![[p.theta0().ln(), p.theta1()]],
        None => GRID_LOG_T0
            .iter()
            .flat_map(|&a| GRID_T1.iter().map(move |&b| [a, b]))
            .collect(),
    };

    let best = run_multistart(&starts, loss, &simplex_options(options.max_iterations));
    let estimate = ModelParams::new(best.point[0].exp(), best.point[1])?;
    let mut warnings = Vec::new();
    if let Some(w) = boundary_warning(counts) {
        warnings.push(w);
    }
    if !best.converged {
        warnings.push(Warning::NonConvergence);
    }
    let covariance = unrestricted_covariance(&estimate, plan, beta).ok();
    Ok(FitResult {
        estimate,
        beta,
        loss: best.loss,
        covariance,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
    })
}

/// Minimum DPD estimator over the line m.theta = d.
pub fn fit_restricted_mdpde(
    counts: &IntervalCounts,
    plan: &StressPlan,
    beta: f64,
    constraint: &LinearConstraint,
    options: &FitOptions,
) -> Result<FitResult> {
    check_inputs(counts, plan, beta)?;
    let p_hat = empirical_probabilities(counts);
    let m = constraint.m();
    let d = constraint.d();

    // Parametrize the line by the coordinate whose constraint weight is
    // smaller in magnitude, so the solved-for coordinate is stable.
    let free_is_theta0 = m[1] != 0.0 && m[1].abs() >= m[0].abs();
    if !free_is_theta0 && m[1] == 0.0 && d / m[0] <= 0.0 {
        return Err(Error::InfeasibleConstraint(format!(
            "constraint forces theta0 = {} <= 0",
            d / m[0]
        )));
    }

    let theta_of = |free: f64| -> Option<ModelParams> {
        if free_is_theta0 {
            let theta0 = free.exp();
            let theta1 = (d - m[0] * theta0) / m[1];
            ModelParams::new(theta0, theta1).ok()
        } else {
            let theta1 = free;
            let theta0 = (d - m[1] * theta1) / m[0];
            ModelParams::new(theta0, theta1).ok()
        }
    };

    let loss = |point: &[f64]| -> f64 {
        match theta_of(point[0]) {
            Some(params) => {
                let pi = failure_probabilities(&params, plan);
                divergence_or_inf(p_hat.probs(), pi.probs(), beta)
            }
            None => f64::INFINITY,
        }
    };

    let starts: Vec<[f64; 1]> = match &options.initial {
        Some(p) => {
            let free = if free_is_theta0 {
                p.theta0().ln()
            } else {
                p.theta1()
            };
            vec![[free]]
        }
        None => {
            if free_is_theta0 {
                GRID_LOG_T0.iter().map(|&a| [a]).collect()
            } else {
                GRID_T1.iter().map(|&b| [b]).collect()
            }
        }
    };

    let mut loss = loss;
    let best = run_multistart(
        &starts,
        &mut loss,
        &restricted_simplex_options(options.max_iterations),
    );

    // The divergence flattens out to machine precision before the
    // stationarity residual does, so the simplex optimum is polished
    // with Newton steps on the analytic score along the line.
    let dtheta = |free: f64| -> Vec2 {
        if free_is_theta0 {
            let theta0 = free.exp();
            [theta0, -m[0] * theta0 / m[1]]
        } else {
            [-m[1] / m[0], 1.0]
        }
    };
    let tangent_score = |free: f64| -> Option<f64> {
        let params = theta_of(free)?;
        let u = score(&params, plan, p_hat.probs(), beta).ok()?.value;
        Some(dot(u, dtheta(free)))
    };
    let mut free = best.point[0];
    let mut best_free = free;
    let mut best_abs = tangent_score(free).map(f64::abs).unwrap_or(f64::INFINITY);
    for _ in 0..40 {
        let g = match tangent_score(free) {
            Some(g) => g,
            None => break,
        };
        if g.abs() < best_abs {
            best_abs = g.abs();
            best_free = free;
        }
        if g == 0.0 {
            break;
        }
        let h = 1e-6 * free.abs().max(1e-3);
        let der = match (tangent_score(free + h), tangent_score(free - h)) {
            (Some(gp), Some(gm)) => (gp - gm) / (2.0 * h),
            _ => break,
        };
        if !der.is_finite() || der.abs() < 1e-300 {
            break;
        }
        let step = (g / der).clamp(-0.5, 0.5);
        if step.abs() < 1e-16 * free.abs().max(1.0) {
            break;
        }
        free -= step;
    }
    let best = SimplexResult {
        point: vec![best_free],
        loss: loss(&[best_free]).min(best.loss),
        ..best
    };

    let estimate = theta_of(best.point[0]).ok_or_else(|| {
        Error::InfeasibleConstraint("optimum left the feasible region".into())
    })?;
    let mut warnings = Vec::new();
    if let Some(w) = boundary_warning(counts) {
        warnings.push(w);
    }
    if !best.converged {
        warnings.push(Warning::NonConvergence);
    }
    let covariance = restricted_covariance(&estimate, plan, beta, constraint)
        .ok()
        .map(|r| r.sigma);
    Ok(FitResult {
        estimate,
        beta,
        loss: best.loss,
        covariance,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
    })
}

fn check_inputs(counts: &IntervalCounts, plan: &StressPlan, beta: f64) -> Result<()> {
    if counts.len() != plan.num_intervals() + 1 {
        return Err(Error::InvalidInput(format!(
            "counts have {} cells, plan implies {}",
            counts.len(),
            plan.num_intervals() + 1
        )));
    }
    if beta < 0.0 {
        return Err(Error::InvalidInput("beta must be nonnegative".into()));
    }
    Ok(())
}

fn divergence_or_inf(p: &[f64], q: &[f64], beta: f64) -> f64 {
    match dpd_divergence(p, q, beta) {
        Ok(v) => v,
        Err(_) => f64::INFINITY,
    }
}

/// Runs the simplex from each start; ties between optima are broken by
/// lowest loss, then by lowest first coordinate.
fn run_multistart<const N: usize, F: FnMut(&[f64]) -> f64>(
    starts: &[[f64; N]],
    mut loss: F,
    opts: &SimplexOptions,
) -> SimplexResult {
    let mut best: Option<SimplexResult> = None;
    for start in starts {
        let r = minimize(&mut loss, start, opts);
        best = Some(match best {
            None => r,
            Some(b) => {
                if r.loss < b.loss || (r.loss == b.loss && r.point[0] < b.point[0]) {
                    r
                } else {
                    b
                }
            }
        });
    }
    best.expect("at least one start")
}

/// Sandwich covariance J^-1 K J^-1 of the unrestricted estimator.
pub fn unrestricted_covariance(
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
) -> Result<Mat2> {
    let j = matrix_j(params, plan, beta)?.value;
    let k = matrix_k(params, plan, beta)?.value;
    let j_inv = j.inverse()?;
    Ok(j_inv.mul(&k).mul(&j_inv))
}

/// The three objects of the restricted asymptotic covariance.
#[derive(Debug, Clone)]
pub struct RestrictedCovariance {
    pub sigma: Mat2,
    pub p: Mat2,
    pub q: Vec2,
}

/// Restricted covariance Sigma = P K P with
/// P = J^-1 - Q m^T J^-1 and Q = J^-1 m / (m^T J^-1 m).
pub fn restricted_covariance(
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
    constraint: &LinearConstraint,
) -> Result<RestrictedCovariance> {
    let j = matrix_j(params, plan, beta)?.value;
    let k = matrix_k(params, plan, beta)?.value;
    let j_inv = j.inverse()?;
    let m = constraint.m();
    let jm = j_inv.mul_vec(m);
    let denom = dot(m, jm);
    if denom.abs() < 1e-300 {
        return Err(Error::SingularInformation);
    }
    let q = [jm[0] / denom, jm[1] / denom];
    let p = j_inv.sub(&Mat2::outer(q, m).mul(&j_inv));
    let sigma = p.mul(&k).mul(&p);
    Ok(RestrictedCovariance { sigma, p, q })
}
