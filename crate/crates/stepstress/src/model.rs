//! Step-stress experimental plan and the exponential cumulative exposure
//! lifetime model: CDF, interval failure probabilities, and their analytic
//! parameter derivatives.

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use serde::{Deserialize, Serialize};

/// A step-stress plan: ordered stress levels, the times at which stress
/// changes, and the inspection grid. The last change time ends the
/// experiment and must equal the last inspection time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StressPlanRaw")]
pub struct StressPlan {
    stress_levels: Vec<f64>,
    change_times: Vec<f64>,
    inspection_times: Vec<f64>,
}

#[derive(Deserialize)]
struct StressPlanRaw {
    stress_levels: Vec<f64>,
    change_times: Vec<f64>,
    inspection_times: Vec<f64>,
}

impl TryFrom<StressPlanRaw> for StressPlan {
    type Error = Error;

    fn try_from(raw: StressPlanRaw) -> Result<Self> {
        StressPlan::new(raw.stress_levels, raw.change_times, raw.inspection_times)
    }
}

impl StressPlan {
    pub fn new(
        stress_levels: Vec<f64>,
        change_times: Vec<f64>,
        inspection_times: Vec<f64>,
    ) -> Result<Self> {
        let k = stress_levels.len();
        if k == 0 || change_times.len() != k {
            return Err(Error::InvalidInput(format!(
                "need equally many stress levels and change times, got {} and {}",
                k,
                change_times.len()
            )));
        }
        if inspection_times.len() < k {
            return Err(Error::InvalidInput(
                "inspection grid must be at least as long as the stress ladder".into(),
            ));
        }
        if !strictly_increasing(&stress_levels) {
            return Err(Error::InvalidInput(
                "stress levels must be strictly increasing".into(),
            ));
        }
        if change_times[0] <= 0.0 || !strictly_increasing(&change_times) {
            return Err(Error::InvalidInput(
                "change times must be positive and strictly increasing".into(),
            ));
        }
        if inspection_times[0] <= 0.0 || !strictly_increasing(&inspection_times) {
            return Err(Error::InvalidInput(
                "inspection times must be positive and strictly increasing".into(),
            ));
        }
        for &tau in &change_times {
            if !inspection_times.iter().any(|&t| t == tau) {
                return Err(Error::InvalidInput(format!(
                    "change time {tau} missing from the inspection grid"
                )));
            }
        }
        if inspection_times.last() != change_times.last() {
            return Err(Error::InvalidInput(
                "last inspection time must equal the end of the experiment".into(),
            ));
        }
        Ok(StressPlan {
            stress_levels,
            change_times,
            inspection_times,
        })
    }

    pub fn stress_levels(&self) -> &[f64] {
        &self.stress_levels
    }

    pub fn change_times(&self) -> &[f64] {
        &self.change_times
    }

    pub fn inspection_times(&self) -> &[f64] {
        &self.inspection_times
    }

    /// Number of stress levels.
    pub fn num_levels(&self) -> usize {
        self.stress_levels.len()
    }

    /// Number of inspection intervals L; the cell vector has L+1 entries.
    pub fn num_intervals(&self) -> usize {
        self.inspection_times.len()
    }

    /// Stress level in force over the interval ending at `t`:
    /// the level i with tau_{i-1} < t <= tau_i (earlier level at a change
    /// time). Returns a zero-based level index.
    pub fn level_at_inclusive(&self, t: f64) -> usize {
        let i = self.change_times.partition_point(|&tau| tau < t);
        i.min(self.num_levels() - 1)
    }

    /// Stress level whose CDF branch covers `t` under the half-open
    /// convention [tau_{i-1}, tau_i). Zero-based.
    fn branch_at(&self, t: f64) -> usize {
        let i = self.change_times.partition_point(|&tau| tau <= t);
        i.min(self.num_levels() - 1)
    }

    fn change_time_before(&self, level: usize) -> f64 {
        if level == 0 {
            0.0
        } else {
            self.change_times[level - 1]
        }
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

/// Parameters of the log-linear hazard link: the rate at stress x is
/// theta0 * exp(theta1 * x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParamsRaw")]
pub struct ModelParams {
    theta0: f64,
    theta1: f64,
}

#[derive(Deserialize)]
struct ModelParamsRaw {
    theta0: f64,
    theta1: f64,
}

impl TryFrom<ModelParamsRaw> for ModelParams {
    type Error = Error;

    fn try_from(raw: ModelParamsRaw) -> Result<Self> {
        ModelParams::new(raw.theta0, raw.theta1)
    }
}

impl ModelParams {
    pub fn new(theta0: f64, theta1: f64) -> Result<Self> {
        if !(theta0 > 0.0) || !theta0.is_finite() || !theta1.is_finite() {
            return Err(Error::InvalidInput(format!(
                "theta0 must be positive and finite, theta1 finite; got ({theta0}, {theta1})"
            )));
        }
        Ok(ModelParams { theta0, theta1 })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn as_vec(&self) -> Vec2 {
        [self.theta0, self.theta1]
    }
}

/// Cell probabilities: interval failure probabilities plus end-of-test
/// survival in the last entry. Entries are nonnegative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellProbabilitiesRaw")]
pub struct CellProbabilities {
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct CellProbabilitiesRaw {
    probs: Vec<f64>,
}

impl TryFrom<CellProbabilitiesRaw> for CellProbabilities {
    type Error = Error;

    fn try_from(raw: CellProbabilitiesRaw) -> Result<Self> {
        CellProbabilities::new(raw.probs)
    }
}

impl CellProbabilities {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidInput(
                "cell probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "cell probabilities must sum to 1, got {sum}"
            )));
        }
        Ok(CellProbabilities { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Rates lambda_i = theta0 * exp(theta1 * x_i), one per stress level.
pub fn hazard_rates(params: &ModelParams, plan: &StressPlan) -> Vec<f64> {
    plan.stress_levels()
        .iter()
        .map(|&x| params.theta0() * (params.theta1() * x).exp())
        .collect()
}

/// Cumulative-exposure shift terms a_0..a_{k-1}, with a_0 = 0 and
/// a_{i-1} = sum_{l<i} (tau_l - tau_{l-1}) * lambda_l / lambda_i.
pub fn exposure_shifts(params: &ModelParams, plan: &StressPlan) -> Vec<f64> {
    let lambda = hazard_rates(params, plan);
    shifts_from_rates(&lambda, plan.change_times())
}

fn shifts_from_rates(lambda: &[f64], change_times: &[f64]) -> Vec<f64> {
    let k = lambda.len();
    let mut shifts = vec![0.0; k];
    let mut exposure = 0.0;
    for i in 1..k {
        let prev_tau = if i == 1 { 0.0 } else { change_times[i - 2] };
        exposure += (change_times[i - 1] - prev_tau) * lambda[i - 1];
        shifts[i] = exposure / lambda[i];
    }
    shifts
}

/// Lifetime CDF of the cumulative exposure model, piecewise over the
/// stress ladder and continuous at every change time.
pub fn lifetime_cdf(t: f64, params: &ModelParams, plan: &StressPlan) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let lambda = hazard_rates(params, plan);
    let shifts = shifts_from_rates(&lambda, plan.change_times());
    let i = plan.branch_at(t);
    let u = t + shifts[i] - plan.change_time_before(i);
    1.0 - (-lambda[i] * u).exp()
}

/// Interval failure probabilities plus end-of-test survival.
pub fn failure_probabilities(params: &ModelParams, plan: &StressPlan) -> CellProbabilities {
    let mut probs = Vec::with_capacity(plan.num_intervals() + 1);
    let mut prev = 0.0;
    for &t in plan.inspection_times() {
        let g = lifetime_cdf(t, params, plan);
        probs.push((g - prev).max(0.0));
        prev = g;
    }
    probs.push(1.0 - prev);
    CellProbabilities { probs }
}

/// Gradient of the lifetime CDF at inspection time index `j` (zero-based)
/// with respect to (theta0, theta1).
pub fn cdf_gradient(j: usize, params: &ModelParams, plan: &StressPlan) -> Result<Vec2> {
    if j >= plan.num_intervals() {
        return Err(Error::InvalidInput(format!(
            "inspection index {j} out of range (L = {})",
            plan.num_intervals()
        )));
    }
    let t = plan.inspection_times()[j];
    let lambda = hazard_rates(params, plan);
    let shifts = shifts_from_rates(&lambda, plan.change_times());
    let i = plan.level_at_inclusive(t);
    let u = t + shifts[i] - plan.change_time_before(i);
    let density = lambda[i] * (-lambda[i] * u).exp();

    // stress-weighted companion of the shift term
    let mut weighted = 0.0;
    for l in 0..i {
        let prev_tau = if l == 0 { 0.0 } else { plan.change_times()[l - 1] };
        weighted += lambda[l]
            * (plan.change_times()[l] - prev_tau)
            * (plan.stress_levels()[l] - plan.stress_levels()[i]);
    }
    let shift_grad = weighted / lambda[i];

    Ok([
        density * u / params.theta0(),
        density * (u * plan.stress_levels()[i] + shift_grad),
    ])
}

/// Jacobian of the cell probabilities: row j is the gradient of cell j
/// with respect to (theta0, theta1). Shape (L+1) x 2; columns sum to zero.
pub fn jacobian(params: &ModelParams, plan: &StressPlan) -> Result<Vec<Vec2>> {
    let l = plan.num_intervals();
    let mut rows = Vec::with_capacity(l + 1);
    let mut prev: Vec2 = [0.0, 0.0];
    for j in 0..l {
        let z = cdf_gradient(j, params, plan)?;
        rows.push([z[0] - prev[0], z[1] - prev[1]]);
        prev = z;
    }
    rows.push([-prev[0], -prev[1]]);
    Ok(rows)
}
