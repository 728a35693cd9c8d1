//! Density power divergence between empirical and model probability
//! vectors, the DPD score, and the information-type matrices.

use crate::error::{Error, Result, Warning};
use crate::linalg::{Mat2, Vec2};
use crate::model::{failure_probabilities, jacobian, ModelParams, StressPlan};
use serde::{Deserialize, Serialize};

/// Floor applied to model cell probabilities before raising to a negative
/// power; crossing it attaches a degenerate-cell warning.
pub const PROB_FLOOR: f64 = 1e-12;

/// Observed multinomial failure counts per inspection interval plus
/// survivors in the last cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCounts {
    counts: Vec<u64>,
}

impl IntervalCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidInput(
                "counts must be non-empty with a positive total".into(),
            ));
        }
        Ok(IntervalCounts { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Empirical cell probabilities n_j / N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalProbabilities {
    probs: Vec<f64>,
    total: u64,
}

impl EmpiricalProbabilities {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn empirical_probabilities(counts: &IntervalCounts) -> EmpiricalProbabilities {
    let n = counts.total() as f64;
    EmpiricalProbabilities {
        probs: counts.counts().iter().map(|&c| c as f64 / n).collect(),
        total: counts.total(),
    }
}

/// Density power divergence between probability vectors `p` and `q` at
/// tuning parameter `beta >= 0`. The `beta = 0` branch is the exact
/// Kullback-Leibler divergence with the 0*log(0) = 0 convention.
pub fn dpd_divergence(p: &[f64], q: &[f64], beta: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if beta < 0.0 {
        return Err(Error::InvalidInput("beta must be nonnegative".into()));
    }
    if beta == 0.0 {
        let mut kl = 0.0;
        for (&pj, &qj) in p.iter().zip(q) {
            if pj == 0.0 {
                continue;
            }
            if qj <= 0.0 {
                return Err(Error::InfiniteDivergence);
            }
            kl += pj * (pj / qj).ln();
        }
        return Ok(kl);
    }
    let mut sum = 0.0;
    for (&pj, &qj) in p.iter().zip(q) {
        let qb = qj.powf(beta);
        sum += qb * qj - (1.0 + 1.0 / beta) * pj * qb + pj.powf(beta + 1.0) / beta;
    }
    Ok(sum)
}

/// Model cell probability raised to `expo`, with flooring when the
/// exponent is negative. Collects a warning per floored cell.
fn powered(pi: &[f64], expo: f64, warnings: &mut Vec<Warning>) -> Vec<f64> {
    pi.iter()
        .enumerate()
        .map(|(j, &p)| {
            if expo < 0.0 && p < PROB_FLOOR {
                warnings.push(Warning::DegenerateCell { cell: j + 1, prob: p });
                PROB_FLOOR.powf(expo)
            } else {
                p.powf(expo)
            }
        })
        .collect()
}

/// A 2-vector result with any degenerate-cell warnings attached.
#[derive(Debug, Clone)]
pub struct ScoreResult {
    pub value: Vec2,
    pub warnings: Vec<Warning>,
}

/// A 2x2 matrix result with any degenerate-cell warnings attached.
#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub value: Mat2,
    pub warnings: Vec<Warning>,
}

/// DPD score U = W^T D^(beta-1) (p_hat - pi).
pub fn score(
    params: &ModelParams,
    plan: &StressPlan,
    p_hat: &[f64],
    beta: f64,
) -> Result<ScoreResult> {
    let pi = failure_probabilities(params, plan);
    let rows = jacobian(params, plan)?;
    if p_hat.len() != pi.len() {
        return Err(Error::InvalidInput(format!(
            "empirical vector has {} cells, plan implies {}",
            p_hat.len(),
            pi.len()
        )));
    }
    let mut warnings = Vec::new();
    let weights = powered(pi.probs(), beta - 1.0, &mut warnings);
    let mut u = [0.0, 0.0];
    for j in 0..p_hat.len() {
        let resid = weights[j] * (p_hat[j] - pi.probs()[j]);
        u[0] += rows[j][0] * resid;
        u[1] += rows[j][1] * resid;
    }
    Ok(ScoreResult { value: u, warnings })
}

/// Information-type matrix J = W^T D^(beta-1) W.
pub fn matrix_j(params: &ModelParams, plan: &StressPlan, beta: f64) -> Result<MatrixResult> {
    let pi = failure_probabilities(params, plan);
    let rows = jacobian(params, plan)?;
    let mut warnings = Vec::new();
    let weights = powered(pi.probs(), beta - 1.0, &mut warnings);
    let mut j = Mat2::zeros();
    for (row, &w) in rows.iter().zip(&weights) {
        j = j.add(&Mat2::outer(*row, *row).scale(w));
    }
    Ok(MatrixResult { value: j, warnings })
}

/// Score-covariance matrix K = W^T (D^(2beta-1) - pi^beta pi^beta^T) W.
pub fn matrix_k(params: &ModelParams, plan: &StressPlan, beta: f64) -> Result<MatrixResult> {
    let pi = failure_probabilities(params, plan);
    let rows = jacobian(params, plan)?;
    let mut warnings = Vec::new();
    let diag = powered(pi.probs(), 2.0 * beta - 1.0, &mut warnings);
    let pib = powered(pi.probs(), beta, &mut warnings);
    let mut k = Mat2::zeros();
    // diagonal part
    for (row, &w) in rows.iter().zip(&diag) {
        k = k.add(&Mat2::outer(*row, *row).scale(w));
    }
    // rank-one part: (W^T pi^beta)(W^T pi^beta)^T
    let mut v = [0.0, 0.0];
    for (row, &w) in rows.iter().zip(&pib) {
        v[0] += row[0] * w;
        v[1] += row[1] * w;
    }
    k = k.sub(&Mat2::outer(v, v));
    Ok(MatrixResult { value: k, warnings })
}

/// W^T D^(beta-1) (indicator_at(cell) - pi), the building block of the
/// influence functions. `cell` is zero-based.
pub fn jacobian_weighted_indicator_residual(
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
    cell: usize,
) -> Result<Vec2> {
    let pi = failure_probabilities(params, plan);
    if cell >= pi.len() {
        return Err(Error::InvalidInput(format!(
            "cell index {cell} out of range (cells: {})",
            pi.len()
        )));
    }
    let rows = jacobian(params, plan)?;
    let mut warnings = Vec::new();
    let weights = powered(pi.probs(), beta - 1.0, &mut warnings);
    let mut v = [0.0, 0.0];
    for j in 0..pi.len() {
        let indicator = if j == cell { 1.0 } else { 0.0 };
        let resid = weights[j] * (indicator - pi.probs()[j]);
        v[0] += rows[j][0] * resid;
        v[1] += rows[j][1] * resid;
    }
    Ok(v)
}
