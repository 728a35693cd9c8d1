//! Influence functions of the unrestricted and restricted estimators at
//! single contaminated multinomial cells, and a tabulated profile for
//! diagnostics.

use crate::dpd::{matrix_j, jacobian_weighted_indicator_residual};
use crate::error::{Error, Result};
use crate::estimate::LinearConstraint;
use crate::linalg::{norm, Mat2, Vec2};
use crate::model::{ModelParams, StressPlan};
use serde::{Deserialize, Serialize};

/// A point mass on one multinomial cell (1-based index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationPoint {
    cell: usize,
}

impl ContaminationPoint {
    pub fn new(cell: usize, num_cells: usize) -> Result<Self> {
        if cell == 0 || cell > num_cells {
            return Err(Error::InvalidInput(format!(
                "contamination cell {cell} out of range 1..={num_cells}"
            )));
        }
        Ok(ContaminationPoint { cell })
    }

    pub fn cell(&self) -> usize {
        self.cell
    }
}

/// Influence of a point mass at `point` on the unrestricted estimator:
/// J^-1 W^T D^(beta-1) (indicator - pi).
pub fn influence_unrestricted(
    point: &ContaminationPoint,
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
) -> Result<Vec2> {
    let j = matrix_j(params, plan, beta)?.value;
    let j_inv = j.inverse()?;
    let v = jacobian_weighted_indicator_residual(params, plan, beta, point.cell() - 1)?;
    Ok(j_inv.mul_vec(v))
}

/// Influence of a point mass on the restricted estimator: the projection
/// matrix of the restricted asymptotics applied to the unrestricted
/// score direction, P W^T D^(beta-1) (indicator - pi) with
/// P = J^-1 - J^-1 m (m^T J^-1 m)^-1 m^T J^-1.
/// Orthogonal to the constraint vector by construction, and equal to the
/// derivative of the restricted-fit functional under point-mass mixture
/// contamination.
pub fn influence_restricted(
    point: &ContaminationPoint,
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
    constraint: &LinearConstraint,
) -> Result<Vec2> {
    let j = matrix_j(params, plan, beta)?.value;
    let j_inv = j.inverse()?;
    let m = constraint.m();
    let jm = j_inv.mul_vec(m);
    let denom = crate::linalg::dot(m, jm);
    if denom.abs() < 1e-300 {
        return Err(Error::SingularInformation);
    }
    let q = [jm[0] / denom, jm[1] / denom];
    let p = j_inv.sub(&Mat2::outer(q, m).mul(&j_inv));
    let v = jacobian_weighted_indicator_residual(params, plan, beta, point.cell() - 1)?;
    Ok(p.mul_vec(v))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceRow {
    pub cell: usize,
    pub value: Vec2,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub rows: Vec<InfluenceRow>,
    pub max_norm: f64,
}

/// Influence function across every cell. With a constraint the restricted
/// form is used, otherwise the unrestricted one.
pub fn influence_profile(
    params: &ModelParams,
    plan: &StressPlan,
    beta: f64,
    constraint: Option<&LinearConstraint>,
) -> Result<InfluenceProfile> {
    let num_cells = plan.num_intervals() + 1;
    let mut rows = Vec::with_capacity(num_cells);
    let mut max_norm = 0.0f64;
    for cell in 1..=num_cells {
        let point = ContaminationPoint::new(cell, num_cells)?;
        let value = match constraint {
            Some(c) => influence_restricted(&point, params, plan, beta, c)?,
            None => influence_unrestricted(&point, params, plan, beta)?,
        };
        let n = norm(value);
        max_norm = max_norm.max(n);
        rows.push(InfluenceRow { cell, value, norm: n });
    }
    Ok(InfluenceProfile { rows, max_norm })
}
