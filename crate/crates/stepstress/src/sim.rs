//! Multinomial data generation, the cell-contamination scheme, and the
//! Monte Carlo experiments (estimator MSE, empirical level and power).
//!
//! Reproducibility contract: every replication draws from its own RNG
//! substream derived from (seed, replication index), and summaries are
//! reduced from per-replication records in index order, so a given seed
//! yields bit-identical results whether replications run sequentially or
//! in parallel.

use crate::dpd::IntervalCounts;
use crate::error::{Error, Result};
use crate::estimate::{fit_restricted_mdpde, FitOptions, LinearConstraint};
use crate::exec::{map_indexed, Parallelism};
use crate::htest::rao_statistic;
use crate::model::{
    failure_probabilities, lifetime_cdf, CellProbabilities, ModelParams, StressPlan,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// RNG substream for one replication of one experiment.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(replication)))
}

/// Multinomial draw of size `n` by sequential conditional binomials.
pub fn sample_counts(
    probs: &CellProbabilities,
    n: u64,
    rng: &mut ChaCha12Rng,
) -> IntervalCounts {
    let p = probs.probs();
    let mut counts = Vec::with_capacity(p.len());
    let mut remaining = n;
    let mut mass_left = 1.0;
    for (idx, &pj) in p.iter().enumerate() {
        if idx == p.len() - 1 || remaining == 0 {
            counts.push(remaining);
            remaining = 0;
            continue;
        }
        let cond = (pj / mass_left).clamp(0.0, 1.0);
        let draw = if cond >= 1.0 {
            remaining
        } else {
            rng.sample(Binomial::new(remaining, cond).expect("valid binomial"))
        };
        counts.push(draw);
        remaining -= draw;
        mass_left -= pj;
    }
    IntervalCounts::new(counts).expect("total is n > 0")
}

/// Which parameter coordinate the contamination shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationTarget {
    Theta0,
    Theta1,
}

/// Cell-level contamination: one interior cell's failure probability is
/// recomputed with a shrunk parameter, then the vector is renormalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub cell: usize,
    pub epsilon: f64,
    pub target: ContaminationTarget,
}

impl ContaminationSpec {
    pub fn validate(&self, plan: &StressPlan) -> Result<()> {
        let l = plan.num_intervals();
        if self.cell < 2 || self.cell > l {
            return Err(Error::InvalidInput(format!(
                "contaminated cell must be an interior interval 2..={l}, got {}",
                self.cell
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn shrunk(&self, params: &ModelParams) -> Result<ModelParams> {
        match self.target {
            ContaminationTarget::Theta0 => {
                ModelParams::new(self.epsilon * params.theta0(), params.theta1())
            }
            ContaminationTarget::Theta1 => {
                ModelParams::new(params.theta0(), self.epsilon * params.theta1())
            }
        }
    }
}

/// Replace cell j's probability by G_theta(t_j) - G_shrunk(t_{j-1}) and
/// renormalize the whole vector by its sum.
pub fn contaminated_probabilities(
    params: &ModelParams,
    plan: &StressPlan,
    spec: &ContaminationSpec,
) -> Result<CellProbabilities> {
    spec.validate(plan)?;
    let clean = failure_probabilities(params, plan);
    let shrunk = spec.shrunk(params)?;
    let j = spec.cell; // 1-based interior interval
    let t_j = plan.inspection_times()[j - 1];
    let t_prev = plan.inspection_times()[j - 2];
    let raw = lifetime_cdf(t_j, params, plan) - lifetime_cdf(t_prev, &shrunk, plan);
    if raw < 0.0 {
        return Err(Error::Numerical(format!(
            "contaminated cell probability is negative: {raw}"
        )));
    }
    let mut probs = clean.probs().to_vec();
    probs[j - 1] = raw;
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    CellProbabilities::new(probs)
}

/// Full description of one Monte Carlo experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub plan: StressPlan,
    pub true_params: ModelParams,
    pub n: u64,
    pub r: u64,
    pub betas: Vec<f64>,
    pub constraint: LinearConstraint,
    #[serde(default)]
    pub contamination: Option<ContaminationSpec>,
    pub seed: u64,
    pub alpha: f64,
    /// Sample-size ladder for level/power experiments; defaults to [n].
    #[serde(default)]
    pub sample_sizes: Option<Vec<u64>>,
    /// Generating parameters for power experiments; the null stays as
    /// configured through `constraint`.
    #[serde(default)]
    pub alternative: Option<ModelParams>,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.r == 0 {
            return Err(Error::InvalidInput("n and r must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
        }
        if self.betas.is_empty() || self.betas.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidInput(
                "betas must be non-empty and nonnegative".into(),
            ));
        }
        if let Some(c) = &self.contamination {
            c.validate(&self.plan)?;
        }
        Ok(())
    }

    fn generating_probabilities(&self, params: &ModelParams) -> Result<CellProbabilities> {
        match &self.contamination {
            Some(spec) => contaminated_probabilities(params, &self.plan, spec),
            None => Ok(failure_probabilities(params, &self.plan)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub beta: f64,
    pub n: u64,
    pub mse: f64,
    pub mse_theta0: f64,
    pub mse_theta1: f64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    pub rows: Vec<MseRow>,
    pub replications: u64,
}

/// Restricted-estimator MSE under the configured (possibly contaminated)
/// generating distribution. The same simulated datasets are reused across
/// the beta grid.
pub fn mse_experiment(config: &ExperimentConfig) -> Result<MseSummary> {
    config.validate()?;
    let probs = config.generating_probabilities(&config.true_params)?;
    let truth = config.true_params.as_vec();
    let betas = config.betas.clone();

    // per replication: squared errors per beta, or None on fit failure
    let records: Vec<Vec<Option<[f64; 2]>>> =
        map_indexed(config.r, config.parallelism, |rep| {
            let mut rng = replication_rng(config.seed, rep);
            let counts = sample_counts(&probs, config.n, &mut rng);
            betas
                .iter()
                .map(|&beta| {
                    match fit_restricted_mdpde(
                        &counts,
                        &config.plan,
                        beta,
                        &config.constraint,
                        &FitOptions::default(),
                    ) {
                        Ok(fit) if fit.converged => {
                            let e = fit.estimate.as_vec();
                            Some([
                                (e[0] - truth[0]).powi(2),
                                (e[1] - truth[1]).powi(2),
                            ])
                        }
                        _ => None,
                    }
                })
                .collect()
        });

    let mut rows = Vec::with_capacity(betas.len());
    for (bi, &beta) in betas.iter().enumerate() {
        let mut sum = [0.0, 0.0];
        let mut ok = 0u64;
        let mut failures = 0u64;
        for rec in &records {
            match rec[bi] {
                Some(sq) => {
                    sum[0] += sq[0];
                    sum[1] += sq[1];
                    ok += 1;
                }
                None => failures += 1,
            }
        }
        if failures as f64 > 0.02 * config.r as f64 {
            return Err(Error::ExperimentFailed {
                failures: failures as usize,
                total: config.r as usize,
            });
        }
        let denom = ok as f64;
        rows.push(MseRow {
            beta,
            n: config.n,
            mse: (sum[0] + sum[1]) / denom,
            mse_theta0: sum[0] / denom,
            mse_theta1: sum[1] / denom,
            failures,
        });
    }
    Ok(MseSummary {
        rows,
        replications: config.r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub beta: f64,
    pub n: u64,
    pub rejection_rate: f64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rows: Vec<RateRow>,
    pub replications: u64,
    pub alpha: f64,
}

/// Empirical rejection rate of the score test across the sample-size
/// ladder: level when generating under the null, power when `alternative`
/// parameters are configured.
pub fn level_power_experiment(config: &ExperimentConfig) -> Result<RateSummary> {
    config.validate()?;
    let gen_params = config.alternative.unwrap_or(config.true_params);
    let probs = config.generating_probabilities(&gen_params)?;
    let sizes = config
        .sample_sizes
        .clone()
        .unwrap_or_else(|| vec![config.n]);
    let betas = config.betas.clone();

    let mut rows = Vec::new();
    for (ni, &n) in sizes.iter().enumerate() {
        // distinct substream block per ladder entry
        let block_seed = splitmix64(config.seed ^ splitmix64(0xA17 ^ ni as u64));
        let records: Vec<Vec<Option<bool>>> =
            map_indexed(config.r, config.parallelism, |rep| {
                let mut rng = replication_rng(block_seed, rep);
                let counts = sample_counts(&probs, n, &mut rng);
                betas
                    .iter()
                    .map(|&beta| {
                        rao_statistic(&counts, &config.plan, beta, &config.constraint)
                            .ok()
                            .map(|outcome| outcome.p_value < config.alpha)
                    })
                    .collect()
            });
        for (bi, &beta) in betas.iter().enumerate() {
            let mut rejected = 0u64;
            let mut ok = 0u64;
            let mut failures = 0u64;
            for rec in &records {
                match rec[bi] {
                    Some(r) => {
                        ok += 1;
                        if r {
                            rejected += 1;
                        }
                    }
                    None => failures += 1,
                }
            }
            if failures as f64 > 0.02 * config.r as f64 {
                return Err(Error::ExperimentFailed {
                    failures: failures as usize,
                    total: config.r as usize,
                });
            }
            rows.push(RateRow {
                beta,
                n,
                rejection_rate: rejected as f64 / ok as f64,
                failures,
            });
        }
    }
    Ok(RateSummary {
        rows,
        replications: config.r,
        alpha: config.alpha,
    })
}
