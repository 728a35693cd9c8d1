//! Fixtures and independent oracles shared by the integration tests.
//! The oracles are written against the public API only and deliberately
//! duplicate nothing from the library's internals.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use stepstress::dpd::IntervalCounts;
use stepstress::model::{failure_probabilities, ModelParams, StressPlan};

/// Two-level plan with the 11-point inspection grid: levels 35/45,
/// change at 25, end at 70.
pub fn reference_plan() -> StressPlan {
    StressPlan::new(
        vec![35.0, 45.0],
        vec![25.0, 70.0],
        vec![
            10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 60.0, 70.0,
        ],
    )
    .unwrap()
}

pub fn reference_params() -> ModelParams {
    ModelParams::new(0.003, 0.03).unwrap()
}

/// Expected counts N * p rounded by largest remainder, summing to N.
pub fn counts_from_probs(probs: &[f64], n: u64) -> IntervalCounts {
    let raw: Vec<f64> = probs.iter().map(|&p| p * n as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|&x| x.floor() as u64).collect();
    let mut short = n - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa)
    });
    for &i in &order {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    IntervalCounts::new(counts).unwrap()
}

/// A random admissible instance: 1..=3 stress levels, 2..=4 inspection
/// times per level, strictly increasing levels and times, change times
/// on the inspection grid.
pub fn random_instance(rng: &mut ChaCha12Rng) -> (StressPlan, ModelParams) {
    let levels = rng.random_range(1..=3usize);
    let mut stress = Vec::<f64>::with_capacity(levels);
    let mut s = rng.random_range(10.0..40.0);
    for _ in 0..levels {
        stress.push(s);
        s += rng.random_range(2.0..15.0);
    }

    let mut inspection = Vec::new();
    let mut change = Vec::with_capacity(levels);
    let mut t = 0.0;
    for _ in 0..levels {
        let k = rng.random_range(2..=4usize);
        for _ in 0..k {
            t += rng.random_range(2.0..20.0);
            inspection.push(t);
        }
        change.push(t);
    }

    // draw the hazard at the first level log-uniformly so lifetimes stay
    // on the scale of the test duration, then back out theta0
    let theta1 = rng.random_range(-0.15..0.15);
    let lambda1 = rng.random_range(-9.2f64..-3.0).exp();
    let theta0 = lambda1 * (-theta1 * stress[0]).exp();
    let plan = StressPlan::new(stress, change, inspection).unwrap();
    let params = ModelParams::new(theta0, theta1).unwrap();
    (plan, params)
}

/// Independent multinomial maximum likelihood oracle: coarse grid search
/// followed by damped Newton on the log-likelihood over
/// (log theta0, theta1) with finite-difference derivatives.
pub fn independent_mle(counts: &IntervalCounts, plan: &StressPlan) -> (f64, f64) {
    let n: Vec<f64> = counts.counts().iter().map(|&c| c as f64).collect();
    let ll = |p: &[f64]| -> f64 {
        let params = match ModelParams::new(p[0].exp(), p[1]) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let pi = failure_probabilities(&params, plan);
        n.iter()
            .zip(pi.probs())
            .map(|(&nj, &pj)| {
                if nj == 0.0 {
                    0.0
                } else if pj <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    nj * pj.ln()
                }
            })
            .sum()
    };

    let mut best = (f64::NEG_INFINITY, [0.01f64.ln(), 0.0]);
    for i in 0..20 {
        for j in 0..20 {
            let p = [
                -11.5 + 11.5 * i as f64 / 19.0,
                -0.2 + 0.4 * j as f64 / 19.0,
            ];
            let v = ll(&p);
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    let mut x = best.1;

    let h = 1e-6;
    for _ in 0..200 {
        let g = [
            (ll(&[x[0] + h, x[1]]) - ll(&[x[0] - h, x[1]])) / (2.0 * h),
            (ll(&[x[0], x[1] + h]) - ll(&[x[0], x[1] - h])) / (2.0 * h),
        ];
        let h00 = (ll(&[x[0] + h, x[1]]) - 2.0 * ll(&x) + ll(&[x[0] - h, x[1]])) / (h * h);
        let h11 = (ll(&[x[0], x[1] + h]) - 2.0 * ll(&x) + ll(&[x[0], x[1] - h])) / (h * h);
        let h01 = (ll(&[x[0] + h, x[1] + h]) - ll(&[x[0] + h, x[1] - h])
            - ll(&[x[0] - h, x[1] + h])
            + ll(&[x[0] - h, x[1] - h]))
            / (4.0 * h * h);
        let det = h00 * h11 - h01 * h01;
        if det.abs() < 1e-300 {
            break;
        }
        let step = [
            -(h11 * g[0] - h01 * g[1]) / det,
            -(h00 * g[1] - h01 * g[0]) / det,
        ];
        let mut scale = 1.0;
        let f0 = ll(&x);
        loop {
            let cand = [x[0] + scale * step[0], x[1] + scale * step[1]];
            if ll(&cand) >= f0 || scale < 1e-8 {
                x = cand;
                break;
            }
            scale *= 0.5;
        }
        if (g[0] * g[0] + g[1] * g[1]).sqrt() < 1e-9 {
            break;
        }
    }
    (x[0].exp(), x[1])
}
