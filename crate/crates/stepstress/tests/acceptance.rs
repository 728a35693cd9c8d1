//! Acceptance suite: one test per criterion, each enforcing its stated
//! tolerance and runtime budget and printing a single pass line.

mod common;

use std::time::Instant;

use stepstress::dpd::empirical_probabilities;
use stepstress::dpd::IntervalCounts;
use stepstress::estimate::{
    fit_mdpde, fit_restricted_mdpde, restricted_covariance, FitOptions, LinearConstraint,
};
use stepstress::exec::{map_indexed, Parallelism};
use stepstress::htest::{dpd_test_statistic, rao_simple_statistic, BootstrapOptions};
use stepstress::influence::{
    influence_restricted, influence_unrestricted, ContaminationPoint,
};
use stepstress::io::{mse_summary_csv, rate_summary_csv};
use stepstress::linalg::{dot, norm, Mat2};
use stepstress::model::{
    exposure_shifts, failure_probabilities, hazard_rates, jacobian, ModelParams, StressPlan,
};
use stepstress::sim::{
    level_power_experiment, mse_experiment, replication_rng, sample_counts, ContaminationSpec,
    ContaminationTarget, ExperimentConfig,
};

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        plan: common::reference_plan(),
        true_params: common::reference_params(),
        n: 180,
        r: 100,
        betas: vec![0.0, 0.4],
        constraint: LinearConstraint::new([0.0, 1.0], 0.03).unwrap(),
        contamination: None,
        seed: 1,
        alpha: 0.05,
        sample_sizes: None,
        alternative: None,
        parallelism: Parallelism::Parallel,
    }
}

fn budget(start: Instant, seconds: u64, label: &str) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < seconds as f64,
        "{label}: {elapsed:.1}s exceeds the {seconds}s budget"
    );
}

#[test]
fn criterion_01_model_correctness() {
    let start = Instant::now();
    let mut rng = replication_rng(0xC1, 0);
    for draw in 0..1000 {
        let (plan, params) = common::random_instance(&mut rng);
        let pi = failure_probabilities(&params, &plan);
        let sum: f64 = pi.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "draw {draw}: sum {sum}");
        assert!(pi.probs().iter().all(|&p| p >= 0.0), "draw {draw}");

        // continuity at every interior change time, both branch formulas
        let rates = hazard_rates(&params, &plan);
        let shifts = exposure_shifts(&params, &plan);
        let tau = plan.change_times();
        for i in 0..tau.len() - 1 {
            let t = tau[i];
            let t_prev = if i == 0 { 0.0 } else { tau[i - 1] };
            let left = 1.0 - (-rates[i] * (t + shifts[i] - t_prev)).exp();
            let right = 1.0 - (-rates[i + 1] * (t + shifts[i + 1] - t)).exp();
            assert!(
                (left - right).abs() < 1e-12,
                "draw {draw}, change time {t}: {left} vs {right}"
            );
        }
    }
    budget(start, 5, "criterion 1");
    println!("PASS criterion 1: model correctness on 1000 randomized instances");
}

fn check_jacobian_fd(plan: &StressPlan, params: &ModelParams, label: &str) {
    let w = jacobian(params, plan).unwrap();
    let h0 = params.theta0() * 1e-5;
    let h1 = 1e-5;
    let probs = |t0: f64, t1: f64| -> Vec<f64> {
        failure_probabilities(&ModelParams::new(t0, t1).unwrap(), plan)
            .probs()
            .to_vec()
    };
    let up0 = probs(params.theta0() + h0, params.theta1());
    let dn0 = probs(params.theta0() - h0, params.theta1());
    let up1 = probs(params.theta0(), params.theta1() + h1);
    let dn1 = probs(params.theta0(), params.theta1() - h1);

    let mut diff_sq = 0.0;
    let mut fd_sq = 0.0;
    for j in 0..w.len() {
        let fd = [
            (up0[j] - dn0[j]) / (2.0 * h0),
            (up1[j] - dn1[j]) / (2.0 * h1),
        ];
        for c in 0..2 {
            diff_sq += (w[j][c] - fd[c]).powi(2);
            fd_sq += fd[c].powi(2);
        }
    }
    let rel = (diff_sq / fd_sq).sqrt();
    assert!(rel < 1e-6, "{label}: relative error {rel}");
}

#[test]
fn criterion_02_gradient_fidelity() {
    let start = Instant::now();
    check_jacobian_fd(
        &common::reference_plan(),
        &common::reference_params(),
        "reference plan",
    );
    let mut rng = replication_rng(0xC2, 0);
    for draw in 0..100 {
        let (plan, params) = common::random_instance(&mut rng);
        check_jacobian_fd(&plan, &params, &format!("random instance {draw}"));
    }
    budget(start, 5, "criterion 2");
    println!("PASS criterion 2: Jacobian matches central finite differences");
}

#[test]
fn criterion_03_mle_equivalence() {
    let start = Instant::now();
    let plan = common::reference_plan();
    let pi = failure_probabilities(&common::reference_params(), &plan);
    for rep in 0..50 {
        let mut rng = replication_rng(0xC3, rep);
        let counts = sample_counts(&pi, 180, &mut rng);
        let fit = fit_mdpde(&counts, &plan, 0.0, &FitOptions::default()).unwrap();
        let (t0, t1) = common::independent_mle(&counts, &plan);
        assert!(
            (fit.estimate.theta0() - t0).abs() < 1e-6,
            "rep {rep}: theta0 {} vs {t0}",
            fit.estimate.theta0()
        );
        assert!(
            (fit.estimate.theta1() - t1).abs() < 1e-6,
            "rep {rep}: theta1 {} vs {t1}",
            fit.estimate.theta1()
        );
    }
    budget(start, 60, "criterion 3");
    println!("PASS criterion 3: beta=0 fit equals the independent MLE on 50 datasets");
}

#[test]
fn criterion_04_constraint_exactness() {
    let start = Instant::now();
    let plan = common::reference_plan();
    let pi = failure_probabilities(&common::reference_params(), &plan);
    let constraint = LinearConstraint::new([0.0, 1.0], 0.03).unwrap();
    let m = constraint.m();
    for rep in 0..50 {
        let mut rng = replication_rng(0xC4, rep);
        let counts = sample_counts(&pi, 180, &mut rng);
        for &beta in &[0.0, 0.4] {
            let fit =
                fit_restricted_mdpde(&counts, &plan, beta, &constraint, &FitOptions::default())
                    .unwrap();
            assert!(
                constraint.residual(&fit.estimate).abs() < 1e-10,
                "rep {rep} beta {beta}"
            );
            let p_hat = empirical_probabilities(&counts);
            let u = stepstress::dpd::score(&fit.estimate, &plan, p_hat.probs(), beta)
                .unwrap()
                .value;
            let along = dot(u, m) / dot(m, m);
            let perp = [u[0] - along * m[0], u[1] - along * m[1]];
            assert!(
                norm(perp) < 1e-6,
                "rep {rep} beta {beta}: stationarity residual {}",
                norm(perp)
            );
        }
    }
    budget(start, 60, "criterion 4");
    println!("PASS criterion 4: constraint exact and stationarity residual below 1e-6");
}

#[test]
fn criterion_05_restricted_asymptotic_covariance() {
    let start = Instant::now();
    let plan = common::reference_plan();
    let truth = common::reference_params();
    let pi = failure_probabilities(&truth, &plan);
    let constraint = LinearConstraint::new([0.0, 1.0], 0.03).unwrap();
    let n = 2000u64;
    let r = 2000u64;
    let warm = FitOptions {
        initial: Some(truth),
        ..FitOptions::default()
    };
    for &beta in &[0.0, 0.4] {
        let sigma = restricted_covariance(&truth, &plan, beta, &constraint)
            .unwrap()
            .sigma;
        let m = constraint.m();
        let msm = dot(m, sigma.mul_vec(m));
        assert!(msm.abs() < 1e-10, "beta {beta}: m Sigma m = {msm}");

        let plan_ref = &plan;
        let warm_ref = &warm;
        let constraint_ref = &constraint;
        let pi_ref = &pi;
        let draws: Vec<[f64; 2]> = map_indexed(r, Parallelism::Parallel, move |rep| {
            let mut rng = replication_rng(0xC5, rep);
            let counts = sample_counts(pi_ref, n, &mut rng);
            let fit =
                fit_restricted_mdpde(&counts, plan_ref, beta, constraint_ref, warm_ref)
                    .unwrap();
            let e = fit.estimate.as_vec();
            [
                (n as f64).sqrt() * (e[0] - truth.theta0()),
                (n as f64).sqrt() * (e[1] - truth.theta1()),
            ]
        });
        let mean = draws.iter().fold([0.0, 0.0], |acc, d| {
            [acc[0] + d[0] / r as f64, acc[1] + d[1] / r as f64]
        });
        let mut emp = Mat2::zeros();
        for d in &draws {
            let c = [d[0] - mean[0], d[1] - mean[1]];
            for i in 0..2 {
                for j in 0..2 {
                    emp.m[i][j] += c[i] * c[j] / (r as f64 - 1.0);
                }
            }
        }
        let rel = emp.sub(&sigma).frobenius_norm() / sigma.frobenius_norm();
        assert!(
            rel < 0.15,
            "beta {beta}: empirical covariance off by {rel:.3} (emp {:?}, asym {:?})",
            emp,
            sigma
        );
    }
    budget(start, 600, "criterion 5");
    println!("PASS criterion 5: restricted estimator covariance matches the asymptotics");
}

#[test]
fn criterion_06_rao_test_size() {
    let start = Instant::now();
    let mut config = base_config();
    config.r = 1000;
    config.betas = vec![0.0, 0.2, 0.4, 0.6];
    config.seed = 0xC6;
    let summary = level_power_experiment(&config).unwrap();
    for row in &summary.rows {
        assert!(
            (0.03..=0.08).contains(&row.rejection_rate),
            "linear null beta {}: size {}",
            row.beta,
            row.rejection_rate
        );
    }

    // simple-null variant against the chi-square with two degrees of freedom
    let plan = common::reference_plan();
    let truth = common::reference_params();
    let pi = failure_probabilities(&truth, &plan);
    let betas = [0.0, 0.2, 0.4, 0.6];
    let plan_ref = &plan;
    let rejections: Vec<[bool; 4]> = map_indexed(1000, Parallelism::Parallel, move |rep| {
        let mut rng = replication_rng(0xC6C6, rep);
        let counts = sample_counts(&pi, 180, &mut rng);
        let mut out = [false; 4];
        for (i, &beta) in betas.iter().enumerate() {
            let outcome = rao_simple_statistic(&counts, plan_ref, beta, &truth).unwrap();
            out[i] = outcome.p_value < 0.05;
        }
        out
    });
    for (i, &beta) in betas.iter().enumerate() {
        let rate =
            rejections.iter().filter(|r| r[i]).count() as f64 / rejections.len() as f64;
        assert!(
            (0.03..=0.08).contains(&rate),
            "simple null beta {beta}: size {rate}"
        );
    }
    budget(start, 600, "criterion 6");
    println!("PASS criterion 6: score test sizes inside [0.03, 0.08]");
}

#[test]
fn criterion_07_influence_functions() {
    let start = Instant::now();
    let plan = common::reference_plan();
    let truth = common::reference_params();
    let pi = failure_probabilities(&truth, &plan);
    let num_cells = pi.len();
    let constraint = LinearConstraint::new([0.0, 1.0], 0.03).unwrap();
    let m = constraint.m();
    let eps = 1e-4;
    let n = 1_000_000_000_000u64;

    // epsilon-mixture of the model vector with a point mass on `cell`
    let mixture = |cell: usize, e: f64| -> IntervalCounts {
        let probs: Vec<f64> = pi
            .probs()
            .iter()
            .enumerate()
            .map(|(j, &p)| (1.0 - e) * p + if j + 1 == cell { e } else { 0.0 })
            .collect();
        common::counts_from_probs(&probs, n)
    };
    let warm = FitOptions {
        initial: Some(truth),
        ..FitOptions::default()
    };

    for &beta in &[0.0, 0.4] {
        for cell in 1..=num_cells {
            let point = ContaminationPoint::new(cell, num_cells).unwrap();
            let if_u = influence_unrestricted(&point, &truth, &plan, beta).unwrap();
            let if_r =
                influence_restricted(&point, &truth, &plan, beta, &constraint).unwrap();
            assert!(
                dot(m, if_r).abs() < 1e-10 * norm(if_r).max(1.0),
                "beta {beta} cell {cell}: m.IF = {}",
                dot(m, if_r)
            );

            let up = mixture(cell, eps);
            let dn = mixture(cell, -eps);
            let fd_free = {
                let a = fit_mdpde(&up, &plan, beta, &warm).unwrap().estimate.as_vec();
                let b = fit_mdpde(&dn, &plan, beta, &warm).unwrap().estimate.as_vec();
                [(a[0] - b[0]) / (2.0 * eps), (a[1] - b[1]) / (2.0 * eps)]
            };
            let fd_tied = {
                let a = fit_restricted_mdpde(&up, &plan, beta, &constraint, &warm)
                    .unwrap()
                    .estimate
                    .as_vec();
                let b = fit_restricted_mdpde(&dn, &plan, beta, &constraint, &warm)
                    .unwrap()
                    .estimate
                    .as_vec();
                [(a[0] - b[0]) / (2.0 * eps), (a[1] - b[1]) / (2.0 * eps)]
            };
            let rel_u = norm([fd_free[0] - if_u[0], fd_free[1] - if_u[1]]) / norm(if_u);
            let rel_r = norm([fd_tied[0] - if_r[0], fd_tied[1] - if_r[1]]) / norm(if_r);
            assert!(
                rel_u < 0.01,
                "beta {beta} cell {cell}: unrestricted IF off by {rel_u:.4} ({fd_free:?} vs {if_u:?})"
            );
            assert!(
                rel_r < 0.01,
                "beta {beta} cell {cell}: restricted IF off by {rel_r:.4} ({fd_tied:?} vs {if_r:?})"
            );
        }
    }
    budget(start, 120, "criterion 7");
    println!("PASS criterion 7: influence functions match mixture refits within 1%");
}

#[test]
fn criterion_08_robustness_ordering() {
    let start = Instant::now();
    let betas = vec![0.0, 0.4, 0.6, 1.0];
    let run = |d: f64| {
        let mut config = base_config();
        config.r = 500;
        config.betas = betas.clone();
        config.constraint = LinearConstraint::new([0.0, 1.0], d).unwrap();
        config.contamination = Some(ContaminationSpec {
            cell: 3,
            epsilon: 0.5,
            target: ContaminationTarget::Theta0,
        });
        config.seed = 0xC8;
        mse_experiment(&config).unwrap()
    };
    let null_true = run(0.03);
    let null_off = run(0.027);

    for summary in [&null_true, &null_off] {
        let mse_at = |b: f64| summary.rows.iter().find(|r| r.beta == b).unwrap().mse;
        for &b in &betas[1..] {
            assert!(
                mse_at(0.0) > mse_at(b),
                "MSE({}) = {} not above MSE({b}) = {}",
                0.0,
                mse_at(0.0),
                mse_at(b)
            );
        }
    }
    for (a, b) in null_off.rows.iter().zip(&null_true.rows) {
        assert!(
            a.mse > b.mse,
            "beta {}: off-null MSE {} not above null MSE {}",
            a.beta,
            a.mse,
            b.mse
        );
    }
    budget(start, 600, "criterion 8");
    println!("PASS criterion 8: contaminated MSE decreases in beta, increases off the null");
}

#[test]
fn criterion_09_test_robustness() {
    let start = Instant::now();
    for target in [ContaminationTarget::Theta0, ContaminationTarget::Theta1] {
        let mut config = base_config();
        config.n = 720;
        config.r = 1000;
        config.betas = vec![0.0, 0.6];
        config.contamination = Some(ContaminationSpec {
            cell: 3,
            epsilon: 0.6,
            target,
        });
        config.seed = 0xC9;
        let summary = level_power_experiment(&config).unwrap();
        let rate_at = |b: f64| {
            summary
                .rows
                .iter()
                .find(|r| r.beta == b)
                .unwrap()
                .rejection_rate
        };
        let dev0 = (rate_at(0.0) - 0.05).abs();
        let dev6 = (rate_at(0.6) - 0.05).abs();
        assert!(
            dev6 < dev0,
            "{target:?}: level deviation {dev6:.4} at beta=0.6 not below {dev0:.4} at beta=0"
        );
    }
    budget(start, 900, "criterion 9");
    println!("PASS criterion 9: contaminated level deviation smaller at beta=0.6");
}

#[test]
fn criterion_10_dpd_test() {
    let start = Instant::now();
    let plan = common::reference_plan();
    let truth = common::reference_params();
    let pi = failure_probabilities(&truth, &plan);
    let beta = 0.4;

    // statistic is exactly zero when the null holds at the free optimum
    let mut rng = replication_rng(0xCA, 0);
    let counts = sample_counts(&pi, 500, &mut rng);
    let free = fit_mdpde(&counts, &plan, beta, &FitOptions::default()).unwrap();
    let at_free = LinearConstraint::new([0.0, 1.0], free.estimate.theta1()).unwrap();
    let outcome = dpd_test_statistic(
        &counts,
        &plan,
        beta,
        None,
        &at_free,
        &BootstrapOptions {
            replicates: 50,
            seed: 1,
            parallelism: Parallelism::Parallel,
        },
    )
    .unwrap();
    assert!(
        outcome.statistic < 1e-10,
        "null-perfect statistic {}",
        outcome.statistic
    );

    // bootstrap-calibrated empirical size
    let constraint = LinearConstraint::new([0.0, 1.0], 0.03).unwrap();
    let r = 300u64;
    let mut rejections = 0u32;
    for rep in 0..r {
        let mut rng = replication_rng(0xCAFE, rep);
        let counts = sample_counts(&pi, 180, &mut rng);
        let outcome = dpd_test_statistic(
            &counts,
            &plan,
            beta,
            None,
            &constraint,
            &BootstrapOptions {
                replicates: 500,
                seed: 0xCAFE ^ rep,
                parallelism: Parallelism::Parallel,
            },
        )
        .unwrap();
        if outcome.p_value < 0.05 {
            rejections += 1;
        }
    }
    let size = rejections as f64 / r as f64;
    assert!(
        (0.02..=0.10).contains(&size),
        "bootstrap-calibrated size {size}"
    );
    budget(start, 1800, "criterion 10");
    println!("PASS criterion 10: divergence test null behavior and bootstrap size");
}

#[test]
fn criterion_11_determinism() {
    let start = Instant::now();
    let mut config = base_config();
    config.r = 50;
    config.seed = 0xCB;

    config.parallelism = Parallelism::Parallel;
    let mse_par = mse_summary_csv(&mse_experiment(&config).unwrap());
    let rate_par = rate_summary_csv(&level_power_experiment(&config).unwrap());
    config.parallelism = Parallelism::Sequential;
    let mse_seq = mse_summary_csv(&mse_experiment(&config).unwrap());
    let rate_seq = rate_summary_csv(&level_power_experiment(&config).unwrap());
    assert_eq!(mse_par, mse_seq);
    assert_eq!(rate_par, rate_seq);

    // rerun with the same seed reproduces the bytes exactly
    config.parallelism = Parallelism::Parallel;
    let mse_again = mse_summary_csv(&mse_experiment(&config).unwrap());
    assert_eq!(mse_par, mse_again);
    budget(start, 120, "criterion 11");
    println!("PASS criterion 11: summaries byte-identical across parallelism and reruns");
}

