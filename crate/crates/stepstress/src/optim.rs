//! Derivative-free simplex minimization (Nelder-Mead) in one or two
//! dimensions, with the tight tolerances the estimators need.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop when the best-to-worst loss spread falls below this.
    pub loss_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub diameter_tol: f64,
    pub max_iterations: usize,
    /// Initial simplex edge length per coordinate.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            loss_tol: 1e-12,
            diameter_tol: 1e-10,
            max_iterations: 2000,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimize `f` starting from `start`, any dimension >= 1.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1.0 {
            opts.initial_step * v[i].abs()
        } else {
            opts.initial_step
        };
        simplex.push(v);
    }
    let mut losses: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        // order best..worst
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let ordered_losses: Vec<f64> = idx.iter().map(|&i| losses[i]).collect();
        simplex = ordered;
        losses = ordered_losses;

        let spread = losses[dim] - losses[0];
        let diameter = (0..dim)
            .map(|c| {
                let (lo, hi) = simplex.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| {
                    (lo.min(v[c]), hi.max(v[c]))
                });
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if spread < opts.loss_tol && diameter < opts.diameter_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for v in simplex.iter().take(dim) {
            for c in 0..dim {
                centroid[c] += v[c] / dim as f64;
            }
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|c| centroid[c] + ALPHA * (centroid[c] - simplex[dim][c]))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < losses[0] {
            let expand: Vec<f64> = (0..dim)
                .map(|c| centroid[c] + GAMMA * (reflect[c] - centroid[c]))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                simplex[dim] = expand;
                losses[dim] = f_expand;
            } else {
                simplex[dim] = reflect;
                losses[dim] = f_reflect;
            }
        } else if f_reflect < losses[dim - 1] {
            simplex[dim] = reflect;
            losses[dim] = f_reflect;
        } else {
            let (base, f_base) = if f_reflect < losses[dim] {
                (&reflect, f_reflect)
            } else {
                (&simplex[dim].clone(), losses[dim])
            };
            let contract: Vec<f64> = (0..dim)
                .map(|c| centroid[c] + RHO * (base[c] - centroid[c]))
                .collect();
            let f_contract = f(&contract);
            if f_contract < f_base {
                simplex[dim] = contract;
                losses[dim] = f_contract;
            } else {
                // shrink toward the best vertex
                for i in 1..=dim {
                    for c in 0..dim {
                        simplex[i][c] = simplex[0][c] + SIGMA * (simplex[i][c] - simplex[0][c]);
                    }
                    losses[i] = f(&simplex[i]);
                }
            }
        }
    }

    let best = losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    SimplexResult {
        point: simplex[best].clone(),
        loss: losses[best],
        iterations,
        converged,
    }
}
