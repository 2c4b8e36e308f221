//! Bounded Nelder–Mead simplex search with dimension-adaptive parameters
//! (Gao & Han) and restarts around the incumbent.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    /// Iteration cap for one simplex run.
    pub max_iterations: usize,
    /// Relative tolerance on the objective spread across the simplex.
    pub tolerance: f64,
    /// Fresh simplices built around the best point after a run stops.
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-8,
            max_restarts: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Problem<'a, F> {
    objective: &'a F,
    bounds: &'a [(f64, f64)],
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Problem<'_, F> {
    fn project(&self, x: &mut [f64]) {
        for (xi, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *xi = xi.clamp(lo, hi);
        }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.objective)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimises `objective` from `start`, keeping every trial point inside
/// `bounds` by projection.
pub fn minimize<F>(
    objective: &F,
    start: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(start.len(), bounds.len(), "bounds must match dimension");
    let mut problem = Problem {
        objective,
        bounds,
        evaluations: 0,
    };
    let mut best = start.to_vec();
    problem.project(&mut best);
    let mut best_value = problem.eval(&best);
    let mut iterations = 0;
    let mut converged = false;

    for restart in 0..=opts.max_restarts {
        let run = run_simplex(&mut problem, &best, best_value, opts);
        iterations += run.iterations;
        let improved = best_value - run.value;
        let scale = best_value.abs().max(f64::MIN_POSITIVE);
        if run.value <= best_value {
            best = run.x;
            best_value = run.value;
        }
        converged = run.converged;
        // A restart that finds (almost) nothing new means we are done.
        if restart > 0 && improved <= opts.tolerance * scale {
            break;
        }
        if best_value == 0.0 {
            converged = true;
            break;
        }
    }

    NelderMeadResult {
        x: best,
        value: best_value,
        iterations,
        evaluations: problem.evaluations,
        converged,
    }
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    problem: &mut Problem<'_, F>,
    start: &[f64],
    start_value: f64,
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = start.len();
    let nf = n as f64;
    let (reflect, expand, contract, shrink) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), start_value));
    for i in 0..n {
        let mut x = start.to_vec();
        let step = if x[i] != 0.0 { 0.05 * x[i] } else { 0.00025 };
        x[i] += step;
        problem.project(&mut x);
        if x[i] == start[i] {
            // pinned at a bound: step inwards instead
            x[i] = start[i] - step;
            problem.project(&mut x);
        }
        let v = problem.eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if has_converged(&simplex, opts.tolerance) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64, problem: &mut Problem<'_, F>| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            problem.project(&mut x);
            let v = problem.eval(&x);
            (x, v)
        };

        let (xr, fr) = along(reflect, problem);
        if fr < simplex[0].1 {
            let (xe, fe) = along(reflect * expand, problem);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            along(reflect * contract, problem)
        } else {
            along(-contract, problem)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + shrink * (*xi - bi);
            }
            problem.project(x);
            *v = problem.eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        iterations,
        evaluations: 0,
        converged,
    }
}

/// Objective spread treated as zero regardless of scale.
const ABSOLUTE_SPREAD: f64 = 1e-14;

// Only the objective spread is tested: flat, non-identifiable directions
// would otherwise keep the simplex from ever counting as converged. Restarts
// guard against a simplex that collapses early.
fn has_converged(simplex: &[(Vec<f64>, f64)], tol: f64) -> bool {
    let best = simplex[0].1;
    let worst = simplex[simplex.len() - 1].1;
    worst.is_finite() && worst - best <= tol * best.abs() + ABSOLUTE_SPREAD
}
