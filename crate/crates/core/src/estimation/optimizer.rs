use log::{debug, info};

/// Stopping rules for [`bfgs_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Stop once the finite-difference gradient's infinity norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop once the relative objective change stays below this...
    pub relative_tolerance: f64,
    /// ...for this many consecutive iterations.
    pub stall_iterations: usize,
    pub max_iterations: usize,
    /// Relative finite-difference step for gradients.
    pub gradient_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-5,
            relative_tolerance: 1e-9,
            stall_iterations: 3,
            max_iterations: 2000,
            gradient_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub gradient_norm: f64,
    pub message: String,
}

/// Central-difference gradient with step `rel * max(|x_k|, 1)`. Returns
/// `None` when an evaluation is not finite.
pub fn finite_difference_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    rel: f64,
) -> Option<Vec<f64>> {
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let h = rel * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        if !fp.is_finite() || !fm.is_finite() {
            return None;
        }
        g.push((fp - fm) / (2.0 * h));
    }
    Some(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximize `f` by BFGS on the inverse Hessian with an Armijo backtracking
/// line search. Only steps that do not lower `f` are accepted, so the
/// returned value is at least `f(x0)`. Non-finite evaluations count as
/// `-inf` and make the line search back off.
pub fn bfgs_maximize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    options: &OptimizerOptions,
) -> OptimizerOutcome {
    let n = x0.len();
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let outcome = |x: Vec<f64>, value, iterations, converged, gn, message: &str| OptimizerOutcome {
        theta: x,
        value,
        iterations,
        converged,
        evaluations: evaluations.get(),
        gradient_norm: gn,
        message: message.to_string(),
    };
    let mut x = x0.to_vec();
    let mut fx = eval(&x);
    if !fx.is_finite() {
        return outcome(x, fx, 0, false, f64::NAN, "objective not finite at start");
    }
    let Some(mut g) = finite_difference_gradient(&mut eval, &x, options.gradient_step) else {
        return outcome(x, fx, 0, false, f64::NAN, "gradient not finite at start");
    };
    // inverse of the negative Hessian approximation
    let mut h = vec![vec![0.0; n]; n];
    let reset = |h: &mut Vec<Vec<f64>>, g: &[f64]| {
        let scale = 1.0 / inf_norm(g).max(1.0);
        for (i, row) in h.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[i] = scale;
        }
    };
    reset(&mut h, &g);
    let mut stall = 0usize;
    for iter in 1..=options.max_iterations {
        let gn = inf_norm(&g);
        if gn < options.gradient_tolerance {
            return outcome(x, fx, iter - 1, true, gn, "gradient tolerance reached");
        }
        let mut d: Vec<f64> = h.iter().map(|row| dot(row, &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            reset(&mut h, &g);
            d = h.iter().map(|row| dot(row, &g)).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fn_ = eval(&xn);
            if fn_.is_finite() && fn_ >= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            // fall back to a pure gradient step once before giving up
            let is_reset = h
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, v)| i == j || *v == 0.0));
            if !is_reset {
                reset(&mut h, &g);
                continue;
            }
            return outcome(x, fx, iter, false, gn, "line search failed");
        };
        let Some(gnew) = finite_difference_gradient(&mut eval, &xn, options.gradient_step) else {
            return outcome(x, fx, iter, false, gn, "gradient not finite");
        };
        let rel = (fnew - fx).abs() / fx.abs().max(1.0);
        debug!("bfgs iter {iter}: f = {fnew:.10}, |g| = {:.3e}, step = {step:.3e}", inf_norm(&gnew));
        // curvature pair for the negated objective
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&gnew).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        fx = fnew;
        g = gnew;
        if rel < options.relative_tolerance {
            stall += 1;
            if stall >= options.stall_iterations {
                let gn = inf_norm(&g);
                info!("bfgs converged by relative change after {iter} iterations");
                return outcome(x, fx, iter, true, gn, "relative change tolerance reached");
            }
        } else {
            stall = 0;
        }
    }
    let gn = inf_norm(&g);
    outcome(x, fx, options.max_iterations, false, gn, "iteration limit reached")
}
