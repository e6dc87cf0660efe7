use crate::error::{Error, Result};
use crate::model::RandomEffectsParams;

/// Gauss-Hermite rule for expectations under the standard normal:
/// `E f(X) ~ sum_k weights[k] * f(nodes[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Nodes and weights of the `n`-point rule, `1 <= n <= 100`.
///
/// Roots of the physicists' Hermite polynomial come from Newton iteration on
/// the orthonormal recurrence; nodes are then scaled by sqrt(2) and the
/// weights renormalized to sum to one.
pub fn gauss_hermite_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=100).contains(&n) {
        return Err(Error::Quadrature(format!(
            "number of points must be in 1..=100, got {n}"
        )));
    }
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::Quadrature(format!(
                "Newton iteration for root {i} of the {n}-point rule did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let total: f64 = w.iter().sum();
    let nodes: Vec<f64> = x.iter().rev().map(|xi| xi * std::f64::consts::SQRT_2).collect();
    let weights: Vec<f64> = w.iter().rev().map(|wi| wi / total).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Tensor grid for a bivariate normal with covariance built from `re`,
/// using the factorization `u ~ N(0, s_u^2)`,
/// `v | u ~ N(rho s_v u / s_u, s_v^2 (1 - rho^2))`. Flattened with the `u`
/// node outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateGrid {
    pub n: usize,
    /// Length `n`: value of `u` at outer node `k`.
    pub u: Vec<f64>,
    /// Length `n * n`: value of `v` at node `(k, l)`.
    pub v: Vec<f64>,
    /// Length `n * n`: product weights.
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl BivariateGrid {
    pub fn new(rule: &QuadratureRule, var_u: f64, var_v: f64, rho: f64) -> Self {
        let n = rule.len();
        let (su, sv) = (var_u.sqrt(), var_v.sqrt());
        let cond = sv * (1.0 - rho * rho).max(0.0).sqrt();
        let x = rule.nodes();
        let w = rule.weights();
        let u = x.iter().map(|xk| su * xk).collect();
        let mut v = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                v.push(rho * sv * x[k] + cond * x[l]);
                weights.push(w[k] * w[l]);
            }
        }
        let log_weights = weights.iter().map(|w: &f64| w.ln()).collect();
        Self {
            n,
            u,
            v,
            weights,
            log_weights,
        }
    }

    pub fn from_params(rule: &QuadratureRule, re: &RandomEffectsParams) -> Self {
        Self::new(rule, re.var_u(), re.var_v(), re.rho())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `E g(U, V)` for `(U, V)` bivariate normal with the covariance given by
/// `re`, by nested quadrature. Non-finite values of `g` propagate.
pub fn bivariate_integrate(
    g: impl Fn(f64, f64) -> f64,
    re: &RandomEffectsParams,
    rule: &QuadratureRule,
) -> f64 {
    let grid = BivariateGrid::from_params(rule, re);
    let n = grid.n;
    let mut total = 0.0;
    for k in 0..n {
        for l in 0..n {
            let i = k * n + l;
            total += grid.weights[i] * g(grid.u[k], grid.v[i]);
        }
    }
    total
}

/// `log sum_i exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if !max.is_finite() {
        return max;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
