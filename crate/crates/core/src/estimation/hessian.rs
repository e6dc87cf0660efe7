use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

/// Central-difference Hessian of `f` at `x` with steps
/// `h_k = max(1e-4, 1e-4 |x_k|)`, symmetrized.
pub fn numerical_hessian(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| (1e-4 * v.abs()).max(1e-4)).collect();
    let f0 = f(x);
    let mut y = x.to_vec();
    let mut at = |y: &mut Vec<f64>, moves: &[(usize, f64)]| {
        for &(k, d) in moves {
            y[k] = x[k] + d;
        }
        let v = f(y);
        for &(k, _) in moves {
            y[k] = x[k];
        }
        v
    };
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = at(&mut y, &[(i, h[i])]);
        let fm = at(&mut y, &[(i, -h[i])]);
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = at(&mut y, &[(i, h[i]), (j, h[j])]);
            let fpm = at(&mut y, &[(i, h[i]), (j, -h[j])]);
            let fmp = at(&mut y, &[(i, -h[i]), (j, h[j])]);
            let fmm = at(&mut y, &[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Inverse of the observed information `-H`, restricted to directions of
/// positive curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub matrix: DMatrix<f64>,
    /// Parameters with non-negligible weight on a direction of non-positive
    /// curvature; their standard errors are not reported.
    pub flagged: Vec<bool>,
    pub min_eigenvalue: f64,
}

impl Covariance {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|k| {
                let v = self.matrix[(k, k)];
                if self.flagged[k] || !(v >= 0.0) {
                    f64::NAN
                } else {
                    v.sqrt()
                }
            })
            .collect()
    }
}

/// Pseudo-inverse of the observed information from the Hessian of the
/// log-likelihood.
pub fn covariance_from_hessian(hessian: &DMatrix<f64>) -> Covariance {
    let n = hessian.nrows();
    let info = -hessian;
    if info.iter().any(|v| !v.is_finite()) {
        warn!("Hessian has non-finite entries; standard errors unavailable");
        return Covariance {
            matrix: DMatrix::from_element(n, n, f64::NAN),
            flagged: vec![true; n],
            min_eigenvalue: f64::NAN,
        };
    }
    let eig = SymmetricEigen::new(info);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = scale * 1e-12;
    let mut matrix = DMatrix::zeros(n, n);
    let mut null_weight = vec![0.0; n];
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        if lambda > tol {
            matrix += v * v.transpose() / lambda;
        } else {
            for k in 0..n {
                null_weight[k] += v[k] * v[k];
            }
        }
    }
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let flagged: Vec<bool> = null_weight.iter().map(|w| *w > 1e-6).collect();
    if flagged.iter().any(|f| *f) {
        warn!(
            "observed information is not positive definite (smallest eigenvalue {min_eigenvalue:.3e}); {} parameter(s) flagged",
            flagged.iter().filter(|f| **f).count()
        );
    }
    Covariance {
        matrix,
        flagged,
        min_eigenvalue,
    }
}

/// `estimate -+ 1.96 se`, or `None` when `se` is negative or not finite.
pub fn wald_interval(estimate: f64, se: f64) -> Option<(f64, f64)> {
    if se.is_finite() && se >= 0.0 {
        Some((estimate - 1.96 * se, estimate + 1.96 * se))
    } else {
        None
    }
}
