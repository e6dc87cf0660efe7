use super::TransitionKernel;
use crate::error::{Error, Result};

/// Row-major dense square matrix used by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn matmul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += x * other.a[k * n + j];
                }
            }
        }
        Dense { n, a: out }
    }

    fn inf_norm(&self) -> f64 {
        self.a
            .chunks(self.n)
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Check that `q` is a conservative intensity matrix: square, nonnegative
/// off-diagonal entries, rows summing to zero.
pub(crate) fn check_generator(q: &[Vec<f64>]) -> Result<()> {
    let n = q.len();
    if n == 0 {
        return Err(Error::Domain("empty intensity matrix".into()));
    }
    for (i, row) in q.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Domain(format!(
                "intensity matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        let mut scale: f64 = 0.0;
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Domain(format!("Q[{i}][{j}] = {x}")));
            }
            if i != j && x < 0.0 {
                return Err(Error::Domain(format!("negative off-diagonal Q[{i}][{j}] = {x}")));
            }
            scale = scale.max(x.abs());
        }
        let sum: f64 = row.iter().sum();
        if sum.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::Domain(format!(
                "row {i} of the intensity matrix sums to {sum:e}, not 0"
            )));
        }
    }
    Ok(())
}

/// `exp(Q t)` by scaling and squaring around a truncated Taylor series.
///
/// The squaring phase works on `T = exp(A) - I` through `T <- 2T + T^2`, so
/// the rows of `T`, which sum to zero, keep an error relative to `T` rather
/// than to the identity; squaring `I + T` directly lets row-sum errors
/// double at every step.
///
/// Independent of the closed-form kernels; used as their test oracle and as
/// the fallback when a closed form is numerically degenerate.
pub fn expm_oracle(q: &[Vec<f64>], t: f64) -> Result<TransitionKernel> {
    check_generator(q)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("elapsed time must be >= 0, got {t}")));
    }
    let n = q.len();
    let mut a = Dense {
        n,
        a: q.iter().flat_map(|r| r.iter().map(|x| x * t)).collect(),
    };
    let norm = a.inf_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    a.a.iter_mut().for_each(|x| *x *= scale);

    // T = sum_{k >= 1} A^k / k!
    let mut sum = a.clone();
    let mut term = a.clone();
    for k in 2..=30 {
        term = term.matmul(&a);
        let inv_k = 1.0 / k as f64;
        term.a.iter_mut().for_each(|x| *x *= inv_k);
        sum.a.iter_mut().zip(&term.a).for_each(|(s, x)| *s += x);
        if term.inf_norm() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        let sq = sum.matmul(&sum);
        sum.a.iter_mut().zip(&sq.a).for_each(|(s, x)| *s = 2.0 * *s + x);
    }
    for i in 0..n {
        sum.a[i * n + i] += 1.0;
    }
    TransitionKernel::from_raw(n, sum.a, t)
}
