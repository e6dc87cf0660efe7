//! Transition probability matrices for the two-, three- and four-state
//! sub-processes.
//!
//! Closed forms are evaluated directly; whenever one of their denominators
//! is numerically degenerate (coincident eigenvalues, vanishing rates), or a
//! closed-form row fails the stochasticity check, the kernel is computed by
//! [`expm_oracle`] instead. [`KernelRoute`] reports which path was taken.

mod closed;
mod expm;

use std::sync::atomic::{AtomicU64, Ordering};

pub use closed::{
    four_state_row, four_state_row1_closed, four_state_tpm, four_state_tpm_routed,
    three_state_row, three_state_tpm, three_state_tpm_routed, two_state_row, two_state_tpm,
};
pub use expm::expm_oracle;

use crate::error::{Error, Result};

/// Residual beyond which a kernel row is not repaired by clamping.
pub const REPAIR_TOLERANCE: f64 = 1e-10;

/// Relative eigenvalue separation below which the closed forms, whose
/// error grows like machine epsilon over the separation, are not used.
pub const SEPARATION_TOLERANCE: f64 = 1e-4;

static FALLBACKS: AtomicU64 = AtomicU64::new(0);

/// Number of kernel evaluations routed to the numerical oracle since start.
pub fn fallback_count() -> u64 {
    FALLBACKS.load(Ordering::Relaxed)
}

pub(crate) fn note_fallback() {
    FALLBACKS.fetch_add(1, Ordering::Relaxed);
}

/// Which computation produced a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRoute {
    ClosedForm,
    Oracle,
}

/// Row-stochastic matrix `P(t)` of a sub-process.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    size: usize,
    entries: Vec<f64>,
    elapsed: f64,
}

impl TransitionKernel {
    /// Build a kernel from raw row-major entries, clamping tiny excursions
    /// outside [0, 1] and renormalizing rows.
    pub fn from_raw(size: usize, mut entries: Vec<f64>, elapsed: f64) -> Result<Self> {
        debug_assert_eq!(entries.len(), size * size);
        for (i, row) in entries.chunks_mut(size).enumerate() {
            repair_row(row).map_err(|residual| {
                Error::Consistency(format!(
                    "row {i} of a {size}-state kernel is off by {residual:e} at t = {elapsed}"
                ))
            })?;
        }
        Ok(Self {
            size,
            entries,
            elapsed,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        Self {
            size,
            entries,
            elapsed: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.size)
    }

    /// Matrix product `self * other` (Chapman-Kolmogorov composition).
    pub fn compose(&self, other: &TransitionKernel) -> TransitionKernel {
        let a = expm::Dense {
            n: self.size,
            a: self.entries.clone(),
        };
        let b = expm::Dense {
            n: other.size,
            a: other.entries.clone(),
        };
        TransitionKernel {
            size: self.size,
            entries: a.matmul(&b).a,
            elapsed: self.elapsed + other.elapsed,
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &TransitionKernel) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Clamp entries to [0, 1] and renormalize. Returns the residual as the error
/// when it exceeds [`REPAIR_TOLERANCE`].
pub(crate) fn repair_row(row: &mut [f64]) -> std::result::Result<(), f64> {
    let mut residual: f64 = 0.0;
    let mut sum = 0.0;
    for &x in row.iter() {
        if !x.is_finite() {
            return Err(f64::INFINITY);
        }
        residual = residual.max(-x).max(x - 1.0);
        sum += x;
    }
    residual = residual.max((sum - 1.0).abs());
    if residual > REPAIR_TOLERANCE {
        return Err(residual);
    }
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = x.clamp(0.0, 1.0);
        sum += *x;
    }
    if sum != 1.0 {
        row.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(())
}

pub(crate) fn check_rate(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a finite rate >= 0, got {x}")))
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("elapsed time must be finite and >= 0, got {t}")))
    }
}

impl TransitionKernel {
    #[doc(hidden)]
    pub fn with_elapsed(mut self, elapsed: f64) -> Self {
        self.elapsed = elapsed;
        self
    }
}

impl TransitionKernel {
    /// Wrap entries without any checks or repair; for fault injection in the
    /// validation harness.
    #[doc(hidden)]
    pub fn unchecked(size: usize, entries: Vec<f64>, elapsed: f64) -> Self {
        Self {
            size,
            entries,
            elapsed,
        }
    }
}
