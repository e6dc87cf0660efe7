use log::{debug, warn};

use super::{
    check_rate, check_time, expm_oracle, note_fallback, repair_row, KernelRoute,
    TransitionKernel, SEPARATION_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::model::{FourStateRates, ThreeStateRates};

#[inline]
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Row `from` of the two-state kernel with rates first->second `forward`
/// and second->first `backward`. No input checks.
#[inline]
pub fn two_state_row(forward: f64, backward: f64, t: f64, from: usize) -> [f64; 2] {
    let total = forward + backward;
    if total == 0.0 || t == 0.0 {
        return if from == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    }
    let decay = one_minus_exp_neg(total * t) / total;
    if from == 0 {
        let p = forward * decay;
        [1.0 - p, p]
    } else {
        let p = backward * decay;
        [p, 1.0 - p]
    }
}

/// Two-state kernel `[[p_aa, p_ab], [p_ba, p_bb]]`.
pub fn two_state_tpm(forward: f64, backward: f64, t: f64) -> Result<TransitionKernel> {
    check_rate("forward rate", forward)?;
    check_rate("backward rate", backward)?;
    check_time(t)?;
    let r0 = two_state_row(forward, backward, t, 0);
    let r1 = two_state_row(forward, backward, t, 1);
    TransitionKernel::from_raw(2, vec![r0[0], r0[1], r1[0], r1[1]], t)
}

/// `(exp(-x t) - exp(-y t)) / (y - x)`, evaluated without cancellation;
/// equals `t exp(-x t)` when `x == y`.
#[inline]
fn exp_divided_difference(x: f64, y: f64, t: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let d = hi - lo;
    let base = (-lo * t).exp();
    if d == 0.0 {
        base * t
    } else {
        base * one_minus_exp_neg(d * t) / d
    }
}

/// First row of the four-state kernel from the closed form, or `None` when a
/// denominator is numerically degenerate. Entries are not clamped.
///
/// The decay rates of the transient block {1, 2} are `kappa = (L -+ g) / 2`
/// with `L = l12 + l13 + l21 + l24` and `g^2 = (l12 + l13 - l21 - l24)^2 +
/// 4 l12 l21`; the smaller one is formed as `det / kappa_max` to avoid
/// cancellation.
///
/// `p13` is written as the damage mass `1 - p11 - p12` split by the
/// stationary law of the damaged block, plus the transient of that block
/// convolved with the activity process. The convolution only needs
/// `(e^{-kappa t} - e^{-L2 t}) / (L2 - kappa)`, so `L2` close to a decay
/// rate is harmless.
pub fn four_state_row1_closed(r: &FourStateRates, t: f64) -> Option<[f64; 4]> {
    let FourStateRates {
        l12,
        l13,
        l21,
        l24,
        l34,
        l43,
    } = *r;
    if t == 0.0 {
        return Some([1.0, 0.0, 0.0, 0.0]);
    }
    if l13 == 0.0 && l24 == 0.0 {
        // no route into damage: activity block alone
        let [p11, p12] = two_state_row(l12, l21, t, 0);
        return Some([p11, p12, 0.0, 0.0]);
    }

    let a = l12 + l13;
    let b = l21 + l24;
    let lam = a + b;
    let lam1 = a - b;
    let lam2 = l34 + l43;

    // gamma_1 of the closed form coincides with gamma
    let gamma = (lam1 * lam1 + 4.0 * l12 * l21).sqrt();
    if !(gamma > SEPARATION_TOLERANCE * lam) || !(lam2 > 0.0) {
        return None;
    }
    let det = l12 * l24 + l13 * b;
    let kappa2 = 0.5 * (lam + gamma);
    let kappa1 = det / kappa2;

    // kappa2 - a and kappa2 - b are (g -+ lam1) / 2; the one that cancels
    // is formed from their product l12 l21
    let wide = 0.5 * (gamma + lam1.abs());
    let narrow = l12 * l21 / wide;
    let c = if lam1 >= 0.0 { narrow } else { wide };

    let e2 = (-kappa2 * t).exp();
    let dd = exp_divided_difference(kappa1, kappa2, t);
    // ((lam1 + g) e2 + (g - lam1) e1) / (2 g)
    let p11 = c * dd + e2;
    let p12 = l12 * dd;

    let pi3 = l43 / lam2;
    let pi4 = l34 / lam2;
    let h1 = exp_divided_difference(kappa1, lam2, t);
    let h2 = exp_divided_difference(kappa2, lam2, t);
    let dh = (h1 - h2) / gamma;
    let p13 = pi3 * (1.0 - p11 - p12) + l13 * pi4 * (c * dh + h2) - l12 * l24 * pi3 * dh;
    Some([p11, p12, p13, 1.0 - p11 - p12 - p13])
}

fn oracle_row(q: &[Vec<f64>], t: f64, from: usize) -> Result<Vec<f64>> {
    note_fallback();
    let k = expm_oracle(q, t)?;
    Ok(k.row(from).to_vec())
}

/// Row `from` (zero-based) of the four-state kernel, dispatched between the
/// closed form and the oracle.
pub fn four_state_row(r: &FourStateRates, t: f64, from: usize) -> Result<[f64; 4]> {
    Ok(four_state_row_routed(r, t, from)?.0)
}

fn four_state_row_routed(r: &FourStateRates, t: f64, from: usize) -> Result<([f64; 4], KernelRoute)> {
    let closed = match from {
        0 => four_state_row1_closed(r, t),
        1 => four_state_row1_closed(&r.swapped(), t).map(|s| [s[1], s[0], s[3], s[2]]),
        2 => {
            let [p33, p34] = super::two_state_row(r.l34, r.l43, t, 0);
            return Ok(([0.0, 0.0, p33, p34], KernelRoute::ClosedForm));
        }
        3 => {
            let [p43, p44] = super::two_state_row(r.l34, r.l43, t, 1);
            return Ok(([0.0, 0.0, p43, p44], KernelRoute::ClosedForm));
        }
        _ => return Err(Error::Domain(format!("four-state row {from} out of range"))),
    };
    if let Some(mut row) = closed {
        match repair_row(&mut row) {
            Ok(()) => return Ok((row, KernelRoute::ClosedForm)),
            Err(residual) => warn!(
                "four-state closed form off by {residual:e} (rates {:?}, t = {t}); using oracle",
                r.as_array()
            ),
        }
    } else {
        debug!("four-state closed form degenerate for {:?}; using oracle", r.as_array());
    }
    let row = oracle_row(&r.generator(), t, from)?;
    Ok(([row[0], row[1], row[2], row[3]], KernelRoute::Oracle))
}

fn check_four(r: &FourStateRates, t: f64) -> Result<()> {
    for (name, x) in ["l12", "l13", "l21", "l24", "l34", "l43"]
        .iter()
        .zip(r.as_array())
    {
        check_rate(name, x)?;
    }
    check_time(t)
}

/// Full 4x4 kernel together with the route used for its transient rows.
pub fn four_state_tpm_routed(
    r: &FourStateRates,
    t: f64,
) -> Result<(TransitionKernel, KernelRoute)> {
    check_four(r, t)?;
    let mut entries = Vec::with_capacity(16);
    let mut route = KernelRoute::ClosedForm;
    for from in 0..4 {
        let (row, rt) = four_state_row_routed(r, t, from)?;
        if rt == KernelRoute::Oracle {
            route = KernelRoute::Oracle;
        }
        entries.extend_from_slice(&row);
    }
    Ok((TransitionKernel::from_raw(4, entries, t)?, route))
}

/// Four-state mover kernel over elapsed time `t`.
pub fn four_state_tpm(r: &FourStateRates, t: f64) -> Result<TransitionKernel> {
    Ok(four_state_tpm_routed(r, t)?.0)
}

/// Transient rows of the three-state kernel from the closed form, or `None`
/// if the arithmetic produced a non-finite value.
///
/// With eigenvalues `r1 > r2` of the transient block `A`, `exp(A t) =
/// [(A - r2) e^{r1 t} - (A - r1) e^{r2 t}] / (r1 - r2)`. This is the
/// eigenvector form with `x_j = (r_j - l22) / l21` multiplied through by
/// `l21`, so a small `l21` costs nothing, and the ratio
/// `(e^{r1 t} - e^{r2 t}) / (r1 - r2)` is taken as a divided difference so
/// coincident eigenvalues are harmless too.
fn three_state_closed(r: &ThreeStateRates, t: f64) -> Option<[[f64; 3]; 2]> {
    let ThreeStateRates { l12, l13, l21, l23 } = *r;
    if t == 0.0 {
        return Some([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    }
    if l13 == 0.0 && l23 == 0.0 {
        let [p11, p12] = two_state_row(l12, l21, t, 0);
        let [p21, p22] = two_state_row(l12, l21, t, 1);
        return Some([[p11, p12, 0.0], [p21, p22, 0.0]]);
    }
    let a = l12 + l13;
    let b = l21 + l23;
    let d = b - a; // l11 - l22
    let root = (d * d + 4.0 * l12 * l21).sqrt();
    // decay rates -r2 >= -r1 >= 0
    let k2 = 0.5 * (a + b + root);
    let k1 = (l12 * l23 + l13 * l21 + l13 * l23) / k2;
    // (root + |d|) / 2 and (root - |d|) / 2, the latter without cancellation
    let wide = 0.5 * (root + d.abs());
    let narrow = if wide > 0.0 { l12 * l21 / wide } else { 0.0 };
    // l11 - r2 and l22 - r2
    let (c11, c22) = if d >= 0.0 { (wide, narrow) } else { (narrow, wide) };
    let e2 = (-k2 * t).exp();
    let dd = exp_divided_difference(k1, k2, t);
    let p11 = c11 * dd + e2;
    let p12 = l12 * dd;
    let p21 = l21 * dd;
    let p22 = c22 * dd + e2;
    let rows = [[p11, p12, 1.0 - p11 - p12], [p21, p22, 1.0 - p21 - p22]];
    rows.iter().flatten().all(|x| x.is_finite()).then_some(rows)
}

fn three_state_row_routed(
    r: &ThreeStateRates,
    t: f64,
    from: usize,
) -> Result<([f64; 3], KernelRoute)> {
    match from {
        0 | 1 => {}
        2 => return Ok(([0.0, 0.0, 1.0], KernelRoute::ClosedForm)),
        _ => return Err(Error::Domain(format!("three-state row {from} out of range"))),
    }
    if let Some(rows) = three_state_closed(r, t) {
        let mut row = rows[from];
        match repair_row(&mut row) {
            Ok(()) => return Ok((row, KernelRoute::ClosedForm)),
            Err(residual) => warn!(
                "three-state closed form off by {residual:e} (rates {r:?}, t = {t}); using oracle"
            ),
        }
    } else {
        debug!("three-state closed form degenerate for {r:?}; using oracle");
    }
    let row = oracle_row(&r.generator(), t, from)?;
    Ok(([row[0], row[1], row[2]], KernelRoute::Oracle))
}

/// Row `from` of the three-state kernel.
pub fn three_state_row(r: &ThreeStateRates, t: f64, from: usize) -> Result<[f64; 3]> {
    Ok(three_state_row_routed(r, t, from)?.0)
}

pub fn three_state_tpm_routed(
    r: &ThreeStateRates,
    t: f64,
) -> Result<(TransitionKernel, KernelRoute)> {
    for (name, x) in [("l12", r.l12), ("l13", r.l13), ("l21", r.l21), ("l23", r.l23)] {
        check_rate(name, x)?;
    }
    check_time(t)?;
    let mut entries = Vec::with_capacity(9);
    let mut route = KernelRoute::ClosedForm;
    for from in 0..3 {
        let (row, rt) = three_state_row_routed(r, t, from)?;
        if rt == KernelRoute::Oracle {
            route = KernelRoute::Oracle;
        }
        entries.extend_from_slice(&row);
    }
    Ok((TransitionKernel::from_raw(3, entries, t)?, route))
}

/// Three-state mover kernel (state 3 absorbing).
pub fn three_state_tpm(r: &ThreeStateRates, t: f64) -> Result<TransitionKernel> {
    Ok(three_state_tpm_routed(r, t)?.0)
}
