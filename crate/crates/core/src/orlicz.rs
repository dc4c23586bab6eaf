//! Luxemburg and weak Orlicz norms of sampled fields over a region.
//!
//! Both norms are gauges `inf { lambda : G(lambda) <= 1 }` of a nonincreasing
//! functional `G`, found by bracket doubling followed by bisection. The value
//! reported is the upper end of the final bracket, so `G(value) <= 1` always.

use crate::error::{Error, Result};
use crate::field::{check_pair, integrate, RegionMask, SampledField};
use crate::geometry::Ball;
use crate::young::{YoungFamily, YoungFunction};
use serde::Serialize;
pub const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 2000;
/// Relative bracket width reported as converged.
pub const CONVERGED_WIDTH: f64 = 1e-10;
/// Bisection continues past [`CONVERGED_WIDTH`] down to this width.
const TARGET_WIDTH: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
}

impl NormResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            iterations: 0,
            bracket: (value, value),
            converged: true,
        }
    }
}

/// Outcome of a two-sided inequality check `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Magnitudes of `f` on `d`, in node order.
fn magnitudes(f: &SampledField, d: &RegionMask) -> Result<Vec<f64>> {
    check_pair(f, d)?;
    Ok(f.values()
        .iter()
        .zip(d.member())
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.abs())
        .collect())
}

/// Smallest `lambda` with `g(lambda) <= 1` for nonincreasing `g`.
fn gauge(g: impl Fn(f64) -> f64, start_hi: f64) -> Result<NormResult> {
    let mut hi = start_hi;
    let mut doublings = 0;
    while g(hi) > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations: doublings,
                lo: f64::MIN_POSITIVE,
                hi,
            });
        }
    }
    let mut lo = f64::MIN_POSITIVE;
    if g(lo) <= 1.0 {
        return Ok(NormResult {
            value: lo,
            iterations: 0,
            bracket: (lo, lo),
            converged: true,
        });
    }
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && hi - lo > TARGET_WIDTH * hi {
        // Geometric steps while the bracket spans many scales.
        let mid = if hi > 4.0 * lo {
            (lo.ln() * 0.5 + hi.ln() * 0.5).exp()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let converged = (hi - lo) / hi.max(1.0) <= CONVERGED_WIDTH;
    if !converged {
        return Err(Error::NoConvergence { iterations, lo, hi });
    }
    Ok(NormResult {
        value: hi,
        iterations,
        bracket: (lo, hi),
        converged,
    })
}

/// `S(lambda) = sum Phi(|f| / lambda) * cell_volume`; `+inf` terms propagate.
fn modular(mags: &[f64], phi: &YoungFunction, lambda: f64, vol: f64) -> f64 {
    let mut s = 0.0;
    for &m in mags {
        if m > 0.0 {
            s += phi.value(m / lambda);
        }
    }
    s * vol
}

pub fn luxemburg_norm(f: &SampledField, phi: &YoungFunction, d: &RegionMask) -> Result<NormResult> {
    let mags = magnitudes(f, d)?;
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(NormResult::exact(0.0));
    }
    if matches!(phi.family, YoungFamily::LInfinity) {
        return Ok(NormResult::exact(max));
    }
    let vol = f.grid().cell_volume();
    gauge(|l| modular(&mags, phi, l, vol), max * d.measure() + 1.0)
}

/// Distinct magnitudes `u_j > 0` with `M_j = |{ |f| >= u_j }|`, ascending in `u`.
fn level_sets(mags: &[f64], vol: f64) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = mags.iter().cloned().filter(|&m| m > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let u = sorted[i];
        out.push((u, (n - i) as f64 * vol));
        while i < n && sorted[i] == u {
            i += 1;
        }
    }
    out
}

/// `W(lambda) = max_j Phi(u_j / lambda) * M_j`, the supremum over `t` of
/// `Phi(t) m(f / lambda, t)` evaluated at the left limits of the steps.
fn weak_modular(levels: &[(f64, f64)], phi: &YoungFunction, lambda: f64) -> f64 {
    levels
        .iter()
        .map(|&(u, m)| phi.value(u / lambda) * m)
        .fold(0.0, f64::max)
}

pub fn weak_norm(f: &SampledField, phi: &YoungFunction, d: &RegionMask) -> Result<NormResult> {
    let mags = magnitudes(f, d)?;
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(NormResult::exact(0.0));
    }
    if matches!(phi.family, YoungFamily::LInfinity) {
        return Ok(NormResult::exact(max));
    }
    let levels = level_sets(&mags, f.grid().cell_volume());
    gauge(|l| weak_modular(&levels, phi, l), max * d.measure() + 1.0)
}

/// `int_D |f g| <= 2 ||f||_Phi(D) ||g||_{conj Phi}(D)`, with relative slack 1e-6.
pub fn holder_check(
    f: &SampledField,
    g: &SampledField,
    phi: &YoungFunction,
    d: &RegionMask,
) -> Result<BoundCheck> {
    let conj = phi.conjugate()?;
    let lhs = integrate(&f.mul(g)?.abs(), d)?;
    let rhs = 2.0 * luxemburg_norm(f, phi, d)?.value * luxemburg_norm(g, &conj, d)?.value;
    Ok(BoundCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-6),
    })
}

/// `int_B |f| <= 2 |B| Phi^{-1}(1/|B|) ||f||_Phi(B)` with `|B|` the mask measure.
pub fn mean_bound_check(f: &SampledField, phi: &YoungFunction, ball: &Ball) -> Result<BoundCheck> {
    let mask = RegionMask::from_ball(ball, f.grid())?;
    if mask.count() == 0 {
        return Err(Error::ZeroMeasure);
    }
    let m = mask.measure();
    let lhs = integrate(&f.abs(), &mask)?;
    let rhs = 2.0 * m * phi.inverse(1.0 / m) * luxemburg_norm(f, phi, &mask)?.value;
    Ok(BoundCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-6),
    })
}
