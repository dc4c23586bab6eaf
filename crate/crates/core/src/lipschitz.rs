//! Lipschitz seminorm estimators and the ball functionals that characterize
//! Lipschitz symbols through maximal operators.
//!
//! The report is diagnostic: a finite grid and a finite corpus can only bound
//! operator norms from below and can only suggest scale stability.

use crate::error::{Error, Result};
use crate::field::{integrate, RegionMask, SampledField};
use crate::geometry::Ball;
use crate::maximal::{
    companion_ball, local_maximal, sharp_maximal, BallFamily, CompiledFamily, FamilyParams,
    Operator,
};
use crate::orlicz::{luxemburg_norm, weak_norm};
use crate::rng;
use crate::young::{log_grid, Tail, YoungFunction};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

pub const MIN_PAIR_BUDGET: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipEstimate {
    pub beta: f64,
    /// `sup |b(x) - b(y)| / rho(y^-1 x)^beta` over the evaluated pairs.
    pub pair_norm: f64,
    /// `sup_B |B|^{-1-beta/Q} int_B |b - b_B|` over the family.
    pub ball_norm: f64,
    pub ratio: f64,
    pub pairs_evaluated: usize,
    pub exhaustive: bool,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )))
    }
}

/// Pair seminorm over every unordered node pair.
pub fn pair_seminorm_exhaustive(b: &SampledField, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let grid = b.grid();
    let d = grid.dim();
    let n = grid.node_count();
    let mut nodes = vec![0.0; n * d];
    for i in 0..n {
        grid.node_into(i, &mut nodes[i * d..(i + 1) * d]);
    }
    let v = b.values();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let x = &nodes[i * d..(i + 1) * d];
        for j in i + 1..n {
            let dist = grid.group.gauge_dist(&nodes[j * d..(j + 1) * d], x);
            if dist > 0.0 {
                best = best.max((v[i] - v[j]).abs() / dist.powf(beta));
            }
        }
    }
    Ok(best)
}

/// `|B|^{-1-beta/Q} int_B |b - b_B|` for ball `k` of the family.
pub fn lip_ball(b: &SampledField, fam: &CompiledFamily, k: usize, beta: f64) -> f64 {
    let m = fam.members(k);
    if m.is_empty() {
        return 0.0;
    }
    let v = b.values();
    let n = m.len() as f64;
    let mut sum = 0.0;
    for &i in m {
        sum += v[i as usize];
    }
    let mean = sum / n;
    let mut dev = 0.0;
    for &i in m {
        dev += (v[i as usize] - mean).abs();
    }
    let q = fam.grid().group.q();
    (dev / n) * fam.measure(k).powf(-beta / q)
}

/// Both seminorm estimates. Pairs are exhaustive when the budget allows,
/// otherwise drawn uniformly from the seeded stream `"lip-pairs"`.
pub fn lipschitz_estimate(
    b: &SampledField,
    beta: f64,
    fam: &CompiledFamily,
    pair_budget: usize,
    seed: u64,
) -> Result<LipEstimate> {
    check_beta(beta)?;
    if pair_budget < MIN_PAIR_BUDGET {
        return Err(Error::InvalidParameter(format!(
            "pair budget must be at least {MIN_PAIR_BUDGET}, got {pair_budget}"
        )));
    }
    if b.grid().as_ref() != fam.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    let grid = b.grid();
    let n = grid.node_count();
    let all_pairs = n * (n - 1) / 2;
    let (pair_norm, pairs_evaluated, exhaustive) = if all_pairs <= pair_budget {
        (pair_seminorm_exhaustive(b, beta)?, all_pairs, true)
    } else {
        let mut r = rng::stream(seed, "lip-pairs");
        let v = b.values();
        let (mut x, mut y) = (vec![0.0; grid.dim()], vec![0.0; grid.dim()]);
        let mut best: f64 = 0.0;
        let mut evaluated = 0;
        for _ in 0..pair_budget {
            let i = r.random_range(0..n);
            let j = r.random_range(0..n);
            if i == j {
                continue;
            }
            grid.node_into(i, &mut x);
            grid.node_into(j, &mut y);
            let dist = grid.group.gauge_dist(&y, &x);
            if dist > 0.0 {
                best = best.max((v[i] - v[j]).abs() / dist.powf(beta));
                evaluated += 1;
            }
        }
        (best, evaluated, false)
    };
    let ball_norm = (0..fam.len())
        .map(|k| lip_ball(b, fam, k, beta))
        .fold(0.0, f64::max);
    let ratio = if ball_norm > 0.0 {
        pair_norm / ball_norm
    } else if pair_norm == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(LipEstimate {
        beta,
        pair_norm,
        ball_norm,
        ratio,
        pairs_evaluated,
        exhaustive,
    })
}

/// Sample points used to tabulate [`psi_from_phi`].
pub const PSI_GRID: (f64, f64, usize) = (1e-12, 1e12, 961);

/// Young function `Psi` with `Psi^{-1}(s) = Phi^{-1}(s) s^{-beta/Q}`, tabulated
/// through `(Phi^{-1}(s) s^{-beta/Q}, s)` and extended by a power tail whose
/// exponent is the last log-log slope.
pub fn psi_from_phi(phi: &YoungFunction, beta: f64, q: f64) -> Result<YoungFunction> {
    check_beta(beta)?;
    let s = log_grid(PSI_GRID.0, PSI_GRID.1, PSI_GRID.2);
    let t: Vec<f64> = s
        .iter()
        .map(|&s| phi.inverse(s) * s.powf(-beta / q))
        .collect();
    for i in 1..t.len() {
        if !(t[i] > t[i - 1] * (1.0 + 1e-9)) || !t[i].is_finite() {
            return Err(Error::NonMonotonePrescription {
                lo: s[i - 1],
                hi: s[i],
            });
        }
    }
    let n = t.len();
    let k = (s[n - 1] / s[n - 2]).ln() / (t[n - 1] / t[n - 2]).ln();
    Ok(YoungFunction::tabulated(t, s, Tail::Power(k))?
        .with_label(format!("psi[{phi}, beta={beta}, Q={q}]")))
}

/// `(ln Psi(hi) - ln Psi(lo)) / (ln hi - ln lo)`.
pub fn loglog_slope(psi: &YoungFunction, lo: f64, hi: f64) -> f64 {
    (psi.value(hi).ln() - psi.value(lo).ln()) / (hi.ln() - lo.ln())
}

/// Values of the four characterization functionals on one ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallFunctionals {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub lip_ball: f64,
}

struct BallContext {
    k: usize,
    mask: RegionMask,
    measure: f64,
}

fn ball_context(ball: &Ball, fam: &CompiledFamily) -> Result<BallContext> {
    let k = fam
        .ball_index(ball)
        .ok_or_else(|| Error::BallNotInFamily(ball.to_string()))?;
    let mask = RegionMask::from_indices(fam.grid(), fam.members(k));
    if mask.count() == 0 {
        return Err(Error::ZeroMeasure);
    }
    let measure = mask.measure();
    Ok(BallContext { k, mask, measure })
}

/// `|B|^{-beta/Q} Psi^{-1}(1/|B|) ||g||_{Psi(B)}`.
fn orlicz_scaled(
    g: &SampledField,
    psi: &YoungFunction,
    ctx: &BallContext,
    beta: f64,
    q: f64,
) -> Result<f64> {
    let norm = luxemburg_norm(g, psi, &ctx.mask)?.value;
    Ok(ctx.measure.powf(-beta / q) * psi.inverse(1.0 / ctx.measure) * norm)
}

/// `|B|^{-1-beta/Q} int_B |g|`.
fn l1_scaled(g: &SampledField, ctx: &BallContext, beta: f64, q: f64) -> Result<f64> {
    Ok(ctx.measure.powf(-1.0 - beta / q) * integrate(&g.abs(), &ctx.mask)?)
}

/// `b - M_B b` with the local maximal function over `ball`.
fn local_residual(b: &SampledField, ball: &Ball, fam: &CompiledFamily) -> Result<SampledField> {
    b.sub(&local_maximal(b, ball, fam, 0.0)?)
}

/// `b - 2 M♯(b chi_B)`.
fn sharp_residual(
    b: &SampledField,
    ctx: &BallContext,
    fam: &CompiledFamily,
) -> Result<SampledField> {
    let local = b.restricted(&ctx.mask)?;
    b.sub(&sharp_maximal(&local, fam)?.scale(2.0))
}

pub fn functional_f1(
    b: &SampledField,
    ball: &Ball,
    psi: &YoungFunction,
    beta: f64,
    fam: &CompiledFamily,
) -> Result<f64> {
    let ctx = ball_context(ball, fam)?;
    let q = fam.grid().group.q();
    orlicz_scaled(&local_residual(b, ball, fam)?, psi, &ctx, beta, q)
}

pub fn functional_f2(
    b: &SampledField,
    ball: &Ball,
    beta: f64,
    fam: &CompiledFamily,
) -> Result<f64> {
    let ctx = ball_context(ball, fam)?;
    let q = fam.grid().group.q();
    l1_scaled(&local_residual(b, ball, fam)?, &ctx, beta, q)
}

pub fn functional_f3(
    b: &SampledField,
    ball: &Ball,
    psi: &YoungFunction,
    beta: f64,
    fam: &CompiledFamily,
) -> Result<f64> {
    let ctx = ball_context(ball, fam)?;
    let q = fam.grid().group.q();
    orlicz_scaled(&sharp_residual(b, &ctx, fam)?, psi, &ctx, beta, q)
}

pub fn functional_f4(
    b: &SampledField,
    ball: &Ball,
    beta: f64,
    fam: &CompiledFamily,
) -> Result<f64> {
    let ctx = ball_context(ball, fam)?;
    let q = fam.grid().group.q();
    l1_scaled(&sharp_residual(b, &ctx, fam)?, &ctx, beta, q)
}

/// All functionals on one ball, sharing the two maximal evaluations.
pub fn ball_functionals(
    b: &SampledField,
    ball: &Ball,
    psi: &YoungFunction,
    beta: f64,
    fam: &CompiledFamily,
) -> Result<BallFunctionals> {
    check_beta(beta)?;
    let ctx = ball_context(ball, fam)?;
    let q = fam.grid().group.q();
    let local = local_residual(b, ball, fam)?;
    let sharp = sharp_residual(b, &ctx, fam)?;
    Ok(BallFunctionals {
        f1: orlicz_scaled(&local, psi, &ctx, beta, q)?,
        f2: l1_scaled(&local, &ctx, beta, q)?,
        f3: orlicz_scaled(&sharp, psi, &ctx, beta, q)?,
        f4: l1_scaled(&sharp, &ctx, beta, q)?,
        lip_ball: lip_ball(b, fam, ctx.k, beta),
    })
}

/// Norm applied to `T f` in [`operator_ratio`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetNorm {
    Luxemburg,
    Weak,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub operator: String,
    pub field: String,
    pub target_norm: f64,
    pub source_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub sup_ratio: f64,
    pub notes: Vec<String>,
}

/// `||T f||_Psi / ||f||_Phi` over a corpus; the supremum bounds the operator
/// norm from below. Zero-norm inputs are skipped with a note.
#[allow(clippy::too_many_arguments)]
pub fn operator_ratio(
    op: Operator,
    b: Option<&SampledField>,
    corpus: &[(String, SampledField)],
    phi: &YoungFunction,
    psi: &YoungFunction,
    fam: &CompiledFamily,
    alpha: f64,
    target: TargetNorm,
) -> Result<RatioTable> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter(
            "operator_ratio needs a nonempty corpus".into(),
        ));
    }
    let whole = RegionMask::whole(fam.grid());
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut sup_ratio: f64 = 0.0;
    for (name, f) in corpus {
        let source_norm = luxemburg_norm(f, phi, &whole)?.value;
        if source_norm == 0.0 {
            notes.push(format!("{name}: zero {phi} norm, skipped"));
            continue;
        }
        let tf = op.apply(b, f, fam, alpha)?;
        let target_norm = match target {
            TargetNorm::Luxemburg => luxemburg_norm(&tf, psi, &whole)?.value,
            TargetNorm::Weak => weak_norm(&tf, psi, &whole)?.value,
        };
        let ratio = target_norm / source_norm;
        sup_ratio = sup_ratio.max(ratio);
        rows.push(RatioRow {
            operator: op.name().to_string(),
            field: name.clone(),
            target_norm,
            source_norm,
            ratio,
        });
    }
    Ok(RatioTable {
        rows,
        sup_ratio,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlmostDecreasing {
    pub holds: bool,
    /// Smallest `K` with `g(t2) <= K g(t1)` for all sampled `t1 <= t2`.
    pub constant: f64,
    pub threshold: f64,
}

/// Default cap on the almost-decreasing constant.
pub const ALMOST_DECREASING_MAX: f64 = 10.0;

/// Checks that `t^{1+eps} / Psi(t)` is almost decreasing on `samples`
/// log-spaced points of `range`.
pub fn almost_decreasing_check(
    psi: &YoungFunction,
    eps: f64,
    range: (f64, f64),
    samples: usize,
    threshold: f64,
) -> Result<AlmostDecreasing> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if !(range.0 > 0.0 && range.1 >= range.0) || samples == 0 {
        return Err(Error::InvalidParameter(
            "almost-decreasing range must be positive and nonempty".into(),
        ));
    }
    let ts = log_grid(range.0, range.1, samples);
    let g: Vec<f64> = ts
        .iter()
        .map(|&t| t.powf(1.0 + eps) / psi.value(t))
        .collect();
    let mut constant: f64 = 1.0;
    let mut later_max = f64::NEG_INFINITY;
    for &gi in g.iter().rev() {
        if later_max > f64::NEG_INFINITY && gi > 0.0 {
            constant = constant.max(later_max / gi);
        }
        later_max = later_max.max(gi);
    }
    Ok(AlmostDecreasing {
        holds: constant <= threshold,
        constant,
        threshold,
    })
}

/// Inputs of [`characterization_report`].
#[derive(Clone, Debug)]
pub struct ReportOptions {
    /// Base family; probe balls and their companions are added to it.
    pub family: FamilyParams,
    /// Probe centers per axis, spread evenly over interior nodes.
    pub probes_per_axis: usize,
    /// Smallest probe radius in cells of axis 0.
    pub min_radius_cells: f64,
    pub corpus: Vec<(String, SampledField)>,
    pub target: TargetNorm,
    pub pair_budget: usize,
    pub seed: u64,
    /// Largest acceptable max/min ratio of a per-radius supremum.
    pub stability_factor: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            family: FamilyParams::default(),
            probes_per_axis: 5,
            min_radius_cells: 4.0,
            corpus: Vec::new(),
            target: TargetNorm::Luxemburg,
            pair_budget: 200_000,
            seed: 0,
            stability_factor: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallRow {
    pub id: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub lip_ball: f64,
}

/// Suprema over the probe centers at one radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub lip_ball: f64,
    /// Largest average of `b^-` over the sign-probe balls of this radius.
    pub neg_part: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignDiagnostic {
    pub negative_part_detected: bool,
    pub smallest_radius_average: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacterizationReport {
    pub beta: f64,
    pub phi: String,
    pub psi: String,
    pub per_ball: Vec<BallRow>,
    pub per_radius: Vec<RadiusRow>,
    pub sup_f1: f64,
    pub sup_f2: f64,
    pub sup_f3: f64,
    pub sup_f4: f64,
    pub sup_lip_ball: f64,
    pub lipschitz: LipEstimate,
    pub ratio_table: Vec<RatioRow>,
    pub sup_ratio: f64,
    pub sign: SignDiagnostic,
    /// Largest max/min ratio of each per-radius supremum (F1..F4).
    pub scale_spread: [f64; 4],
    pub scale_stable: bool,
    pub verdict_notes: Vec<String>,
}

pub const NEGATIVE_PART_NOTE: &str = "negative part detected";
pub const NONNEGATIVE_NOTE: &str = "nonnegative";

/// Node indices spread evenly over the interior of each axis.
fn probe_centers(grid: &crate::field::GridSpec, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<usize>> = grid
        .points_per_axis
        .iter()
        .map(|&n| {
            (1..=per_axis)
                .map(|k| ((k * (n - 1)) as f64 / (per_axis + 1) as f64).round() as usize)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        out.push(
            (0..axes.len())
                .map(|k| grid.coord(k, axes[k][idx[k]]))
                .collect(),
        );
        let mut k = axes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Dyadic probe radii from `min_cells` cells of axis 0 up to a quarter of the
/// axis-0 box width.
pub fn probe_radii(grid: &crate::field::GridSpec, min_cells: f64) -> Vec<f64> {
    let h = grid.spacing()[0];
    let top = 0.25 * (grid.hi[0] - grid.lo[0]);
    let mut r = min_cells * h;
    let mut out = Vec::new();
    while r <= top * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Per-ball functionals, per-radius suprema, seminorm estimates, operator
/// ratios for `M_b`, `[b, M]` and `[b, M♯]`, and verdict notes on scale
/// stability and on the sign of `b`.
pub fn characterization_report(
    b: &SampledField,
    beta: f64,
    phi: &YoungFunction,
    options: &ReportOptions,
) -> Result<CharacterizationReport> {
    check_beta(beta)?;
    let grid = b.grid().clone();
    let q = grid.group.q();
    let psi = psi_from_phi(phi, beta, q)?;

    let centers = probe_centers(&grid, options.probes_per_axis.max(1));
    let radii = probe_radii(&grid, options.min_radius_cells);
    if radii.is_empty() {
        return Err(Error::InvalidParameter(
            "grid too coarse for any probe radius".into(),
        ));
    }
    let sign_centers = sign_probe_centers(&grid);

    let mut family = BallFamily::generate(&grid, &options.family)?;
    let mut probes = Vec::new();
    for c in &centers {
        for &r in &radii {
            let ball = Ball::at(c, r)?;
            family = family
                .with_distinguished(ball.clone())
                .with_distinguished(companion_ball(&grid, &ball)?);
            probes.push(ball);
        }
    }
    let fam = family.compile(&grid)?;

    let mut per_ball = Vec::with_capacity(probes.len());
    for (id, ball) in probes.iter().enumerate() {
        let v = ball_functionals(b, ball, &psi, beta, &fam)?;
        per_ball.push(BallRow {
            id,
            center: ball.center.coords().to_vec(),
            radius: ball.radius,
            f1: v.f1,
            f2: v.f2,
            f3: v.f3,
            f4: v.f4,
            lip_ball: v.lip_ball,
        });
    }

    let neg = b.neg_part();
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in &radii {
        let rows = per_ball.iter().filter(|row| row.radius == r);
        let sup = |f: fn(&BallRow) -> f64| rows.clone().map(f).fold(0.0, f64::max);
        let mut neg_part: f64 = 0.0;
        for c in &sign_centers {
            let mask = RegionMask::from_ball(&Ball::at(c, r)?, &grid)?;
            if mask.count() > 0 {
                neg_part = neg_part.max(integrate(&neg, &mask)? / mask.measure());
            }
        }
        per_radius.push(RadiusRow {
            radius: r,
            f1: sup(|x| x.f1),
            f2: sup(|x| x.f2),
            f3: sup(|x| x.f3),
            f4: sup(|x| x.f4),
            lip_ball: sup(|x| x.lip_ball),
            neg_part,
        });
    }
    let col_max = |f: fn(&BallRow) -> f64| per_ball.iter().map(f).fold(0.0, f64::max);

    let tolerance = 1e-6 * b.max_abs().max(f64::MIN_POSITIVE);
    let sign = SignDiagnostic {
        negative_part_detected: per_radius[0].neg_part > 10.0 * tolerance,
        smallest_radius_average: per_radius[0].neg_part,
        threshold: 10.0 * tolerance,
    };

    let spread = |f: fn(&RadiusRow) -> f64| -> f64 {
        let values: Vec<f64> = per_radius.iter().map(f).collect();
        let hi = values.iter().cloned().fold(0.0, f64::max);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi <= tolerance {
            1.0
        } else if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    };
    let scale_spread = [
        spread(|r| r.f1),
        spread(|r| r.f2),
        spread(|r| r.f3),
        spread(|r| r.f4),
    ];
    let scale_stable = scale_spread.iter().all(|&s| s <= options.stability_factor);

    let lipschitz = lipschitz_estimate(b, beta, &fam, options.pair_budget, options.seed)?;

    let mut ratio_table = Vec::new();
    let mut sup_ratio: f64 = 0.0;
    let mut verdict_notes = Vec::new();
    if !options.corpus.is_empty() {
        for op in [Operator::MaxComm, Operator::CommMax, Operator::CommSharp] {
            let table = operator_ratio(
                op,
                Some(b),
                &options.corpus,
                phi,
                &psi,
                &fam,
                0.0,
                options.target,
            )?;
            sup_ratio = sup_ratio.max(table.sup_ratio);
            ratio_table.extend(table.rows);
            verdict_notes.extend(table.notes);
        }
    }

    verdict_notes.push(if scale_stable {
        format!(
            "scale-stable: per-radius suprema of F1..F4 vary by at most {:.3} (limit {})",
            scale_spread.iter().cloned().fold(0.0, f64::max),
            options.stability_factor
        )
    } else {
        format!(
            "not scale-stable: per-radius spread F1..F4 = [{:.3}, {:.3}, {:.3}, {:.3}] exceeds {}",
            scale_spread[0],
            scale_spread[1],
            scale_spread[2],
            scale_spread[3],
            options.stability_factor
        )
    });
    verdict_notes.push(if sign.negative_part_detected {
        format!(
            "sign: {NEGATIVE_PART_NOTE} (average of b^- at radius {:.4e} is {:.4e} > {:.1e})",
            radii[0], sign.smallest_radius_average, sign.threshold
        )
    } else {
        format!(
            "sign: {NONNEGATIVE_NOTE} (average of b^- at radius {:.4e} is {:.4e} <= {:.1e})",
            radii[0], sign.smallest_radius_average, sign.threshold
        )
    });
    verdict_notes.push(format!(
        "pair/ball seminorm ratio {:.4} ({} pairs{})",
        lipschitz.ratio,
        lipschitz.pairs_evaluated,
        if lipschitz.exhaustive {
            ", exhaustive"
        } else {
            ", sampled"
        }
    ));

    Ok(CharacterizationReport {
        beta,
        phi: phi.to_string(),
        psi: psi.to_string(),
        sup_f1: col_max(|x| x.f1),
        sup_f2: col_max(|x| x.f2),
        sup_f3: col_max(|x| x.f3),
        sup_f4: col_max(|x| x.f4),
        sup_lip_ball: col_max(|x| x.lip_ball),
        per_ball,
        per_radius,
        lipschitz,
        ratio_table,
        sup_ratio,
        sign,
        scale_spread,
        scale_stable,
        verdict_notes,
    })
}

/// Ten nodes spread along the flat index order, away from the box ends.
fn sign_probe_centers(grid: &Arc<crate::field::GridSpec>) -> Vec<Vec<f64>> {
    let n = grid.node_count();
    (0..10).map(|k| grid.node(((2 * k + 1) * n) / 20)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::geometry::GroupSpec;
    use crate::maximal::FamilyParams;

    fn line(n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::centered(GroupSpec::euclidean(1).unwrap(), &[1.0], n).unwrap())
    }

    fn fam_with(g: &Arc<GridSpec>, balls: &[Ball]) -> CompiledFamily {
        let params = FamilyParams {
            centers_stride: 8,
            r_max: Some(1.0),
            cover: true,
            ..FamilyParams::default()
        };
        let mut fam = BallFamily::generate(g, &params).unwrap();
        for b in balls {
            fam = fam.with_distinguished(b.clone());
        }
        fam.compile(g).unwrap()
    }

    #[test]
    fn constant_symbol_has_zero_seminorms() {
        let g = line(129);
        let fam = fam_with(&g, &[]);
        let c = SampledField::constant(&g, 2.0).unwrap();
        let est = lipschitz_estimate(&c, 0.5, &fam, 10_000, 1).unwrap();
        assert_eq!((est.pair_norm, est.ball_norm), (0.0, 0.0));
        assert!(lipschitz_estimate(&c, 0.5, &fam, 10, 1).is_err());
    }

    #[test]
    fn root_gauge_pair_norm() {
        let g = line(257);
        let fam = fam_with(&g, &[]);
        let b = SampledField::sample(&g, |x| x[0].abs().sqrt()).unwrap();
        let est = lipschitz_estimate(&b, 0.5, &fam, 100_000, 1).unwrap();
        assert!(est.exhaustive);
        assert!((0.9..=1.1).contains(&est.pair_norm), "{}", est.pair_norm);
        let sampled = lipschitz_estimate(&b, 0.5, &fam, 5_000, 1).unwrap();
        assert!(!sampled.exhaustive && sampled.pair_norm <= est.pair_norm);
    }

    #[test]
    fn psi_exponent_arithmetic() {
        for (p, q_dim) in [(1.5, 1.0), (1.5, 4.0), (2.0, 4.0)] {
            let phi = YoungFunction::power(p).unwrap();
            let psi = psi_from_phi(&phi, 0.5, q_dim).unwrap();
            let q = 1.0 / (1.0 / p - 0.5 / q_dim);
            let (lo, hi) = (psi.inverse(1e-6), psi.inverse(1e6));
            assert!((loglog_slope(&psi, lo, hi) - q).abs() < 1e-3);
            for s in log_grid(PSI_GRID.0, PSI_GRID.1, PSI_GRID.2)
                .into_iter()
                .step_by(7)
            {
                let back = psi.inverse(s) * s.powf(0.5 / q_dim);
                assert!((back - phi.inverse(s)).abs() <= 1e-6 * phi.inverse(s));
            }
        }
        let phi = YoungFunction::power(2.0).unwrap();
        assert!(matches!(
            psi_from_phi(&phi, 0.5, 1.0),
            Err(Error::NonMonotonePrescription { .. })
        ));
        assert!(psi_from_phi(&YoungFunction::power(3.0).unwrap(), 0.5, 1.0).is_err());
    }

    #[test]
    fn almost_decreasing_examples() {
        let p3 = YoungFunction::power(3.0).unwrap();
        let r = almost_decreasing_check(&p3, 0.5, (1e-3, 1e3), 200, ALMOST_DECREASING_MAX).unwrap();
        assert!(r.holds && r.constant == 1.0);
        let p1 = YoungFunction::power(1.0).unwrap();
        let r = almost_decreasing_check(&p1, 0.5, (1e-3, 1e3), 200, ALMOST_DECREASING_MAX).unwrap();
        assert!(!r.holds);
        assert!((r.constant - 1e3).abs() < 1e-6 * 1e3);
        let r = almost_decreasing_check(&p1, 0.5, (2.0, 2.0), 1, ALMOST_DECREASING_MAX).unwrap();
        assert!(r.holds && r.constant == 1.0);
    }

    #[test]
    fn functional_examples() {
        let g = line(257);
        let ball = Ball::at(&[0.0], 0.25).unwrap();
        let companion = Ball::at(&[0.0], 0.5).unwrap();
        let fam = fam_with(&g, &[ball.clone(), companion]);
        let psi = psi_from_phi(&YoungFunction::power(1.5).unwrap(), 0.5, 1.0).unwrap();

        let c = SampledField::constant(&g, 1.5).unwrap();
        let v = ball_functionals(&c, &ball, &psi, 0.5, &fam).unwrap();
        assert!(v.f1.abs() < 1e-12 && v.f2.abs() < 1e-12);
        // M♯(chi_B) = 1/2 up to the discrete count of the companion ball.
        assert!(v.f3 < 0.05 * 1.5 && v.f4 < 0.05 * 1.5);

        let chi = SampledField::indicator(&RegionMask::from_ball(&ball, &g).unwrap());
        assert!(functional_f1(&chi, &ball, &psi, 0.5, &fam).unwrap().abs() < 1e-12);

        let minus = SampledField::constant(&g, -1.0).unwrap();
        let m = RegionMask::from_ball(&ball, &g).unwrap().measure();
        let f2 = functional_f2(&minus, &ball, 0.5, &fam).unwrap();
        assert!((f2 - 2.0 * m.powf(-0.5)).abs() < 1e-9 * f2);
        assert!(functional_f4(&minus, &ball, 0.5, &fam).unwrap() > 1.0);

        let far = Ball::at(&[0.3], 0.1).unwrap();
        assert!(matches!(
            functional_f2(&c, &far, 0.5, &fam),
            Err(Error::BallNotInFamily(_))
        ));
    }

    #[test]
    fn ratio_examples() {
        let g = line(129);
        let ball = Ball::at(&[0.0], 0.25).unwrap();
        let fam = fam_with(&g, std::slice::from_ref(&ball));
        let phi = YoungFunction::power(2.0).unwrap();
        let chi = SampledField::indicator(&RegionMask::from_ball(&ball, &g).unwrap());
        let bump = SampledField::sample(&g, |x| 1.0 - x[0] * x[0]).unwrap();
        let zero = SampledField::constant(&g, 0.0).unwrap();
        let corpus = vec![
            ("chi".to_string(), chi),
            ("bump".to_string(), bump),
            ("zero".to_string(), zero),
        ];
        let c = SampledField::constant(&g, 3.0).unwrap();
        let t = operator_ratio(
            Operator::MaxComm,
            Some(&c),
            &corpus,
            &phi,
            &phi,
            &fam,
            0.0,
            TargetNorm::Luxemburg,
        )
        .unwrap();
        assert_eq!(t.sup_ratio, 0.0);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.notes.len(), 1);
        let t = operator_ratio(
            Operator::Maximal,
            None,
            &corpus,
            &phi,
            &phi,
            &fam,
            0.0,
            TargetNorm::Luxemburg,
        )
        .unwrap();
        assert!(t.sup_ratio >= 1.0 && t.sup_ratio.is_finite());
        let sub = operator_ratio(
            Operator::Maximal,
            None,
            &corpus[..1],
            &phi,
            &phi,
            &fam,
            0.0,
            TargetNorm::Weak,
        )
        .unwrap();
        let full = operator_ratio(
            Operator::Maximal,
            None,
            &corpus,
            &phi,
            &phi,
            &fam,
            0.0,
            TargetNorm::Weak,
        )
        .unwrap();
        assert!(full.sup_ratio >= sub.sup_ratio);
    }

    #[test]
    fn lip_ball_shift_covariance() {
        let g = line(129);
        let fam = fam_with(&g, &[]);
        let b = SampledField::sample(&g, |x| (3.0 * x[0]).sin()).unwrap();
        let shifted = b.add(&SampledField::constant(&g, 5.25).unwrap()).unwrap();
        for k in 0..fam.len() {
            let (a, s) = (lip_ball(&b, &fam, k, 0.5), lip_ball(&shifted, &fam, k, 0.5));
            assert!((a - s).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn report_on_constant_and_signed_symbols() {
        let g = line(257);
        let options = ReportOptions {
            family: FamilyParams {
                centers_stride: 8,
                r_max: Some(1.0),
                cover: true,
                ..FamilyParams::default()
            },
            probes_per_axis: 3,
            ..ReportOptions::default()
        };
        let phi = YoungFunction::power(1.5).unwrap();
        let one = SampledField::constant(&g, 1.0).unwrap();
        let r = characterization_report(&one, 0.5, &phi, &options).unwrap();
        assert!(r.sup_f1 < 1e-9 && r.sup_f2 < 1e-9);
        assert!(!r.sign.negative_part_detected);
        assert!(r.verdict_notes.iter().any(|n| n.contains(NONNEGATIVE_NOTE)));

        let neg = SampledField::sample(&g, |x| -x[0].abs().sqrt()).unwrap();
        let r = characterization_report(&neg, 0.5, &phi, &options).unwrap();
        assert!(r.sign.negative_part_detected);
        assert!(r
            .verdict_notes
            .iter()
            .any(|n| n.contains(NEGATIVE_PART_NOTE)));
        for row in &r.per_ball {
            assert!(row.f2 <= 2.0 * row.f1 * (1.0 + 1e-9) + 1e-9);
            assert!(row.f4 <= 2.0 * row.f3 * (1.0 + 1e-9) + 1e-9);
        }
    }
}
