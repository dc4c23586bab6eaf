//! The `verify` suite: every identity and inequality of the library, run on
//! the configured grid, family and corpus.
//!
//! Each check reduces to one number `measured` compared against `tolerance`;
//! `slack = tolerance - measured` and the check passes iff `slack >= 0`.

use crate::config::{max_points_per_axis, Resolved};
use crate::error::CliError;
use maxlab::corpus::Generator;
use maxlab::field::{average_over, RegionMask};
use maxlab::lipschitz::{
    almost_decreasing_check, loglog_slope, pair_seminorm_exhaustive, psi_from_phi,
    ALMOST_DECREASING_MAX,
};
use maxlab::maximal::{
    commutator_maximal, companion_ball, fractional_maximal, maximal_commutator, pwslip_constant,
    sharp_maximal, BallFamily, CompiledFamily, Operator,
};
use maxlab::orlicz::{holder_check, luxemburg_norm, mean_bound_check, weak_norm};
use maxlab::young::{check_young_pair, log_grid};
use maxlab::{Ball, Error, GridSpec, SampledField, YoungFamily, YoungFunction};
use serde::Serialize;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// The statement being checked.
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    pub slack: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub group: String,
    pub points_per_axis: Vec<usize>,
    pub family_size: usize,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckResult>,
}

const PAIR_BOUND: &str = "Young pair bound: r <= Phi^-1(r) Phi~^-1(r) <= 2r";
const INDICATOR_LAW: &str = "indicator norm law: ||chi_D|| = 1/Phi^-1(1/|D|) for both norms";
const WEAK_STRONG: &str = "weak Orlicz norm is at most the Luxemburg norm";
const HOLDER: &str = "Orlicz Holder inequality: int |f g| <= 2 ||f||_Phi ||g||_Phi~";
const MEAN_BOUND: &str = "ball mean bound: int_B |f| <= 2 |B| Phi^-1(1/|B|) ||f||_Phi(B)";
const MAXIMAL_ID: &str = "maximal identity: M_alpha chi_B = |B|^(alpha/Q) on B";
const SHARP_HALF: &str = "sharp maximal half identity: M# chi_B = 1/2 on B";
const SHARP_CONST: &str = "sharp maximal function of a constant vanishes";
const ORACLE: &str = "fast kernels equal the brute-force oracle bitwise";
const COMM_POS: &str = "|[b, M] f| <= M_b f for b >= 0";
const COMM_SIGNED: &str = "|[b, M] f| <= M_b f + 2 b^- M f";
const OSC_BOUND: &str = "|b - b_B| <= M_b chi_B on B";
const LIP_BOUND: &str = "M_b f <= C ||b||_Lip(beta) M_beta f";
const EXPONENT: &str =
    "exponent arithmetic: Psi^-1(t) = Phi^-1(t) t^(-beta/Q) has slope q with 1/p - 1/q = beta/Q";
const ALMOST_DEC: &str = "t^(1+eps) / Psi(t) is almost decreasing";

struct Measured {
    measured: f64,
    tolerance: f64,
    detail: String,
}

fn measured(measured: f64, tolerance: f64, detail: impl Into<String>) -> Measured {
    Measured {
        measured,
        tolerance,
        detail: detail.into(),
    }
}

fn record(
    checks: &mut Vec<CheckResult>,
    name: String,
    anchor: &str,
    outcome: Result<Measured, Error>,
) {
    let result = match outcome {
        Ok(m) => {
            let slack = m.tolerance - m.measured;
            CheckResult {
                name,
                anchor: anchor.into(),
                measured: m.measured,
                tolerance: m.tolerance,
                slack,
                pass: slack >= 0.0,
                detail: m.detail,
            }
        }
        Err(e) => CheckResult {
            name,
            anchor: anchor.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            slack: f64::NAN,
            pass: false,
            detail: format!("error: {e}"),
        },
    };
    checks.push(result);
}

/// Node nearest the middle of the box.
fn center_node(grid: &GridSpec) -> Vec<f64> {
    (0..grid.dim())
        .map(|k| grid.coord(k, (grid.points_per_axis[k] - 1) / 2))
        .collect()
}

/// Test ball `B0` at the center node with radius a quarter of the axis-0
/// half-width, plus its companion of twice the node count.
pub fn test_balls(grid: &GridSpec) -> Result<(Ball, Ball), Error> {
    let b0 = Ball::at(&center_node(grid), 0.125 * (grid.hi[0] - grid.lo[0]))?;
    let companion = companion_ball(grid, &b0)?;
    Ok((b0, companion))
}

pub fn build_family(
    resolved: &Resolved,
    grid: &Arc<GridSpec>,
    extra: &[Ball],
) -> Result<CompiledFamily, Error> {
    let mut fam = BallFamily::generate(grid, &resolved.config.family)?;
    for b in extra {
        fam = fam.with_distinguished(b.clone());
    }
    fam.compile(grid)
}

fn max_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the suite. Errors only for problems with the configuration itself;
/// failures inside a check are recorded in the report.
pub fn run_verify(resolved: &Resolved) -> Result<VerifyReport, CliError> {
    let grid = &resolved.grid;
    let cfg = &resolved.config;
    let tol = &cfg.tolerances;
    let (b0, companion) = test_balls(grid)?;
    let fam = build_family(resolved, grid, &[b0.clone(), companion])?;
    if let Some(i) = fam.first_uncovered() {
        return Err(CliError::Config(format!(
            "node {i} {:?} is covered by no ball; enable family.cover or widen the radii",
            grid.node(i)
        )));
    }
    let mask0 = RegionMask::from_ball(&b0, grid)?;
    let whole = RegionMask::whole(grid);
    let q = grid.group.q();
    let beta = cfg.verify.beta;
    let mut checks = Vec::new();

    let r_grid = log_grid(1e-6, 1e6, 100);
    for phi in &resolved.young {
        let outcome = check_young_pair(phi, &r_grid).map(|r| {
            let excess = (r.max_ratio - 2.0).max(1.0 - r.min_ratio).max(0.0);
            measured(
                excess,
                tol.relative,
                format!("ratios in [{:.9}, {:.9}]", r.min_ratio, r.max_ratio),
            )
        });
        record(
            &mut checks,
            format!("young-pair/{phi}"),
            PAIR_BOUND,
            outcome,
        );
    }

    let chi0 = SampledField::indicator(&mask0);
    for phi in &resolved.young {
        let outcome = (|| {
            let expected = 1.0 / phi.inverse(1.0 / mask0.measure());
            let strong = luxemburg_norm(&chi0, phi, &whole)?.value;
            let weak = weak_norm(&chi0, phi, &whole)?.value;
            let err = max_rel(strong, expected).max(max_rel(weak, expected));
            Ok(measured(
                err,
                tol.relative,
                format!("strong {strong:.12}, weak {weak:.12}, law {expected:.12}"),
            ))
        })();
        record(
            &mut checks,
            format!("indicator-norm/{phi}"),
            INDICATOR_LAW,
            outcome,
        );
    }

    for phi in &resolved.young {
        let outcome = (|| {
            let mut worst = f64::NEG_INFINITY;
            let mut at = "";
            for (name, f) in &resolved.corpus {
                let strong = luxemburg_norm(f, phi, &whole)?.value;
                let weak = weak_norm(f, phi, &whole)?.value;
                let excess = if strong > 0.0 {
                    (weak - strong) / strong
                } else {
                    weak
                };
                if excess > worst {
                    worst = excess;
                    at = name;
                }
            }
            Ok(measured(
                worst.max(0.0),
                tol.ordering,
                format!("largest (weak - strong)/strong {worst:.3e} at {at}"),
            ))
        })();
        record(
            &mut checks,
            format!("weak-strong/{phi}"),
            WEAK_STRONG,
            outcome,
        );
    }

    for phi in &resolved.young {
        let outcome = (|| {
            let mut worst: f64 = 0.0;
            for k in 0..cfg.verify.pairs as u64 {
                let f = Generator::Noise {
                    seed: cfg.seed.wrapping_add(2 * k),
                }
                .sample(grid)?;
                let g = Generator::Noise {
                    seed: cfg.seed.wrapping_add(2 * k + 1),
                }
                .sample(grid)?;
                let c = holder_check(&f, &g, phi, &whole)?;
                worst = worst.max(c.lhs / c.rhs - 1.0);
            }
            Ok(measured(
                worst.max(0.0),
                tol.relative,
                format!("max lhs/rhs = {:.6}", worst + 1.0),
            ))
        })();
        record(&mut checks, format!("holder/{phi}"), HOLDER, outcome);
    }

    for phi in &resolved.young {
        let outcome = (|| {
            let mut worst = f64::NEG_INFINITY;
            for (_, f) in &resolved.corpus {
                let c = mean_bound_check(f, phi, &b0)?;
                if c.rhs > 0.0 {
                    worst = worst.max(c.lhs / c.rhs - 1.0);
                } else if c.lhs > 0.0 {
                    worst = f64::INFINITY;
                }
            }
            Ok(measured(
                worst.max(0.0),
                tol.relative,
                format!("max lhs/rhs = {:.6}", worst + 1.0),
            ))
        })();
        record(
            &mut checks,
            format!("mean-bound/{phi}"),
            MEAN_BOUND,
            outcome,
        );
    }

    for alpha in [0.0, cfg.verify.alpha] {
        let outcome = (|| {
            let out = fractional_maximal(&chi0, &fam, alpha)?;
            let expected = mask0.measure().powf(alpha / q);
            let worst = mask0
                .indices()
                .map(|i| max_rel(out.values()[i], expected))
                .fold(0.0, f64::max);
            Ok(measured(
                worst,
                tol.relative,
                format!("expected {expected:.12}"),
            ))
        })();
        record(
            &mut checks,
            format!("maximal-identity/alpha={alpha}"),
            MAXIMAL_ID,
            outcome,
        );
    }

    let outcome = (|| {
        let out = sharp_maximal(&chi0, &fam)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in mask0.indices() {
            lo = lo.min(out.values()[i]);
            hi = hi.max(out.values()[i]);
        }
        let excess = (tol.sharp_half_min - lo).max(hi - 0.5).max(0.0);
        Ok(measured(
            excess,
            tol.absolute,
            format!("values on B in [{lo:.6}, {hi:.6}]"),
        ))
    })();
    record(&mut checks, "sharp-half".into(), SHARP_HALF, outcome);

    let outcome = (|| {
        let out = sharp_maximal(
            &SampledField::constant(grid, 1.0 + cfg.seed as f64 % 7.0 / 3.0)?,
            &fam,
        )?;
        let worst = out.values().iter().cloned().fold(0.0, f64::max);
        Ok(measured(worst, 0.0, "exact zero required"))
    })();
    record(&mut checks, "sharp-constant".into(), SHARP_CONST, outcome);

    record(
        &mut checks,
        "oracle-equivalence".into(),
        ORACLE,
        oracle_check(resolved),
    );

    pointwise_checks(resolved, &fam, &b0, &mut checks);

    for phi in &resolved.young {
        let YoungFamily::Power { p, .. } = phi.family else {
            continue;
        };
        let inv_q = 1.0 / p - beta / q;
        let outcome = match psi_from_phi(phi, beta, q) {
            Ok(psi) => {
                let slope = loglog_slope(&psi, psi.inverse(1e-6), psi.inverse(1e6));
                let err = if inv_q > 0.0 {
                    (slope - 1.0 / inv_q).abs()
                } else {
                    f64::INFINITY
                };
                Ok(measured(
                    err,
                    tol.slope,
                    format!("slope {slope:.6}, q = {:.6}", 1.0 / inv_q),
                ))
            }
            Err(Error::NonMonotonePrescription { .. }) if inv_q <= 0.0 => Ok(measured(
                0.0,
                tol.slope,
                "q is infinite; prescription rejected as expected",
            )),
            Err(e) => Err(e),
        };
        record(&mut checks, format!("exponent/{phi}"), EXPONENT, outcome);

        if inv_q > 0.0 {
            let q_exp = 1.0 / inv_q;
            let eps = cfg.verify.eps.min(0.5 * (q_exp - 1.0));
            let outcome = psi_from_phi(phi, beta, q).and_then(|psi| {
                // Sampled where Psi is tabulated, not on its extrapolated ends.
                let range = (psi.inverse(1e-6), psi.inverse(1e6));
                let r = almost_decreasing_check(&psi, eps, range, 241, ALMOST_DECREASING_MAX)?;
                Ok(measured(
                    r.constant,
                    r.threshold,
                    format!("eps = {eps:.4}, K = {:.4}", r.constant),
                ))
            });
            record(
                &mut checks,
                format!("almost-decreasing/psi({phi})"),
                ALMOST_DEC,
                outcome,
            );
        }
    }

    for ad in &cfg.verify.almost_decreasing {
        let psi = YoungFunction::from_str(&ad.psi)?;
        let outcome =
            almost_decreasing_check(&psi, ad.eps, (1e-6, 1e6), 241, ALMOST_DECREASING_MAX).map(
                |r| {
                    measured(
                        r.constant,
                        r.threshold,
                        format!("eps = {}, K = {:.4e}", ad.eps, r.constant),
                    )
                },
            );
        record(
            &mut checks,
            format!("almost-decreasing/{psi}/eps={}", ad.eps),
            ALMOST_DEC,
            outcome,
        );
    }

    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(VerifyReport {
        group: grid.group.name(),
        points_per_axis: grid.points_per_axis.clone(),
        family_size: fam.len(),
        seed: cfg.seed,
        passed,
        failed: checks.len() - passed,
        checks,
    })
}

/// Oracle comparison on a coarse copy of the grid, small enough for the
/// quadratic reference kernels.
fn oracle_check(resolved: &Resolved) -> Result<Measured, Error> {
    let grid = &resolved.grid;
    let cap = match grid.dim() {
        1 => 65,
        2 => 17,
        _ => 9,
    }
    .min(max_points_per_axis(grid.dim()));
    let points = grid.points_per_axis.iter().map(|&n| n.min(cap)).collect();
    let coarse = Arc::new(GridSpec::new(
        grid.group.clone(),
        grid.lo.clone(),
        grid.hi.clone(),
        points,
    )?);
    let mut params = resolved.config.family.clone();
    params.centers_stride = params.centers_stride.min(4);
    params.r_min = None;
    let fam = BallFamily::generate(&coarse, &params)?
        .with_cover(&coarse)
        .compile(&coarse)?;
    let seed = resolved.config.seed;
    let b = Generator::Noise { seed }.sample(&coarse)?;
    let f = Generator::Noise {
        seed: seed.wrapping_add(1),
    }
    .sample(&coarse)?;
    let mut mismatches = 0usize;
    let mut compared = 0usize;
    for op in Operator::ALL {
        for alpha in [0.0, resolved.config.verify.alpha] {
            let fast = op.apply(Some(&b), &f, &fam, alpha)?;
            let slow = op.apply_oracle(Some(&b), &f, &fam, alpha)?;
            compared += fast.values().len();
            mismatches += fast
                .values()
                .iter()
                .zip(slow.values())
                .filter(|(x, y)| x.to_bits() != y.to_bits())
                .count();
        }
    }
    Ok(measured(
        mismatches as f64,
        0.0,
        format!(
            "{mismatches} of {compared} outputs differ on a {:?} grid with {} balls",
            coarse.points_per_axis,
            fam.len()
        ),
    ))
}

/// Largest `lhs - rhs` over the nodes selected by `on`.
fn excess(lhs: &[f64], rhs: &[f64], on: Option<&RegionMask>) -> f64 {
    (0..lhs.len())
        .filter(|&i| on.is_none_or(|m| m.contains(i)))
        .map(|i| lhs[i] - rhs[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn pointwise_checks(
    resolved: &Resolved,
    fam: &CompiledFamily,
    b0: &Ball,
    checks: &mut Vec<CheckResult>,
) {
    let grid = &resolved.grid;
    let cfg = &resolved.config;
    let beta = cfg.verify.beta;
    let tol = cfg.tolerances.absolute;
    let mut worst = [f64::NEG_INFINITY; 4];
    let outcome = (|| -> Result<(), Error> {
        let mask0 = RegionMask::from_ball(b0, grid)?;
        let chi0 = SampledField::indicator(&mask0);
        for k in 0..cfg.verify.pairs as u64 {
            let seed = cfg.seed.wrapping_add(1000 + k);
            let b = Generator::RandomSmooth { seed }.sample(grid)?;
            let f = Generator::Noise { seed }.sample(grid)?;

            let bp = b.abs();
            let comm = commutator_maximal(&bp, &f, fam, 0.0)?.abs();
            let mb = maximal_commutator(&bp, &f, fam, 0.0)?;
            worst[0] = worst[0].max(excess(comm.values(), mb.values(), None));

            let comm = commutator_maximal(&b, &f, fam, 0.0)?.abs();
            let mb = maximal_commutator(&b, &f, fam, 0.0)?;
            let mf = fractional_maximal(&f, fam, 0.0)?;
            let rhs = mb.add(&b.neg_part().mul(&mf)?.scale(2.0))?;
            worst[1] = worst[1].max(excess(comm.values(), rhs.values(), None));

            let mean = average_over(&b, &mask0)?;
            let lhs: Vec<f64> = b.values().iter().map(|v| (v - mean).abs()).collect();
            let rhs = maximal_commutator(&b, &chi0, fam, 0.0)?;
            worst[2] = worst[2].max(excess(&lhs, rhs.values(), Some(&mask0)));

            let lip = pair_seminorm_exhaustive(&b, beta)?;
            let c = pwslip_constant(lip, beta, fam)?;
            let rhs = fractional_maximal(&f, fam, beta)?.scale(c);
            worst[3] = worst[3].max(excess(mb.values(), rhs.values(), None));
        }
        Ok(())
    })();
    let names = [
        "commutator-positive",
        "commutator-signed",
        "oscillation-bound",
        "lipschitz-bound",
    ];
    let anchors = [COMM_POS, COMM_SIGNED, OSC_BOUND, LIP_BOUND];
    for k in 0..4 {
        let result = match &outcome {
            Ok(()) => Ok(measured(
                worst[k].max(0.0),
                tol,
                format!(
                    "max lhs - rhs = {:.3e} over {} pairs",
                    worst[k], cfg.verify.pairs
                ),
            )),
            Err(e) => Err(e.clone()),
        };
        record(checks, names[k].into(), anchors[k], result);
    }
}
