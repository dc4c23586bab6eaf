use super::family::CompiledFamily;
use super::kernel::{exponent, oscillation, scaled};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::geometry::Ball;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Balls handled per parallel batch in the commutator kernel; bounds the
/// scratch memory to one batch of per-member values.
const BATCH: usize = 64;

/// Exponent and smoothness parameters shared by the operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub alpha: f64,
    pub beta: f64,
}

impl OperatorParams {
    pub fn validate(&self, q: f64) -> Result<()> {
        check_alpha(self.alpha, q)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64, q: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha < q) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, {q}), got {alpha}"
        )));
    }
    Ok(())
}

pub(crate) fn check_field(f: &SampledField, fam: &CompiledFamily) -> Result<()> {
    if f.grid().as_ref() == fam.grid().as_ref() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Turns a scatter buffer into a field, rejecting nodes no ball reached.
pub(crate) fn finish(fam: &CompiledFamily, out: Vec<f64>) -> Result<SampledField> {
    if let Some(index) = out.iter().position(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::NodeUncovered {
            index,
            coords: fam.grid().node(index),
        });
    }
    Ok(SampledField::from_raw(fam.grid().clone(), out))
}

fn scatter_max(fam: &CompiledFamily, per_ball: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; fam.grid().node_count()];
    for (k, &v) in per_ball.iter().enumerate() {
        for &i in fam.members(k) {
            let slot = &mut out[i as usize];
            if v > *slot {
                *slot = v;
            }
        }
    }
    out
}

/// `M_alpha f(x) = max over balls B containing x of |B|^{alpha/Q - 1} int_B |f|`.
pub fn fractional_maximal(
    f: &SampledField,
    fam: &CompiledFamily,
    alpha: f64,
) -> Result<SampledField> {
    check_field(f, fam)?;
    let q = fam.grid().group.q();
    check_alpha(alpha, q)?;
    let (vol, e) = (fam.grid().cell_volume(), exponent(alpha, q));
    let v = f.values();
    let per_ball: Vec<f64> = (0..fam.len())
        .into_par_iter()
        .map(|k| {
            let m = fam.members(k);
            let mut acc = 0.0;
            for &i in m {
                acc += v[i as usize].abs();
            }
            scaled(acc, m.len(), vol, e)
        })
        .collect();
    finish(fam, scatter_max(fam, &per_ball))
}

/// `M♯ f(x) = max over balls B containing x of the mean oscillation of f on B`.
pub fn sharp_maximal(f: &SampledField, fam: &CompiledFamily) -> Result<SampledField> {
    check_field(f, fam)?;
    let v = f.values();
    let per_ball: Vec<f64> = (0..fam.len())
        .into_par_iter()
        .map(|k| {
            let m = fam.members(k);
            oscillation(m.iter().map(|&i| v[i as usize]), m.len())
        })
        .collect();
    finish(fam, scatter_max(fam, &per_ball))
}

/// `M_{b,alpha} f(x) = max over B containing x of |B|^{alpha/Q - 1} int_B |b(x) - b(y)| |f(y)| dy`.
pub fn maximal_commutator(
    b: &SampledField,
    f: &SampledField,
    fam: &CompiledFamily,
    alpha: f64,
) -> Result<SampledField> {
    check_field(b, fam)?;
    check_field(f, fam)?;
    let q = fam.grid().group.q();
    check_alpha(alpha, q)?;
    let (vol, e) = (fam.grid().cell_volume(), exponent(alpha, q));
    let (bv, fv) = (b.values(), f.values());
    let mut out = vec![f64::NEG_INFINITY; fam.grid().node_count()];
    let ks: Vec<usize> = (0..fam.len()).collect();
    for batch in ks.chunks(BATCH) {
        let values: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|&k| {
                let m = fam.members(k);
                // Terms with f(y) = 0 add exactly zero.
                let (ys, ws): (Vec<f64>, Vec<f64>) = m
                    .iter()
                    .map(|&i| (bv[i as usize], fv[i as usize].abs()))
                    .filter(|(_, w)| *w != 0.0)
                    .unzip();
                m.iter()
                    .map(|&x| {
                        let bx = bv[x as usize];
                        let mut acc = 0.0;
                        for (y, w) in ys.iter().zip(&ws) {
                            acc += (bx - y).abs() * w;
                        }
                        scaled(acc, m.len(), vol, e)
                    })
                    .collect()
            })
            .collect();
        for (&k, vals) in batch.iter().zip(&values) {
            for (&i, &v) in fam.members(k).iter().zip(vals) {
                let slot = &mut out[i as usize];
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    finish(fam, out)
}

/// `[b, M_alpha] f = b M_alpha f - M_alpha(b f)`.
pub fn commutator_maximal(
    b: &SampledField,
    f: &SampledField,
    fam: &CompiledFamily,
    alpha: f64,
) -> Result<SampledField> {
    let mf = fractional_maximal(f, fam, alpha)?;
    let mbf = fractional_maximal(&b.mul(f)?, fam, alpha)?;
    b.mul(&mf)?.sub(&mbf)
}

/// `[b, M♯] f = b M♯ f - M♯(b f)`.
pub fn commutator_sharp(
    b: &SampledField,
    f: &SampledField,
    fam: &CompiledFamily,
) -> Result<SampledField> {
    let mf = sharp_maximal(f, fam)?;
    let mbf = sharp_maximal(&b.mul(f)?, fam)?;
    b.mul(&mf)?.sub(&mbf)
}

/// `M_{alpha,B0} f`: the supremum restricted to family balls whose node sets lie
/// inside that of `b0`, with `b0` itself always a candidate. Zero off `b0`.
pub fn local_maximal(
    f: &SampledField,
    b0: &Ball,
    fam: &CompiledFamily,
    alpha: f64,
) -> Result<SampledField> {
    check_field(f, fam)?;
    let grid = fam.grid();
    let q = grid.group.q();
    check_alpha(alpha, q)?;
    let base = grid.ball_members(b0);
    if base.is_empty() {
        return Err(Error::ZeroMeasure);
    }
    let mut inside = vec![false; grid.node_count()];
    for &i in &base {
        inside[i as usize] = true;
    }
    let (vol, e) = (grid.cell_volume(), exponent(alpha, q));
    let v = f.values();
    let value = |m: &[u32]| {
        let mut acc = 0.0;
        for &i in m {
            acc += v[i as usize].abs();
        }
        scaled(acc, m.len(), vol, e)
    };
    let mut out = vec![f64::NEG_INFINITY; grid.node_count()];
    let mut offer = |m: &[u32], val: f64| {
        for &i in m {
            let slot = &mut out[i as usize];
            if val > *slot {
                *slot = val;
            }
        }
    };
    offer(&base, value(&base));
    for k in 0..fam.len() {
        let m = fam.members(k);
        if !m.is_empty() && m.iter().all(|&i| inside[i as usize]) {
            offer(m, value(m));
        }
    }
    for slot in out.iter_mut() {
        if *slot == f64::NEG_INFINITY {
            *slot = 0.0;
        }
    }
    Ok(SampledField::from_raw(grid.clone(), out))
}

/// Constant `C` with `M_b f <= C M_beta f` pointwise for `b` with pair seminorm
/// `lip`: for `x, y` in a ball of radius `r`, `rho(y^-1 x) <= 2 c0 r`, and
/// `r^beta = (r^Q / |B|)^{beta/Q} |B|^{beta/Q}` with `|B|` the mask measure.
pub fn pwslip_constant(lip: f64, beta: f64, fam: &CompiledFamily) -> Result<f64> {
    let group = &fam.grid().group;
    let c0 = group
        .c0()
        .ok_or_else(|| Error::Uncalibrated(group.name()))?;
    let q = group.q();
    let mut worst: f64 = 0.0;
    for (k, ball) in fam.balls().iter().enumerate() {
        if fam.count(k) > 0 {
            worst = worst.max(ball.radius.powf(q) / fam.measure(k));
        }
    }
    Ok(lip * (2.0 * c0).powf(beta) * worst.powf(beta / q))
}

/// Operator selector used by the command line and the benchmark harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    #[serde(rename = "maxal")]
    Maximal,
    Sharp,
    #[serde(rename = "maxcomm")]
    MaxComm,
    CommMax,
    CommSharp,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Maximal,
        Operator::Sharp,
        Operator::MaxComm,
        Operator::CommMax,
        Operator::CommSharp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Maximal => "maxal",
            Operator::Sharp => "sharp",
            Operator::MaxComm => "maxcomm",
            Operator::CommMax => "comm-max",
            Operator::CommSharp => "comm-sharp",
        }
    }

    pub fn needs_symbol(self) -> bool {
        matches!(
            self,
            Operator::MaxComm | Operator::CommMax | Operator::CommSharp
        )
    }

    /// Applies the fast kernel. `b` is required exactly when [`Self::needs_symbol`].
    pub fn apply(
        self,
        b: Option<&SampledField>,
        f: &SampledField,
        fam: &CompiledFamily,
        alpha: f64,
    ) -> Result<SampledField> {
        let symbol =
            || b.ok_or_else(|| Error::InvalidParameter(format!("{self} needs a symbol b")));
        match self {
            Operator::Maximal => fractional_maximal(f, fam, alpha),
            Operator::Sharp => sharp_maximal(f, fam),
            Operator::MaxComm => maximal_commutator(symbol()?, f, fam, alpha),
            Operator::CommMax => commutator_maximal(symbol()?, f, fam, alpha),
            Operator::CommSharp => commutator_sharp(symbol()?, f, fam),
        }
    }

    /// Applies the brute-force reference.
    pub fn apply_oracle(
        self,
        b: Option<&SampledField>,
        f: &SampledField,
        fam: &CompiledFamily,
        alpha: f64,
    ) -> Result<SampledField> {
        use super::oracle;
        let symbol =
            || b.ok_or_else(|| Error::InvalidParameter(format!("{self} needs a symbol b")));
        let balls = fam.balls();
        match self {
            Operator::Maximal => oracle::fractional_maximal(f, balls, alpha),
            Operator::Sharp => oracle::sharp_maximal(f, balls),
            Operator::MaxComm => oracle::maximal_commutator(symbol()?, f, balls, alpha),
            Operator::CommMax => oracle::commutator_maximal(symbol()?, f, balls, alpha),
            Operator::CommSharp => oracle::commutator_sharp(symbol()?, f, balls),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Operator::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown operator {s:?}; expected one of maxal, sharp, maxcomm, comm-max, comm-sharp"
                ))
            })
    }
}
