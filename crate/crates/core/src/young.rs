//! Young functions and their convex calculus.
//!
//! A Young function is convex, nondecreasing and left-continuous on `[0, inf)`
//! with `Phi(0) = 0` and `Phi(t) -> inf`. Values may be `+inf`; they are carried
//! as `f64::INFINITY`.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Extrapolation of a tabulated function past its last breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    /// `Phi(t) = v_last (t / t_last)^k` for `t > t_last`.
    Power(f64),
    /// `Phi(t) = +inf` for `t > t_last`.
    Infinite,
}

/// Piecewise-linear Young function through `(t_i, v_i)`, starting at `(0, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    v: Vec<f64>,
    tail: Tail,
}

impl Table {
    pub fn new(mut t: Vec<f64>, mut v: Vec<f64>, tail: Tail) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidYoung(msg));
        if t.len() != v.len() {
            return bad(format!("{} breakpoints but {} values", t.len(), v.len()));
        }
        if t.is_empty() {
            return bad("empty table".into());
        }
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return bad("breakpoints and values must be finite".into());
        }
        if t[0] < 0.0 {
            return bad(format!("negative breakpoint {}", t[0]));
        }
        if t[0] > 0.0 {
            t.insert(0, 0.0);
            v.insert(0, 0.0);
        } else if v[0] != 0.0 {
            return bad(format!("Phi(0) must be 0, got {}", v[0]));
        }
        if t.len() < 2 {
            return bad("need at least one breakpoint beyond 0".into());
        }
        let mut prev_slope = f64::NEG_INFINITY;
        for i in 1..t.len() {
            if t[i] <= t[i - 1] {
                return bad(format!("breakpoints not increasing at index {i}"));
            }
            if v[i] < v[i - 1] {
                return bad(format!("values decrease at t = {}", t[i]));
            }
            let slope = (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
            let tol = 1e-9 * slope.abs().max(prev_slope.abs().min(f64::MAX));
            if slope < prev_slope - tol {
                return bad(format!("not convex near t = {}", t[i - 1]));
            }
            prev_slope = slope;
        }
        let (t_last, v_last) = (t[t.len() - 1], v[v.len() - 1]);
        if let Tail::Power(k) = tail {
            if !(k >= 1.0 && k.is_finite()) {
                return bad(format!("tail exponent must be at least 1, got {k}"));
            }
            if v_last <= 0.0 {
                return bad("a power tail needs a positive last value".into());
            }
            let tail_slope = k * v_last / t_last;
            if tail_slope < prev_slope * (1.0 - 1e-6) {
                return bad(format!(
                    "tail slope {tail_slope} is below the last segment slope {prev_slope}"
                ));
            }
        }
        Ok(Self { t, v, tail })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    fn last(&self) -> (f64, f64) {
        (self.t[self.t.len() - 1], self.v[self.v.len() - 1])
    }

    fn value(&self, x: f64) -> f64 {
        let (t_last, v_last) = self.last();
        if x > t_last {
            return match self.tail {
                Tail::Power(k) => v_last * (x / t_last).powf(k),
                Tail::Infinite => f64::INFINITY,
            };
        }
        // First breakpoint >= x; x lies in [t[j-1], t[j]].
        let j = self.t.partition_point(|&b| b < x);
        if j == 0 {
            return self.v[0];
        }
        if self.t[j] == x {
            return self.v[j];
        }
        let (t0, t1, v0, v1) = (self.t[j - 1], self.t[j], self.v[j - 1], self.v[j]);
        v0 + (v1 - v0) * (x - t0) / (t1 - t0)
    }

    fn inverse(&self, s: f64) -> f64 {
        let j = self.v.partition_point(|&v| v <= s);
        if j < self.v.len() {
            let (t0, t1, v0, v1) = (self.t[j - 1], self.t[j], self.v[j - 1], self.v[j]);
            return t0 + (s - v0) / (v1 - v0) * (t1 - t0);
        }
        let (t_last, v_last) = self.last();
        match self.tail {
            Tail::Power(k) => t_last * (s / v_last).powf(1.0 / k),
            Tail::Infinite => t_last,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum YoungFamily {
    /// `Phi(t) = coef * t^p`, `p >= 1`, `coef > 0`.
    Power {
        p: f64,
        coef: f64,
    },
    /// `Phi = 0` on `[0, 1]`, `+inf` beyond; generates `L^inf`.
    LInfinity,
    Tabulated(Table),
}

#[derive(Clone, Debug, PartialEq)]
pub struct YoungFunction {
    pub family: YoungFamily,
    pub label: String,
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Parses `power(p)`, `c*power(p)` and `linfty`, the labels produced by the
/// constructors.
impl FromStr for YoungFunction {
    type Err = Error;

    fn from_str(tag: &str) -> Result<Self> {
        let tag = tag.trim();
        if tag == "linfty" {
            return Ok(Self::linfty());
        }
        let bad = || Error::InvalidYoung(format!("unrecognized Young descriptor {tag:?}"));
        let (coef, rest) = match tag.split_once('*') {
            Some((c, rest)) => (c.trim().parse::<f64>().map_err(|_| bad())?, rest.trim()),
            None => (1.0, tag),
        };
        let p = rest
            .strip_prefix("power(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?
            .trim()
            .parse::<f64>()
            .map_err(|_| bad())?;
        Self::scaled_power(coef, p)
    }
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        Self::scaled_power(1.0, p)
    }

    pub fn scaled_power(coef: f64, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidYoung(format!(
                "power exponent must be >= 1, got {p}"
            )));
        }
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(Error::InvalidYoung(format!(
                "coefficient must be positive, got {coef}"
            )));
        }
        let label = if coef == 1.0 {
            format!("power({p})")
        } else {
            format!("{coef}*power({p})")
        };
        Ok(Self {
            family: YoungFamily::Power { p, coef },
            label,
        })
    }

    pub fn linfty() -> Self {
        Self {
            family: YoungFamily::LInfinity,
            label: "linfty".into(),
        }
    }

    pub fn tabulated(t: Vec<f64>, v: Vec<f64>, tail: Tail) -> Result<Self> {
        Ok(Self {
            family: YoungFamily::Tabulated(Table::new(t, v, tail)?),
            label: "tabulated".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Finite and positive on `(0, inf)`, hence a bijection of `[0, inf)`.
    pub fn is_class_y(&self) -> bool {
        match &self.family {
            YoungFamily::Power { .. } => true,
            YoungFamily::LInfinity => false,
            YoungFamily::Tabulated(tab) => matches!(tab.tail, Tail::Power(_)) && tab.v[1] > 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation; `t` must be nonnegative.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.family {
            YoungFamily::Power { p, coef } => {
                if *p == 1.0 {
                    coef * t
                } else {
                    coef * t.powf(*p)
                }
            }
            YoungFamily::LInfinity => {
                if t <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            YoungFamily::Tabulated(tab) => tab.value(t),
        }
    }

    /// Generalized inverse `inf { r >= 0 : Phi(r) > s }`.
    pub fn inverse(&self, s: f64) -> f64 {
        if s.is_nan() {
            return f64::NAN;
        }
        if s < 0.0 {
            return 0.0;
        }
        if s == f64::INFINITY {
            return f64::INFINITY;
        }
        match &self.family {
            YoungFamily::Power { p, coef } => {
                if *p == 1.0 {
                    s / coef
                } else {
                    (s / coef).powf(1.0 / p)
                }
            }
            YoungFamily::LInfinity => 1.0,
            YoungFamily::Tabulated(tab) => tab.inverse(s),
        }
    }

    /// Complementary function `sup { r s - Phi(s) }`, in closed form where one
    /// exists and tabulated on [`default_conjugate_grid`] otherwise.
    pub fn conjugate(&self) -> Result<YoungFunction> {
        match &self.family {
            YoungFamily::Power { p, coef } if *p == 1.0 => {
                if *coef == 1.0 {
                    Ok(Self::linfty())
                } else {
                    Ok(
                        Self::tabulated(vec![0.0, *coef], vec![0.0, 0.0], Tail::Infinite)?
                            .with_label(format!("conj({})", self.label)),
                    )
                }
            }
            YoungFamily::Power { p, coef } => {
                let q = p / (p - 1.0);
                let c = (p - 1.0) * coef.powf(-1.0 / (p - 1.0)) * p.powf(-q);
                Ok(Self::scaled_power(c, q)?.with_label(format!("conj({})", self.label)))
            }
            YoungFamily::LInfinity => Ok(Self::power(1.0)?),
            YoungFamily::Tabulated(_) => self.conjugate_numeric(&default_conjugate_grid()),
        }
    }

    /// Tabulates the complementary function at the given points by maximizing
    /// the concave map `s -> r s - Phi(s)` for each `r`.
    ///
    /// Points where the supremum is infinite truncate the table with an infinite
    /// tail; otherwise the tail exponent is the log-log slope of the last segment.
    pub fn conjugate_numeric(&self, grid: &[f64]) -> Result<YoungFunction> {
        let mut t = Vec::with_capacity(grid.len() + 1);
        let mut v = Vec::with_capacity(grid.len() + 1);
        t.push(0.0);
        v.push(0.0);
        let mut truncated = false;
        for &r in grid.iter().filter(|&&r| r > 0.0) {
            let value = legendre_sup(self, r);
            if value.is_infinite() {
                truncated = true;
                break;
            }
            t.push(r);
            v.push(value);
        }
        let tail = if truncated {
            Tail::Infinite
        } else {
            let n = t.len();
            if n < 3 || v[n - 2] <= 0.0 {
                Tail::Infinite
            } else {
                let k = (v[n - 1] / v[n - 2]).ln() / (t[n - 1] / t[n - 2]).ln();
                Tail::Power(k.max(1.0))
            }
        };
        Ok(Self::tabulated(t, v, tail)?.with_label(format!("conj~({})", self.label)))
    }
}

/// Log-spaced points from `1e-9` to `1e9`, 200 per decade, containing 1 exactly.
pub fn default_conjugate_grid() -> Vec<f64> {
    (0..=3600)
        .map(|i| 10f64.powf((i as f64 - 1800.0) / 200.0))
        .collect()
}

/// `n` log-spaced points in `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `sup_{s >= 0} (r s - Phi(s))` by bracketing and golden-section search in `ln s`.
pub fn legendre_sup(phi: &YoungFunction, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let g = |s: f64| r * s - phi.value(s);
    let mut s = 1.0;
    let (lo, hi) = if g(2.0) <= g(1.0) {
        (1e-300, 2.0)
    } else {
        loop {
            s *= 2.0;
            if s > 1e300 {
                return f64::INFINITY;
            }
            if g(2.0 * s) <= g(s) {
                break (s / 2.0, 2.0 * s);
            }
        }
    };
    let objective = |u: f64| g(u.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (objective(c), objective(d));
    let mut best = 0f64.max(gc).max(gd).max(g(lo)).max(g(hi));
    for _ in 0..120 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = objective(c);
            best = best.max(gc);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = objective(d);
            best = best.max(gd);
        }
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    best
}

/// Outcome of checking `r <= Phi^-1(r) Phi~^-1(r) <= 2r` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct YoungPairReport {
    pub ok: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Grid point with the ratio farthest outside (or closest to the edge of) `[1, 2]`.
    pub worst_r: f64,
    /// First grid point violating the bounds, if any.
    pub offending: Option<f64>,
}

pub const YOUNG_PAIR_SLACK: f64 = 1e-6;

pub fn check_young_pair(phi: &YoungFunction, r_grid: &[f64]) -> Result<YoungPairReport> {
    let conj = phi.conjugate()?;
    check_young_pair_with(phi, &conj, r_grid)
}

pub fn check_young_pair_with(
    phi: &YoungFunction,
    conj: &YoungFunction,
    r_grid: &[f64],
) -> Result<YoungPairReport> {
    if r_grid.is_empty() || r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(
            "r grid must be nonempty and positive".into(),
        ));
    }
    let mut report = YoungPairReport {
        ok: true,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        worst_r: r_grid[0],
        offending: None,
    };
    let mut worst_margin = f64::INFINITY;
    for &r in r_grid {
        let ratio = phi.inverse(r) * conj.inverse(r) / r;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        let margin = (ratio - 1.0).min(2.0 - ratio);
        if margin < worst_margin || margin.is_nan() {
            worst_margin = margin;
            report.worst_r = r;
        }
        let within = (1.0 - YOUNG_PAIR_SLACK..=2.0 + YOUNG_PAIR_SLACK).contains(&ratio);
        if !within && report.offending.is_none() {
            report.ok = false;
            report.offending = Some(r);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub delta2_constant: Option<f64>,
    pub nabla2_constant: Option<f64>,
    pub range_checked: (f64, f64),
    pub samples: usize,
}

const MIN_GROWTH_SAMPLES: usize = 100;

fn growth_grid(r_range: (f64, f64), samples: usize) -> Result<Vec<f64>> {
    let (lo, hi) = r_range;
    let spans = lo > 0.0 && hi.is_finite() && hi / lo >= 1e6 * (1.0 - 1e-12);
    if !spans || samples < MIN_GROWTH_SAMPLES {
        return Err(Error::GrowthRange {
            min_samples: MIN_GROWTH_SAMPLES,
            detail: format!("range [{lo:e}, {hi:e}], {samples} samples"),
        });
    }
    Ok(log_grid(lo, hi, samples))
}

/// Finite-range certificate for `Phi(2r) <= C Phi(r)`.
pub fn check_delta2(
    phi: &YoungFunction,
    r_range: (f64, f64),
    samples: usize,
) -> Result<GrowthReport> {
    let grid = growth_grid(r_range, samples)?;
    let mut worst: Option<f64> = Some(1.0);
    for &r in &grid {
        let (a, b) = (phi.value(r), phi.value(2.0 * r));
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let ratio = b / a;
        if !ratio.is_finite() {
            worst = None;
            break;
        }
        worst = worst.map(|w| w.max(ratio));
    }
    Ok(GrowthReport {
        delta2_constant: worst,
        nabla2_constant: None,
        range_checked: r_range,
        samples,
    })
}

/// Smallest `C` in `c_grid` with `Phi(r) <= Phi(C r) / (2C)` at every sample.
pub fn check_nabla2(
    phi: &YoungFunction,
    r_range: (f64, f64),
    samples: usize,
    c_grid: &[f64],
) -> Result<GrowthReport> {
    if c_grid.iter().any(|&c| !(c > 1.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(
            "nabla2 candidates must exceed 1".into(),
        ));
    }
    let grid = growth_grid(r_range, samples)?;
    let mut candidates = c_grid.to_vec();
    candidates.sort_by(f64::total_cmp);
    let holds = |c: f64| {
        grid.iter().all(|&r| {
            let lhs = 2.0 * c * phi.value(r);
            let rhs = phi.value(c * r);
            lhs <= rhs * (1.0 + 1e-12)
        })
    };
    Ok(GrowthReport {
        delta2_constant: None,
        nabla2_constant: candidates.into_iter().find(|&c| holds(c)),
        range_checked: r_range,
        samples,
    })
}
