//! Concrete homogeneous groups in exponential coordinates.
//!
//! Two instances are provided: Euclidean space `R^n` (vector addition, Euclidean
//! length) and the first Heisenberg group `H^1` with law
//!
//! ```text
//! (x, y, t) . (x', y', t') = (x + x', y + y', t + t' + (x y' - y x') / 2)
//! ```
//!
//! dilation weights `(1, 1, 2)` and the Koranyi-type gauge
//! `rho(x, y, t) = ((x^2 + y^2)^2 + t^2)^(1/4)`.
//!
//! Haar measure is Lebesgue measure in these coordinates.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Euclidean { n: usize },
    Heisenberg1,
}

/// How the stored constants were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    /// Midpoint cells per axis used for the unit-ball quadrature.
    pub resolution: usize,
    /// Number of point pairs evaluated while estimating `c0`.
    pub c0_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    #[serde(flatten)]
    pub kind: GroupKind,
    /// Haar volume of the unit ball, `|B(x, r)| = c1 r^Q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Quasi-triangle constant, `rho(gh) <= c0 (rho(g) + rho(h))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

/// A group element in exponential coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint(Vec<f64>);

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinitePoint(coords));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<GroupPoint> for Vec<f64> {
    fn from(p: GroupPoint) -> Self {
        p.0
    }
}

/// Open gauge ball `B(x, r) = { y : rho(y^-1 x) < r }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: GroupPoint,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: GroupPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn at(center: &[f64], radius: f64) -> Result<Self> {
        Self::new(GroupPoint::new(center.to_vec())?, radius)
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({:?}, {})", self.center.coords(), self.radius)
    }
}

fn euclidean_unit_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * euclidean_unit_volume(n - 2),
    }
}

impl GroupSpec {
    /// `R^n` with the closed-form unit-ball volume and `c0 = 1`.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "Euclidean dimension must be positive".into(),
            ));
        }
        Ok(Self {
            kind: GroupKind::Euclidean { n },
            c1: Some(euclidean_unit_volume(n)),
            c0: Some(1.0),
            calibration: None,
        })
    }

    /// `H^1`; `c1` and `c0` are left empty until [`GroupSpec::calibrate_constants`].
    pub fn heisenberg() -> Self {
        Self {
            kind: GroupKind::Heisenberg1,
            c1: None,
            c0: None,
            calibration: None,
        }
    }

    pub fn with_constants(mut self, c1: f64, c0: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c1 must be positive, got {c1}"
            )));
        }
        if !(c0 >= 1.0 && c0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c0 must be at least 1, got {c0}"
            )));
        }
        self.c1 = Some(c1);
        self.c0 = Some(c0);
        Ok(self)
    }

    pub fn coord_dim(&self) -> usize {
        match self.kind {
            GroupKind::Euclidean { n } => n,
            GroupKind::Heisenberg1 => 3,
        }
    }

    pub fn dilation_weights(&self) -> Vec<u32> {
        match self.kind {
            GroupKind::Euclidean { n } => vec![1; n],
            GroupKind::Heisenberg1 => vec![1, 1, 2],
        }
    }

    /// Homogeneous dimension `Q`, the sum of the dilation weights.
    pub fn homogeneous_dim(&self) -> usize {
        self.dilation_weights().iter().map(|&w| w as usize).sum()
    }

    pub fn q(&self) -> f64 {
        self.homogeneous_dim() as f64
    }

    pub fn c1(&self) -> Result<f64> {
        self.c1.ok_or_else(|| Error::Uncalibrated(self.name()))
    }

    pub fn c0(&self) -> Option<f64> {
        self.c0
    }

    pub fn name(&self) -> String {
        match self.kind {
            GroupKind::Euclidean { n } => format!("euclidean({n})"),
            GroupKind::Heisenberg1 => "heisenberg1".to_string(),
        }
    }

    /// Conventional coordinate names, used as CSV headers.
    pub fn axis_names(&self) -> Vec<String> {
        match self.kind {
            GroupKind::Euclidean { n } => (0..n).map(|i| format!("x{i}")).collect(),
            GroupKind::Heisenberg1 => vec!["x".into(), "y".into(), "t".into()],
        }
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint(vec![0.0; self.coord_dim()])
    }

    fn check_dim(&self, g: &GroupPoint) -> Result<()> {
        if g.dim() != self.coord_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_dim(),
                got: g.dim(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, g: &GroupPoint, h: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(g)?;
        self.check_dim(h)?;
        let mut out = vec![0.0; self.coord_dim()];
        self.mul_into(g.coords(), h.coords(), &mut out);
        Ok(GroupPoint(out))
    }

    pub fn inv(&self, g: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(g)?;
        // Exponential coordinates of a step-2 group: the inverse is negation.
        Ok(GroupPoint(g.coords().iter().map(|c| -c).collect()))
    }

    pub fn dilate(&self, g: &GroupPoint, s: f64) -> Result<GroupPoint> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositiveDilation(s));
        }
        self.check_dim(g)?;
        let coords = g
            .coords()
            .iter()
            .zip(self.dilation_weights())
            .map(|(c, w)| c * s.powi(w as i32))
            .collect();
        Ok(GroupPoint(coords))
    }

    pub fn hom_norm(&self, g: &GroupPoint) -> Result<f64> {
        self.check_dim(g)?;
        Ok(self.norm_of(g.coords()))
    }

    pub fn ball_contains(&self, ball: &Ball, g: &GroupPoint) -> Result<bool> {
        self.check_dim(g)?;
        self.check_dim(&ball.center)?;
        Ok(self.contains(ball.center.coords(), ball.radius, g.coords()))
    }

    /// `c1 r^Q`, independent of the center.
    pub fn ball_volume(&self, ball: &Ball) -> Result<f64> {
        Ok(self.c1()? * ball.radius.powi(self.homogeneous_dim() as i32))
    }

    // Slice-level kernels. No dimension checks; callers guarantee lengths.

    pub(crate) fn mul_into(&self, g: &[f64], h: &[f64], out: &mut [f64]) {
        match self.kind {
            GroupKind::Euclidean { .. } => {
                for ((o, a), b) in out.iter_mut().zip(g).zip(h) {
                    *o = a + b;
                }
            }
            GroupKind::Heisenberg1 => {
                out[0] = g[0] + h[0];
                out[1] = g[1] + h[1];
                out[2] = g[2] + h[2] + 0.5 * (g[0] * h[1] - g[1] * h[0]);
            }
        }
    }

    pub(crate) fn norm_of(&self, g: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Euclidean { n: 1 } => g[0].abs(),
            GroupKind::Euclidean { .. } => g.iter().map(|c| c * c).sum::<f64>().sqrt(),
            GroupKind::Heisenberg1 => {
                let planar = g[0] * g[0] + g[1] * g[1];
                planar.hypot(g[2]).sqrt()
            }
        }
    }

    /// `rho(g^-1 c)`, the gauge distance used for ball membership.
    pub(crate) fn gauge_dist(&self, g: &[f64], c: &[f64]) -> f64 {
        match self.kind {
            GroupKind::Euclidean { n: 1 } => (c[0] - g[0]).abs(),
            GroupKind::Euclidean { .. } => g
                .iter()
                .zip(c)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
            GroupKind::Heisenberg1 => {
                let dx = c[0] - g[0];
                let dy = c[1] - g[1];
                let dt = c[2] - g[2] - 0.5 * (g[0] * c[1] - g[1] * c[0]);
                (dx * dx + dy * dy).hypot(dt).sqrt()
            }
        }
    }

    pub(crate) fn contains(&self, center: &[f64], radius: f64, g: &[f64]) -> bool {
        self.gauge_dist(g, center) < radius
    }

    /// Conservative coordinate box enclosing `B(c, r)`.
    ///
    /// Relies on `rho >= |x_i|^(1 / w_i)` for every coordinate, which holds for
    /// both gauges implemented here.
    pub fn ball_bounding_box(&self, center: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
        let half: Vec<f64> = match self.kind {
            GroupKind::Euclidean { n } => vec![radius; n],
            GroupKind::Heisenberg1 => {
                let r = radius;
                vec![r, r, r * r + 0.5 * (center[0].abs() + center[1].abs()) * r]
            }
        };
        let pad = |h: f64, c: f64| h * (1.0 + 1e-9) + 1e-12 * (1.0 + c.abs());
        let lo = center
            .iter()
            .zip(&half)
            .map(|(c, h)| c - pad(*h, *c))
            .collect();
        let hi = center
            .iter()
            .zip(&half)
            .map(|(c, h)| c + pad(*h, *c))
            .collect();
        (lo, hi)
    }

    /// Computes `c1` by midpoint quadrature of the unit ball and estimates `c0`
    /// as the largest sampled ratio `rho(gh) / (rho(g) + rho(h))`.
    pub fn calibrate_constants(&self, resolution: usize) -> Result<GroupSpec> {
        self.calibrate_with_seed(resolution, 0x5eed)
    }

    pub fn calibrate_with_seed(&self, resolution: usize, seed: u64) -> Result<GroupSpec> {
        if resolution < 32 {
            return Err(Error::ResolutionTooSmall(resolution));
        }
        let c1 = self.unit_ball_quadrature(resolution)?;
        let (c0, samples) = match self.kind {
            GroupKind::Euclidean { .. } => (1.0, 0),
            GroupKind::Heisenberg1 => self.estimate_c0(seed),
        };
        Ok(GroupSpec {
            kind: self.kind,
            c1: Some(c1),
            c0: Some(c0),
            calibration: Some(Calibration {
                resolution,
                c0_samples: samples,
            }),
        })
    }

    fn unit_ball_quadrature(&self, resolution: usize) -> Result<f64> {
        let d = self.coord_dim();
        if d > 4 {
            return Err(Error::CalibrationDimension(d));
        }
        // The unit ball sits inside [-1, 1]^d: rho >= |x_i|^(1 / w_i).
        let h = 2.0 / resolution as f64;
        let total = resolution.pow(d as u32);
        let mut point = vec![0.0; d];
        let mut inside = 0usize;
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..d).rev() {
                let i = rem % resolution;
                rem /= resolution;
                point[k] = -1.0 + (i as f64 + 0.5) * h;
            }
            if self.norm_of(&point) < 1.0 {
                inside += 1;
            }
        }
        Ok(inside as f64 * h.powi(d as i32))
    }

    fn estimate_c0(&self, seed: u64) -> (f64, usize) {
        let d = self.coord_dim();
        let mut rng = rng::stream(seed, "calibrate-c0");
        let mut evaluated = 0usize;
        let ratio = |g: &[f64], h: &[f64], buf: &mut [f64]| {
            self.mul_into(g, h, buf);
            let denom = self.norm_of(g) + self.norm_of(h);
            if denom > 0.0 {
                self.norm_of(buf) / denom
            } else {
                0.0
            }
        };
        let mut buf = vec![0.0; d];
        let draw = |rng: &mut rng::Stream| -> Vec<f64> {
            let scale = 10f64.powf(rng.random_range(-1.5..1.5));
            let weights = self.dilation_weights();
            (0..d)
                .map(|k| rng.random_range(-1.0..1.0) * scale.powi(weights[k] as i32))
                .collect()
        };

        let mut pool: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(20_000);
        for _ in 0..20_000 {
            let g = draw(&mut rng);
            let h = draw(&mut rng);
            let r = ratio(&g, &h, &mut buf);
            evaluated += 1;
            pool.push((r, g, h));
        }
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        pool.truncate(8);

        // Local refinement of the best candidates by shrinking random perturbations.
        let mut best = pool[0].0;
        for (mut r, mut g, mut h) in pool {
            let mut step = 0.1;
            for _ in 0..600 {
                let scale = self.norm_of(&g).max(self.norm_of(&h)).max(1e-12);
                let g2: Vec<f64> = g
                    .iter()
                    .map(|c| c + rng.random_range(-step..step) * scale)
                    .collect();
                let h2: Vec<f64> = h
                    .iter()
                    .map(|c| c + rng.random_range(-step..step) * scale)
                    .collect();
                let r2 = ratio(&g2, &h2, &mut buf);
                evaluated += 1;
                if r2 > r {
                    r = r2;
                    g = g2;
                    h = h2;
                } else {
                    step *= 0.995;
                }
            }
            best = best.max(r);
        }
        (best.max(1.0), evaluated)
    }
}
