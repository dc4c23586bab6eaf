use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::geometry::Ball;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Geometric radii `r_min * ratio^k`, `k < count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSequence {
    pub r_min: f64,
    pub ratio: f64,
    pub count: usize,
}

impl RadiusSequence {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.r_min * self.ratio.powi(k as i32))
            .collect()
    }
}

/// Recipe for a generated family. Unset radii default to two cells of axis 0
/// up to the box diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyParams {
    pub centers_stride: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub ratio: f64,
    pub cover: bool,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            centers_stride: 4,
            r_min: None,
            r_max: None,
            ratio: std::f64::consts::SQRT_2,
            cover: false,
        }
    }
}

/// Finite stand-in for "all balls". `balls` lists generated balls first
/// (center-major, radius-minor), then distinguished balls, then the cover ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    balls: Vec<Ball>,
    pub centers_stride: usize,
    pub radii: RadiusSequence,
    distinguished: Vec<Ball>,
    cover: Option<Ball>,
}

/// Largest gauge distance between two corners of the grid box.
pub fn box_diameter(grid: &GridSpec) -> f64 {
    let d = grid.dim();
    let corner = |mask: usize| -> Vec<f64> {
        (0..d)
            .map(|k| {
                if mask >> k & 1 == 1 {
                    grid.hi[k]
                } else {
                    grid.lo[k]
                }
            })
            .collect()
    };
    let mut best: f64 = 0.0;
    for a in 0..1usize << d {
        for b in 0..1usize << d {
            best = best.max(grid.group.gauge_dist(&corner(a), &corner(b)));
        }
    }
    best
}

/// A ball containing every node of `ball` whose node count is as close as
/// possible to twice that of `ball`.
///
/// Centers are tried at `ball`'s center and shifted by half a cell along any
/// subset of axes; for each center the radius is cut between two consecutive
/// node distances. An exact doubling makes `M♯(chi_B) = 1/2` on `B` exactly.
pub fn companion_ball(grid: &GridSpec, ball: &Ball) -> Result<Ball> {
    let base = grid.ball_members(ball);
    if base.is_empty() {
        return Err(Error::ZeroMeasure);
    }
    let target = 2 * base.len();
    let c = ball.center.coords();
    let d = grid.dim();
    let h = grid.spacing();
    let reach =
        2.0 * ball.radius * 2f64.powf(1.0 / grid.group.q()) + h.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![0.0; d];
    let mut best: Option<(usize, Ball)> = None;
    // Offsets in base 3 per axis: 0, +h/2, -h/2; the unshifted center comes first.
    for code in 0..3usize.pow(d as u32) {
        let shifted: Vec<f64> = (0..d)
            .map(|k| match code / 3usize.pow(k as u32) % 3 {
                0 => c[k],
                1 => c[k] + 0.5 * h[k],
                _ => c[k] - 0.5 * h[k],
            })
            .collect();
        let (lo, hi) = grid.group.ball_bounding_box(&shifted, reach);
        let Some(ranges) = grid.index_ranges(&lo, &hi) else {
            continue;
        };
        let mut dist = Vec::new();
        grid.for_each_in_ranges(&ranges, |_, p| {
            let r = grid.group.gauge_dist(p, &shifted);
            if r < reach {
                dist.push(r);
            }
        });
        dist.sort_by(f64::total_cmp);
        let enclose = base
            .iter()
            .map(|&i| {
                grid.node_into(i as usize, &mut x);
                grid.group.gauge_dist(&x, &shifted)
            })
            .fold(0.0, f64::max);
        // Smallest admissible count: every node at distance <= enclose.
        let need = dist.partition_point(|&r| r <= enclose);
        for k in need.max(1)..=dist.len() {
            let next = dist.get(k).copied().unwrap_or(reach);
            if dist[k - 1] >= next {
                continue;
            }
            let miss = k.abs_diff(target);
            if best.as_ref().is_none_or(|(m, _)| miss < *m) {
                best = Some((miss, Ball::at(&shifted, 0.5 * (dist[k - 1] + next))?));
            }
            if k >= target {
                break;
            }
        }
        if best.as_ref().is_some_and(|(m, _)| *m == 0) {
            break;
        }
    }
    best.map(|(_, b)| b).ok_or(Error::ZeroMeasure)
}

impl BallFamily {
    pub fn generate(grid: &GridSpec, params: &FamilyParams) -> Result<Self> {
        if params.centers_stride == 0 {
            return Err(Error::InvalidParameter(
                "centers_stride must be positive".into(),
            ));
        }
        if !(params.ratio > 1.0 && params.ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius ratio must exceed 1, got {}",
                params.ratio
            )));
        }
        let r_min = params.r_min.unwrap_or(2.0 * grid.spacing()[0]);
        let r_max = params.r_max.unwrap_or_else(|| box_diameter(grid));
        if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) {
            return Err(Error::InvalidRadius(r_min));
        }
        let count = ((r_max / r_min).ln() / params.ratio.ln() + 1e-9).floor() as usize + 1;
        let radii = RadiusSequence {
            r_min,
            ratio: params.ratio,
            count,
        };
        let rs = radii.radii();

        let stride = params.centers_stride;
        let mut balls = Vec::new();
        for idx in 0..grid.node_count() {
            if grid.multi_index(idx).iter().all(|i| i % stride == 0) {
                let x = grid.node(idx);
                for &r in &rs {
                    balls.push(Ball::at(&x, r).expect("finite center and positive radius"));
                }
            }
        }
        let mut fam = Self {
            balls,
            centers_stride: stride,
            radii,
            distinguished: Vec::new(),
            cover: None,
        };
        if params.cover {
            fam = fam.with_cover(grid);
        }
        Ok(fam)
    }

    /// A family made of exactly the given balls.
    pub fn from_balls(balls: Vec<Ball>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(Self {
            balls,
            centers_stride: 0,
            radii: RadiusSequence {
                r_min: 0.0,
                ratio: 1.0,
                count: 0,
            },
            distinguished: Vec::new(),
            cover: None,
        })
    }

    /// Inserts `ball` verbatim; a ball already present is not duplicated.
    pub fn with_distinguished(mut self, ball: Ball) -> Self {
        if !self.balls.contains(&ball) {
            let at = self.balls.len() - usize::from(self.cover.is_some());
            self.balls.insert(at, ball.clone());
        }
        if !self.distinguished.contains(&ball) {
            self.distinguished.push(ball);
        }
        self
    }

    /// Adds the smallest ball about the box center that holds every node.
    pub fn with_cover(mut self, grid: &GridSpec) -> Self {
        if self.cover.is_some() {
            return self;
        }
        let center: Vec<f64> = grid
            .lo
            .iter()
            .zip(&grid.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut x = vec![0.0; grid.dim()];
        let mut reach: f64 = 0.0;
        for i in 0..grid.node_count() {
            grid.node_into(i, &mut x);
            reach = reach.max(grid.group.gauge_dist(&x, &center));
        }
        let radius = reach * (1.0 + 1e-9) + 1e-12;
        let ball = Ball::at(&center, radius).expect("finite center and positive radius");
        self.balls.push(ball.clone());
        self.cover = Some(ball);
        self
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn distinguished(&self) -> &[Ball] {
        &self.distinguished
    }

    pub fn cover(&self) -> Option<&Ball> {
        self.cover.as_ref()
    }

    pub fn compile(&self, grid: &Arc<GridSpec>) -> Result<CompiledFamily> {
        if self.balls.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let d = grid.dim();
        let mut offsets = Vec::with_capacity(self.balls.len() + 1);
        let mut members = Vec::new();
        offsets.push(0);
        for ball in &self.balls {
            if ball.center.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: ball.center.dim(),
                });
            }
            members.extend(grid.ball_members(ball));
            offsets.push(members.len());
        }
        Ok(CompiledFamily {
            grid: Arc::clone(grid),
            family: self.clone(),
            offsets,
            members,
        })
    }
}

/// A family bound to a grid, with each ball's node set stored in ascending
/// order (compressed rows).
#[derive(Clone, Debug)]
pub struct CompiledFamily {
    grid: Arc<GridSpec>,
    family: BallFamily,
    offsets: Vec<usize>,
    members: Vec<u32>,
}

impl CompiledFamily {
    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn family(&self) -> &BallFamily {
        &self.family
    }

    pub fn balls(&self) -> &[Ball] {
        &self.family.balls
    }

    pub fn len(&self) -> usize {
        self.family.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.balls.is_empty()
    }

    pub fn members(&self, k: usize) -> &[u32] {
        &self.members[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn count(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    /// Mask measure of ball `k`.
    pub fn measure(&self, k: usize) -> f64 {
        self.count(k) as f64 * self.grid.cell_volume()
    }

    pub fn total_members(&self) -> usize {
        self.members.len()
    }

    pub fn ball_index(&self, ball: &Ball) -> Option<usize> {
        self.family.balls.iter().position(|b| b == ball)
    }

    /// First node covered by no ball.
    pub fn first_uncovered(&self) -> Option<usize> {
        let mut covered = vec![false; self.grid.node_count()];
        for &i in &self.members {
            covered[i as usize] = true;
        }
        covered.iter().position(|c| !c)
    }

    /// Every ball's node set is contained in, contains, or misses that of ball `k0`.
    pub fn is_subset_closed_over(&self, k0: usize) -> bool {
        let base = self.members(k0);
        (0..self.len()).all(|k| {
            let other = self.members(k);
            let shared = sorted_intersection_len(base, other);
            shared == 0 || shared == other.len() || shared == base.len()
        })
    }
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
