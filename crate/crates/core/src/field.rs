//! Scalar fields sampled at the nodes of a rectangular coordinate grid.
//!
//! Nodes are ordered lexicographically with axis 0 varying slowest. Every
//! reduction walks nodes in that order and multiplies by the cell volume once at
//! the end, so sums are reproducible bit for bit.

use crate::error::{Error, Result};
use crate::geometry::{Ball, GroupSpec};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub group: GroupSpec,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points_per_axis: Vec<usize>,
    #[serde(skip)]
    spacing: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    cell_volume: f64,
}

impl GridSpec {
    pub fn new(
        group: GroupSpec,
        lo: Vec<f64>,
        hi: Vec<f64>,
        points_per_axis: Vec<usize>,
    ) -> Result<Self> {
        let d = group.coord_dim();
        if lo.len() != d || hi.len() != d || points_per_axis.len() != d {
            return Err(Error::InvalidGrid(format!(
                "{} needs {d} bounds and point counts per axis",
                group.name()
            )));
        }
        for k in 0..d {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            if points_per_axis[k] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need at least 3 points, got {}",
                    points_per_axis[k]
                )));
            }
        }
        let mut grid = Self {
            group,
            lo,
            hi,
            points_per_axis,
            spacing: Vec::new(),
            strides: Vec::new(),
            cell_volume: 0.0,
        };
        grid.derive();
        Ok(grid)
    }

    /// Symmetric box `[-half_k, half_k]` with `n` points on every axis.
    pub fn centered(group: GroupSpec, half_widths: &[f64], n: usize) -> Result<Self> {
        let lo = half_widths.iter().map(|h| -h).collect();
        let hi = half_widths.to_vec();
        let d = group.coord_dim();
        Self::new(group, lo, hi, vec![n; d])
    }

    fn derive(&mut self) {
        let d = self.lo.len();
        self.spacing = (0..d)
            .map(|k| (self.hi[k] - self.lo[k]) / (self.points_per_axis[k] - 1) as f64)
            .collect();
        self.strides = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            self.strides[k] = self.strides[k + 1] * self.points_per_axis[k + 1];
        }
        self.cell_volume = self.spacing.iter().product();
    }

    /// Restores derived fields after deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.group, self.lo, self.hi, self.points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Measure of the whole node set, `node_count * cell_volume`.
    pub fn total_measure(&self) -> f64 {
        self.node_count() as f64 * self.cell_volume
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.spacing[axis]
    }

    pub fn node_into(&self, index: usize, out: &mut [f64]) {
        let mut rem = index;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            out[k] = self.coord(k, i);
        }
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(index, &mut out);
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        let mut rem = index;
        self.strides
            .iter()
            .map(|s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    /// Inclusive index range per axis of nodes inside the coordinate box, or
    /// `None` when the box misses the grid.
    pub fn index_ranges(&self, lo: &[f64], hi: &[f64]) -> Option<Vec<(usize, usize)>> {
        let mut ranges = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let n = self.points_per_axis[k];
            let a = ((lo[k] - self.lo[k]) / self.spacing[k]).ceil().max(0.0);
            let b = ((hi[k] - self.lo[k]) / self.spacing[k])
                .floor()
                .min((n - 1) as f64);
            if a > b {
                return None;
            }
            ranges.push((a as usize, b as usize));
        }
        Some(ranges)
    }

    /// Calls `visit(index, coords)` for every node in the index box, in
    /// ascending flat-index order.
    pub fn for_each_in_ranges(
        &self,
        ranges: &[(usize, usize)],
        mut visit: impl FnMut(usize, &[f64]),
    ) {
        let d = self.dim();
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        let mut coords: Vec<f64> = (0..d).map(|k| self.coord(k, multi[k])).collect();
        loop {
            visit(self.flat_index(&multi), &coords);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if multi[k] < ranges[k].1 {
                    multi[k] += 1;
                    coords[k] = self.coord(k, multi[k]);
                    break;
                }
                multi[k] = ranges[k].0;
                coords[k] = self.coord(k, multi[k]);
            }
        }
    }

    /// Ascending node indices inside `ball`, found by scanning its bounding box.
    pub fn ball_members(&self, ball: &Ball) -> Vec<u32> {
        let c = ball.center.coords();
        let (lo, hi) = self.group.ball_bounding_box(c, ball.radius);
        let mut members = Vec::new();
        if let Some(ranges) = self.index_ranges(&lo, &hi) {
            self.for_each_in_ranges(&ranges, |idx, x| {
                if self.group.contains(c, ball.radius, x) {
                    members.push(idx as u32);
                }
            });
        }
        members
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
}

fn same_grid(a: &Arc<GridSpec>, b: &Arc<GridSpec>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Nodewise field operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Combine {
    Add,
    Sub,
    Mul,
    Abs,
    Scale(f64),
    PosPart,
    NegPart,
}

impl SampledField {
    pub fn from_values(grid: Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                index: i,
                coords: grid.node(i),
                value: values[i],
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: Arc<GridSpec>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    /// `values[i] = f(node_i)`; rejects non-finite samples.
    pub fn sample(grid: &Arc<GridSpec>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.node_count();
        let mut values = Vec::with_capacity(n);
        let mut x = vec![0.0; grid.dim()];
        for i in 0..n {
            grid.node_into(i, &mut x);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    index: i,
                    coords: x,
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn constant(grid: &Arc<GridSpec>, c: f64) -> Result<Self> {
        Self::from_values(Arc::clone(grid), vec![c; grid.node_count()])
    }

    pub fn indicator(mask: &RegionMask) -> Self {
        let values = mask
            .member
            .iter()
            .map(|&m| if m { 1.0 } else { 0.0 })
            .collect();
        Self::from_raw(Arc::clone(&mask.grid), values)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_same_grid(&self, other: &SampledField) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn combine(&self, other: Option<&SampledField>, op: Combine) -> Result<SampledField> {
        let unary = |f: fn(f64) -> f64| {
            Self::from_raw(
                Arc::clone(&self.grid),
                self.values.iter().map(|&v| f(v)).collect(),
            )
        };
        let binary = |g: &SampledField, f: fn(f64, f64) -> f64| -> Result<SampledField> {
            self.check_same_grid(g)?;
            let values = self
                .values
                .iter()
                .zip(&g.values)
                .map(|(&a, &b)| f(a, b))
                .collect();
            Ok(Self::from_raw(Arc::clone(&self.grid), values))
        };
        let need = |op: &str| {
            other.ok_or_else(|| Error::InvalidParameter(format!("{op} needs a second field")))
        };
        match op {
            Combine::Add => binary(need("add")?, |a, b| a + b),
            Combine::Sub => binary(need("sub")?, |a, b| a - b),
            Combine::Mul => binary(need("mul")?, |a, b| a * b),
            Combine::Abs => Ok(unary(f64::abs)),
            Combine::Scale(c) => Ok(Self::from_raw(
                Arc::clone(&self.grid),
                self.values.iter().map(|v| c * v).collect(),
            )),
            Combine::PosPart => Ok(unary(|v| if v > 0.0 { v } else { 0.0 })),
            Combine::NegPart => Ok(unary(|v| if v < 0.0 { -v } else { 0.0 })),
        }
    }

    pub fn add(&self, other: &SampledField) -> Result<SampledField> {
        self.combine(Some(other), Combine::Add)
    }

    pub fn sub(&self, other: &SampledField) -> Result<SampledField> {
        self.combine(Some(other), Combine::Sub)
    }

    pub fn mul(&self, other: &SampledField) -> Result<SampledField> {
        self.combine(Some(other), Combine::Mul)
    }

    pub fn abs(&self) -> SampledField {
        self.combine(None, Combine::Abs).expect("unary")
    }

    pub fn scale(&self, c: f64) -> SampledField {
        self.combine(None, Combine::Scale(c)).expect("unary")
    }

    pub fn pos_part(&self) -> SampledField {
        self.combine(None, Combine::PosPart).expect("unary")
    }

    pub fn neg_part(&self) -> SampledField {
        self.combine(None, Combine::NegPart).expect("unary")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn restricted(&self, mask: &RegionMask) -> Result<SampledField> {
        if !same_grid(&self.grid, &mask.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&mask.member)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        Ok(Self::from_raw(Arc::clone(&self.grid), values))
    }
}

/// A set of grid nodes with its quadrature measure.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    grid: Arc<GridSpec>,
    member: Vec<bool>,
    count: usize,
    measure: f64,
}

impl RegionMask {
    pub fn from_members(grid: &Arc<GridSpec>, member: Vec<bool>) -> Result<Self> {
        if member.len() != grid.node_count() {
            return Err(Error::InvalidGrid(
                "mask length differs from node count".into(),
            ));
        }
        let count = member.iter().filter(|&&m| m).count();
        Ok(Self {
            grid: Arc::clone(grid),
            measure: count as f64 * grid.cell_volume(),
            member,
            count,
        })
    }

    pub fn from_indices(grid: &Arc<GridSpec>, indices: &[u32]) -> Self {
        let mut member = vec![false; grid.node_count()];
        for &i in indices {
            member[i as usize] = true;
        }
        Self {
            grid: Arc::clone(grid),
            measure: indices.len() as f64 * grid.cell_volume(),
            count: indices.len(),
            member,
        }
    }

    pub fn whole(grid: &Arc<GridSpec>) -> Self {
        Self::from_members(grid, vec![true; grid.node_count()]).expect("length matches")
    }

    /// Nodes strictly inside the ball; may be empty.
    pub fn from_ball(ball: &Ball, grid: &Arc<GridSpec>) -> Result<Self> {
        if ball.center.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: ball.center.dim(),
            });
        }
        Ok(Self::from_indices(grid, &grid.ball_members(ball)))
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn member(&self) -> &[bool] {
        &self.member
    }

    pub fn contains(&self, index: usize) -> bool {
        self.member[index]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }

    pub fn intersect(&self, other: &RegionMask) -> Result<RegionMask> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let member = self
            .member
            .iter()
            .zip(&other.member)
            .map(|(&a, &b)| a && b)
            .collect();
        Self::from_members(&self.grid, member)
    }
}

pub(crate) fn check_pair(f: &SampledField, d: &RegionMask) -> Result<()> {
    if same_grid(&f.grid, &d.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Riemann sum of `f` over `d`.
pub fn integrate(f: &SampledField, d: &RegionMask) -> Result<f64> {
    check_pair(f, d)?;
    let sum: f64 = f
        .values
        .iter()
        .zip(&d.member)
        .filter(|(_, &m)| m)
        .map(|(v, _)| *v)
        .sum();
    Ok(sum * f.grid.cell_volume())
}

pub fn average_over(f: &SampledField, d: &RegionMask) -> Result<f64> {
    if d.count == 0 {
        return Err(Error::ZeroMeasure);
    }
    Ok(integrate(f, d)? / d.measure)
}

/// `m(D, f, t) = |{ x in D : |f(x)| > t }|`.
pub fn distribution_function(f: &SampledField, d: &RegionMask, t: f64) -> Result<f64> {
    check_pair(f, d)?;
    let count = f
        .values
        .iter()
        .zip(&d.member)
        .filter(|(v, &m)| m && v.abs() > t)
        .count();
    Ok(count as f64 * f.grid.cell_volume())
}
