//! Reference operators: for every node, every ball, a full scan of the grid
//! with per-node membership tests. No pruning and no caching.

use super::kernel::{exponent, oscillation, scaled};
use super::ops::check_alpha;
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::geometry::Ball;

fn run(
    f: &SampledField,
    balls: &[Ball],
    mut value: impl FnMut(usize, &[usize]) -> f64,
) -> Result<SampledField> {
    let grid = f.grid();
    let group = &grid.group;
    let n = grid.node_count();
    let nodes: Vec<Vec<f64>> = (0..n).map(|i| grid.node(i)).collect();
    let mut out = Vec::with_capacity(n);
    let mut members = Vec::new();
    for x in 0..n {
        let mut best = f64::NEG_INFINITY;
        for ball in balls {
            let c = ball.center.coords();
            if !group.contains(c, ball.radius, &nodes[x]) {
                continue;
            }
            members.clear();
            for (y, node) in nodes.iter().enumerate() {
                if group.contains(c, ball.radius, node) {
                    members.push(y);
                }
            }
            best = best.max(value(x, &members));
        }
        if best == f64::NEG_INFINITY {
            return Err(Error::NodeUncovered {
                index: x,
                coords: nodes[x].clone(),
            });
        }
        out.push(best);
    }
    SampledField::from_values(grid.clone(), out)
}

pub fn fractional_maximal(f: &SampledField, balls: &[Ball], alpha: f64) -> Result<SampledField> {
    let grid = f.grid();
    check_alpha(alpha, grid.group.q())?;
    let (vol, e) = (grid.cell_volume(), exponent(alpha, grid.group.q()));
    let v = f.values();
    run(f, balls, |_, m| {
        let mut acc = 0.0;
        for &y in m {
            acc += v[y].abs();
        }
        scaled(acc, m.len(), vol, e)
    })
}

pub fn sharp_maximal(f: &SampledField, balls: &[Ball]) -> Result<SampledField> {
    let v = f.values();
    run(f, balls, |_, m| {
        oscillation(m.iter().map(|&y| v[y]), m.len())
    })
}

pub fn maximal_commutator(
    b: &SampledField,
    f: &SampledField,
    balls: &[Ball],
    alpha: f64,
) -> Result<SampledField> {
    f.check_same_grid(b)?;
    let grid = f.grid();
    check_alpha(alpha, grid.group.q())?;
    let (vol, e) = (grid.cell_volume(), exponent(alpha, grid.group.q()));
    let (bv, fv) = (b.values(), f.values());
    run(f, balls, |x, m| {
        let mut acc = 0.0;
        for &y in m {
            acc += (bv[x] - bv[y]).abs() * fv[y].abs();
        }
        scaled(acc, m.len(), vol, e)
    })
}

pub fn commutator_maximal(
    b: &SampledField,
    f: &SampledField,
    balls: &[Ball],
    alpha: f64,
) -> Result<SampledField> {
    let mf = fractional_maximal(f, balls, alpha)?;
    let mbf = fractional_maximal(&b.mul(f)?, balls, alpha)?;
    b.mul(&mf)?.sub(&mbf)
}

pub fn commutator_sharp(
    b: &SampledField,
    f: &SampledField,
    balls: &[Ball],
) -> Result<SampledField> {
    let mf = sharp_maximal(f, balls)?;
    let mbf = sharp_maximal(&b.mul(f)?, balls)?;
    b.mul(&mf)?.sub(&mbf)
}
