//! Continuous potential and gradient from the cell values.
//!
//! Nodal derivatives are central differences, switching to one-sided
//! differences that skip obstacle neighbors. Between cell centers the
//! potential is a bicubic Hermite patch built from those nodal values and
//! derivatives, so the sampled gradient is exactly the derivative of the
//! sampled potential and is continuous across cell boundaries.

use super::grid::{Cell, OccupancyGrid};
use super::solver::HarmonicField;
use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone)]
pub(crate) struct NodalDerivatives {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub gxy: Vec<f64>,
}

fn axis_derivative(grid: &OccupancyGrid, f: &[f64], i: usize, j: usize, along_x: bool) -> f64 {
    let h = grid.cell_size();
    let (di, dj) = if along_x { (1isize, 0isize) } else { (0, 1) };
    let usable = |ii: isize, jj: isize| grid.label_or_wall(ii, jj) != Cell::Obstacle;
    let (ii, jj) = (i as isize, j as isize);
    let lo = (ii - di, jj - dj);
    let hi = (ii + di, jj + dj);
    let lo_ok = usable(lo.0, lo.1);
    let hi_ok = usable(hi.0, hi.1);
    let at = |p: (isize, isize)| f[grid.index(p.0 as usize, p.1 as usize)];
    let c = f[grid.index(i, j)];
    match (lo_ok, hi_ok) {
        (true, true) => (at(hi) - at(lo)) / (2.0 * h),
        (true, false) => (c - at(lo)) / h,
        (false, true) => (at(hi) - c) / h,
        (false, false) => 0.0,
    }
}

impl NodalDerivatives {
    pub fn compute(grid: &OccupancyGrid, values: &[f64]) -> Self {
        let n = grid.nx() * grid.ny();
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.index(i, j);
                gx[k] = axis_derivative(grid, values, i, j, true);
                gy[k] = axis_derivative(grid, values, i, j, false);
            }
        }
        let mut gxy = vec![0.0; n];
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                gxy[grid.index(i, j)] = axis_derivative(grid, &gy, i, j, true);
            }
        }
        Self { gx, gy, gxy }
    }

    pub fn max_free_gradient_norm(&self, grid: &OccupancyGrid) -> f64 {
        grid.labels()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Free)
            .map(|(k, _)| self.gx[k].hypot(self.gy[k]))
            .fold(0.0, f64::max)
    }
}

#[inline]
fn basis(s: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let s2 = s * s;
    let s3 = s2 * s;
    // value weights, slope weights, and their derivatives in s
    let a = [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2];
    let b = [s3 - 2.0 * s2 + s, s3 - s2];
    let da = [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s];
    let db = [3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s];
    (a, b, da, db)
}

/// Potential and gradient at `p`, without the free-space check.
pub(crate) fn eval(field: &HarmonicField, p: Vec2) -> (f64, Vec2) {
    let grid = field.grid();
    let h = grid.cell_size();
    let nodal = &field.nodal;
    let values = field.values();

    let u = p.x / h - 0.5;
    let v = p.y / h - 0.5;
    let i0 = (u.floor().max(0.0) as usize).min(grid.nx().saturating_sub(2));
    let j0 = (v.floor().max(0.0) as usize).min(grid.ny().saturating_sub(2));
    let i1 = (i0 + 1).min(grid.nx() - 1);
    let j1 = (j0 + 1).min(grid.ny() - 1);
    let s = if i1 == i0 { 0.0 } else { u - i0 as f64 };
    let t = if j1 == j0 { 0.0 } else { v - j0 as f64 };

    let (sa, sb, sda, sdb) = basis(s);
    let (ta, tb, tda, tdb) = basis(t);

    let mut val = 0.0;
    let mut ds = 0.0;
    let mut dt = 0.0;
    for (a, ii) in [i0, i1].into_iter().enumerate() {
        for (b, jj) in [j0, j1].into_iter().enumerate() {
            let k = grid.index(ii, jj);
            let f = values[k];
            let fx = h * nodal.gx[k];
            let fy = h * nodal.gy[k];
            let fxy = h * h * nodal.gxy[k];
            val += f * sa[a] * ta[b] + fx * sb[a] * ta[b] + fy * sa[a] * tb[b] + fxy * sb[a] * tb[b];
            ds += f * sda[a] * ta[b] + fx * sdb[a] * ta[b] + fy * sda[a] * tb[b] + fxy * sdb[a] * tb[b];
            dt += f * sa[a] * tda[b] + fx * sb[a] * tda[b] + fy * sa[a] * tdb[b] + fxy * sb[a] * tdb[b];
        }
    }
    (val, Vec2::new(ds / h, dt / h))
}

fn check_free(field: &HarmonicField, p: Vec2) -> Result<()> {
    if p.iter().all(|c| c.is_finite()) && field.grid().is_free_point(p) {
        Ok(())
    } else {
        Err(Error::OutOfFreeSpace(p))
    }
}

/// Gradient of the interpolated potential at `p`.
pub fn sample_gradient(field: &HarmonicField, p: Vec2) -> Result<Vec2> {
    check_free(field, p)?;
    Ok(eval(field, p).1)
}

/// Interpolated potential at `p`.
pub fn sample_potential(field: &HarmonicField, p: Vec2) -> Result<f64> {
    check_free(field, p)?;
    Ok(eval(field, p).0)
}

/// Potential and gradient in one evaluation.
pub fn sample(field: &HarmonicField, p: Vec2) -> Result<(f64, Vec2)> {
    check_free(field, p)?;
    Ok(eval(field, p))
}
