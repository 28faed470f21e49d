//! Kinematic reference path: the streamline of the guidance field from a
//! start point to the target, used as the geometric ground truth when
//! measuring how far a dynamic run strays.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{sample_gradient, HarmonicField};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub points: Vec<Vec2>,
    pub arc_length: f64,
}

impl Path {
    /// Cumulative arc length at each point.
    pub fn stations(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        for (k, p) in self.points.iter().enumerate() {
            if k > 0 {
                acc += (p - self.points[k - 1]).norm();
            }
            s.push(acc);
        }
        s
    }

    /// Writes `s,x,y` rows with a unit header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s_m,x_m,y_m")?;
        for (s, p) in self.stations().into_iter().zip(&self.points) {
            writeln!(w, "{s},{},{}", p.x, p.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Arc length per step; `None` means a quarter cell.
    pub step: Option<f64>,
    /// `None` means two cells.
    pub capture_radius: Option<f64>,
    pub max_steps: usize,
    /// Gradient norm treated as a stall; `None` scales with the field.
    pub grad_eps: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: None,
            capture_radius: None,
            max_steps: 1_000_000,
            grad_eps: None,
        }
    }
}

/// Integrates the unit-speed descent flow `dx/ds = -∇V/|∇V|` with RK4 until
/// the capture radius around the target is reached.
pub fn trace_kinematic_path(field: &HarmonicField, x0: Vec2, opts: &TraceOptions) -> Result<Path> {
    let grid = field.grid();
    let h = grid.cell_size();
    let step = opts.step.unwrap_or(0.25 * h);
    if !(step > 0.0 && step < h) {
        return Err(Error::invalid("step", "must be positive and below the cell size"));
    }
    let capture = opts.capture_radius.unwrap_or(2.0 * h);
    let eps = opts.grad_eps.unwrap_or_else(|| field.default_grad_eps());
    let target = grid.target_point();

    let direction = |p: Vec2| -> Result<Vec2> {
        let g = sample_gradient(field, p)?;
        let n = g.norm();
        if n <= eps {
            return Err(Error::StalledAtCriticalPoint(p));
        }
        Ok(-g / n)
    };

    // validates that the start lies in free space
    sample_gradient(field, x0)?;
    let mut points = vec![x0];
    let mut arc = 0.0;
    let mut x = x0;
    for _ in 0..opts.max_steps {
        if (x - target).norm() <= capture {
            return Ok(Path { points, arc_length: arc });
        }
        let k1 = direction(x)?;
        let k2 = direction(x + k1 * (0.5 * step))?;
        let k3 = direction(x + k2 * (0.5 * step))?;
        let k4 = direction(x + k3 * step)?;
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        if !grid.is_free_point(next) {
            return Err(Error::OutOfFreeSpace(next));
        }
        arc += (next - x).norm();
        points.push(next);
        x = next;
    }
    if (x - target).norm() <= capture {
        return Ok(Path { points, arc_length: arc });
    }
    Err(Error::MaxStepsExceeded(opts.max_steps))
}
