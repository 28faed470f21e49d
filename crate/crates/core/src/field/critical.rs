use nalgebra::Matrix2;

use super::grid::Cell;
use super::interp::eval;
use super::solver::HarmonicField;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Saddle,
    Degenerate,
    /// Positive-definite or negative-definite Hessian. A harmonic field
    /// admits none in the interior; kept so a violation is visible.
    Extremum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub position: Vec2,
    pub gradient_norm: f64,
    pub hessian: Matrix2<f64>,
    pub determinant: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointReport {
    pub points: Vec<CriticalPoint>,
    pub grad_eps: f64,
    pub det_tol: f64,
}

impl CriticalPointReport {
    pub fn saddles(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.kind == CriticalKind::Saddle)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# critical points: {} (grad_eps {:e}, det_tol {:e})\n",
            self.points.len(),
            self.grad_eps,
            self.det_tol
        );
        out.push_str("x,y,grad_norm,h_xx,h_xy,h_yy,det,kind\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:?}\n",
                p.position.x,
                p.position.y,
                p.gradient_norm,
                p.hessian[(0, 0)],
                p.hessian[(0, 1)],
                p.hessian[(1, 1)],
                p.determinant,
                p.kind
            ));
        }
        out
    }
}

/// Hessian from central differences of the interpolated gradient at
/// half-cell spacing, symmetrized.
pub fn hessian_at(field: &HarmonicField, p: Vec2) -> Matrix2<f64> {
    let d = 0.5 * field.grid().cell_size();
    let gxp = eval(field, p + Vec2::new(0.5 * d, 0.0)).1;
    let gxm = eval(field, p - Vec2::new(0.5 * d, 0.0)).1;
    let gyp = eval(field, p + Vec2::new(0.0, 0.5 * d)).1;
    let gym = eval(field, p - Vec2::new(0.0, 0.5 * d)).1;
    let cx = (gxp - gxm) / d;
    let cy = (gyp - gym) / d;
    let off = 0.5 * (cx.y + cy.x);
    Matrix2::new(cx.x, off, off, cy.y)
}

/// Typical magnitude of second derivatives over free cells.
fn curvature_scale(field: &HarmonicField) -> f64 {
    let grid = field.grid();
    let h2 = grid.cell_size().powi(2);
    let mut sum = 0.0;
    let mut n = 0usize;
    for j in 1..grid.ny().saturating_sub(1) {
        for i in 1..grid.nx().saturating_sub(1) {
            if grid.label(i, j) != Cell::Free {
                continue;
            }
            let vxx = (field.value(i + 1, j) - 2.0 * field.value(i, j) + field.value(i - 1, j)) / h2;
            let vyy = (field.value(i, j + 1) - 2.0 * field.value(i, j) + field.value(i, j - 1)) / h2;
            sum += 0.5 * (vxx.abs() + vyy.abs());
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Scans free cells for stationary points of the interpolated potential.
///
/// A Newton iteration on the gradient is started from every free cell
/// center and kept only if it stays within one cell of its seed. `grad_eps`
/// defaults to `1e-9` times the largest nodal gradient norm.
pub fn locate_critical_points(field: &HarmonicField, grad_eps: Option<f64>) -> CriticalPointReport {
    let grid = field.grid();
    let h = grid.cell_size();
    let grad_eps = grad_eps.unwrap_or(1e-9 * field.max_gradient_norm());
    let scale = curvature_scale(field);
    let det_tol = 1e-8 * scale * scale;

    let mut points: Vec<CriticalPoint> = Vec::new();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if grid.label(i, j) != Cell::Free {
                continue;
            }
            let seed = grid.cell_center(i, j);
            let mut p = seed;
            let mut found = None;
            for _ in 0..40 {
                let g = eval(field, p).1;
                if g.norm() < grad_eps {
                    found = Some(p);
                    break;
                }
                let hess = hessian_at(field, p);
                let Some(inv) = hess.try_inverse() else { break };
                let mut step = -(inv * g);
                let len = step.norm();
                if len > 0.5 * h {
                    step *= 0.5 * h / len;
                }
                p += step;
                if (p - seed).amax() > 1.5 * h || grid.label_at(p) != Cell::Free {
                    break;
                }
            }
            let Some(p) = found else { continue };
            if grid.label_at(p) != Cell::Free
                || points.iter().any(|q| (q.position - p).norm() < 0.5 * h)
            {
                continue;
            }
            let hessian = hessian_at(field, p);
            let det = hessian.determinant();
            let kind = if det.abs() < det_tol {
                CriticalKind::Degenerate
            } else if det < 0.0 {
                CriticalKind::Saddle
            } else {
                CriticalKind::Extremum
            };
            points.push(CriticalPoint {
                position: p,
                gradient_norm: eval(field, p).1.norm(),
                hessian,
                determinant: det,
                kind,
            });
        }
    }
    CriticalPointReport {
        points,
        grad_eps,
        det_tol,
    }
}
