use super::grid::{Cell, OccupancyGrid};
use super::interp::NodalDerivatives;
use crate::error::{Error, Result};

/// Floor on the default sweep budget. Over-relaxation at omega 1.9 contracts
/// slowly on very small grids, where `10 * nx * ny` would be only a few dozen.
pub const MIN_DEFAULT_ITERS: usize = 2_000;

/// Settings for the red-black SOR Laplace solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the max-norm discrete Laplacian residual over free cells.
    pub tol: f64,
    /// `None` means `10 * nx * ny`, but never fewer than
    /// [`MIN_DEFAULT_ITERS`].
    pub max_iters: Option<usize>,
    pub omega: f64,
    /// Residual is evaluated every this many sweeps.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: None,
            omega: 1.9,
            check_every: 10,
        }
    }
}

/// A converged potential on a grid. Immutable after construction.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    grid: OccupancyGrid,
    values: Vec<f64>,
    iterations: usize,
    residual: f64,
    pub(crate) nodal: NodalDerivatives,
    max_gradient_norm: f64,
}

impl HarmonicField {
    /// Wraps externally supplied values (pinned cells are overwritten with
    /// their Dirichlet values only if `pin` is set). Used for synthetic fields.
    pub fn from_values(grid: OccupancyGrid, mut values: Vec<f64>, pin: bool) -> Result<Self> {
        if values.len() != grid.nx() * grid.ny() {
            return Err(Error::InvalidGrid("value count does not match grid".into()));
        }
        if pin {
            pin_dirichlet(&grid, &mut values);
        }
        let residual = residual_of(&grid, &values);
        Ok(Self::assemble(grid, values, 0, residual))
    }

    fn assemble(grid: OccupancyGrid, values: Vec<f64>, iterations: usize, residual: f64) -> Self {
        let nodal = NodalDerivatives::compute(&grid, &values);
        let max_gradient_norm = nodal.max_free_gradient_norm(&grid);
        Self {
            grid,
            values,
            iterations,
            residual,
            nodal,
            max_gradient_norm,
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Largest nodal gradient norm over free cells (1/m).
    pub fn max_gradient_norm(&self) -> f64 {
        self.max_gradient_norm
    }

    /// Default threshold below which the guidance direction is undefined.
    pub fn default_grad_eps(&self) -> f64 {
        1e-12 * self.max_gradient_norm
    }
}

fn pin_dirichlet(grid: &OccupancyGrid, values: &mut [f64]) {
    for (v, c) in values.iter_mut().zip(grid.labels()) {
        match c {
            Cell::Obstacle => *v = 1.0,
            Cell::Target => *v = 0.0,
            Cell::Free => {}
        }
    }
}

/// Mean of the in-range 4-neighbors of `(i, j)`.
#[inline]
fn neighbor_mean(grid: &OccupancyGrid, values: &[f64], i: usize, j: usize) -> f64 {
    let nx = grid.nx();
    let k = j * nx + i;
    let mut sum = 0.0;
    let mut n = 0.0;
    if i > 0 {
        sum += values[k - 1];
        n += 1.0;
    }
    if i + 1 < nx {
        sum += values[k + 1];
        n += 1.0;
    }
    if j > 0 {
        sum += values[k - nx];
        n += 1.0;
    }
    if j + 1 < grid.ny() {
        sum += values[k + nx];
        n += 1.0;
    }
    sum / n
}

fn residual_of(grid: &OccupancyGrid, values: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if grid.label(i, j) == Cell::Free {
                let k = grid.index(i, j);
                r = r.max((values[k] - neighbor_mean(grid, values, i, j)).abs());
            }
        }
    }
    r
}

/// Max over free cells of `|V(i,j) - mean of its 4 neighbors|`.
pub fn laplacian_residual(field: &HarmonicField) -> f64 {
    residual_of(&field.grid, &field.values)
}

/// Solves the Dirichlet Laplace problem: `V = 1` on obstacles, `V = 0` at the
/// target, discrete harmonic on free cells.
pub fn solve_harmonic(grid: &OccupancyGrid, opts: &SolverOptions) -> Result<HarmonicField> {
    let nx = grid.nx();
    let ny = grid.ny();
    let max_iters = opts.max_iters.unwrap_or((10 * nx * ny).max(MIN_DEFAULT_ITERS));
    let mut values = vec![1.0; nx * ny];
    pin_dirichlet(grid, &mut values);

    // Free cells split by checkerboard color so each half-sweep only reads
    // values from the other color.
    let mut colors: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    for j in 0..ny {
        for i in 0..nx {
            if grid.label(i, j) == Cell::Free {
                colors[(i + j) % 2].push((i, j));
            }
        }
    }

    let omega = opts.omega;
    let check_every = opts.check_every.max(1);
    let mut residual = residual_of(grid, &values);
    let mut iterations = 0;
    while residual > opts.tol && iterations < max_iters {
        for color in &colors {
            for &(i, j) in color {
                let k = j * nx + i;
                let mean = neighbor_mean(grid, &values, i, j);
                values[k] += omega * (mean - values[k]);
            }
        }
        iterations += 1;
        if iterations % check_every == 0 || iterations == max_iters {
            residual = residual_of(grid, &values);
        }
    }
    if residual > opts.tol {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    Ok(HarmonicField::assemble(grid.clone(), values, iterations, residual))
}
