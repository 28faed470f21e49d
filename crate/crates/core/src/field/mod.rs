//! Workspace rasterization, the harmonic potential, and its analysis.

mod critical;
mod grid;
mod interp;
mod io;
mod noise;
mod solver;

pub use critical::{hessian_at, locate_critical_points, CriticalKind, CriticalPoint, CriticalPointReport};
pub use grid::{rasterize_scenario, Cell, OccupancyGrid};
pub use interp::{sample, sample_gradient, sample_potential};
pub use io::{parse_field_csv, write_field_csv, FieldMeta};
pub use noise::perturb_sensing;
pub use solver::{laplacian_residual, solve_harmonic, HarmonicField, SolverOptions};
