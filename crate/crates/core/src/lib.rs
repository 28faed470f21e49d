//! Harmonic potential field guidance turned into kinodynamic control.
//!
//! A scenario is rasterized into an occupancy grid, a harmonic potential is
//! solved on it, and a second-order plant is steered by a control law built
//! from the potential's gradient: nonlinear anisotropic damping (NADF),
//! linear viscous damping, clamping, sliding mode, and a speed limit. A
//! pendulum regulator with blind bias cancellation is included as well.
//!
//! ```no_run
//! use nadf::prelude::*;
//!
//! let spec = nadf::scenario::fixtures::room_dividers();
//! let grid = rasterize_scenario(&spec).unwrap();
//! let field = solve_harmonic(&grid, &SolverOptions::default()).unwrap();
//! let cfg = ControllerConfig { kind: ControllerKind::Nadf, bd: 10.0, ..Default::default() };
//! let traj = run_simulation(&spec, &cfg, &field, &RunOptions::from_spec(&spec)).unwrap();
//! println!("{:?} after {} samples", traj.terminal, traj.samples.len());
//! ```

pub mod cli;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod error_cancel;
pub mod field;
pub mod kinematics;
pub mod metrics;
pub mod plot;
pub mod scenario;

pub use error::{Error, Result};

/// The types and entry points most programs need.
pub mod prelude {
    pub use crate::controllers::{compose_control, ControllerConfig, ControllerKind};
    pub use crate::dynamics::{run_simulation, RunOptions, TerminalReason, Trajectory};
    pub use crate::error_cancel::{contraction_matrix, run_pendulum, BiasCircuit, PendulumScenario};
    pub use crate::field::{rasterize_scenario, sample_gradient, sample_potential, solve_harmonic, HarmonicField, SolverOptions};
    pub use crate::kinematics::{trace_kinematic_path, TraceOptions};
    pub use crate::metrics::{compute_metrics, parameter_sweep, MetricsReport, SweepParameter};
    pub use crate::scenario::{fixtures, ScenarioSpec};
    pub use crate::{Error, Result, Vec2};
}

/// Planar vector in meters (positions), m/s (velocities) or newtons.
pub type Vec2 = nalgebra::Vector2<f64>;
