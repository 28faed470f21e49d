//! Draw the room, the kinematic path and one NADF trajectory into an SVG.
//!
//!     cargo run --release --example render_svg > room.svg

use nadf::plot::{render_plot, Overlay, Plot, Series};
use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    let path = trace_kinematic_path(&field, spec.start, &TraceOptions::default())?;
    let traj = run_simulation(&spec, &spec.controller_or_default(), &field, &RunOptions::from_spec(&spec))?;

    let plot = Plot::new("room with dividers", "x [m]", "y [m]")
        .with_overlay(Overlay { grid: &grid, start: Some(spec.start), target: Some(spec.target) })
        .with_series(Series::from_path("kinematic", &path.points))
        .with_series(Series::new("nadf", traj.samples.iter().map(|s| (s.q.x, s.q.y)).collect()));
    print!("{}", render_plot(&plot));
    Ok(())
}
