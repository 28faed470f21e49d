//! Trace the gradient streamline from the start to the target and write it
//! as CSV on stdout.
//!
//!     cargo run --release --example kinematic_path > path.csv

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let field = solve_harmonic(&rasterize_scenario(&spec)?, &SolverOptions::default())?;
    let path = trace_kinematic_path(&field, spec.start, &TraceOptions::default())?;
    eprintln!(
        "{} points, arc length {:.3} m, chord {:.3} m",
        path.points.len(),
        path.arc_length,
        (spec.start - spec.target).norm()
    );
    path.write_csv(std::io::stdout().lock())
}
