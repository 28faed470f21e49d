//! Solve the harmonic potential on the room fixture and report how well it
//! satisfies the discrete Laplace equation.
//!
//!     cargo run --release --example solve_field

use nadf::field::{laplacian_residual, locate_critical_points, sample_potential};
use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;

    println!("{} x {} cells, {} SOR sweeps", grid.nx(), grid.ny(), field.iterations());
    println!("max residual {:.3e}", laplacian_residual(&field));
    println!("V(start) = {:.9}", sample_potential(&field, spec.start)?);

    let report = locate_critical_points(&field, None);
    print!("{}", report.to_text());
    Ok(())
}
