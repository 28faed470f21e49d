//! Settling time against the damping coefficient, for viscous damping and
//! for NADF. Sweeps run on all cores.
//!
//!     cargo run --release --example settling_sweep

use nadf::metrics::write_sweep_csv;
use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let field = solve_harmonic(&rasterize_scenario(&spec)?, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let path = trace_kinematic_path(&field, spec.start, &TraceOptions::default())?;
    let base = spec.controller_or_default();

    let viscous = base.clone().with_kind(ControllerKind::Viscous);
    let bs: Vec<f64> = (1..=15).map(|i| i as f64 / 10.0).collect();
    let rows = parameter_sweep(&spec, &viscous, &field, &opts, SweepParameter::B, &bs, Some(&path), 0)?;
    write_sweep_csv(SweepParameter::B, &rows, std::io::stdout().lock())?;

    let nadf = base.with_kind(ControllerKind::Nadf);
    let bds = [2.0, 5.0, 10.0, 20.0, 40.0];
    let rows = parameter_sweep(&spec, &nadf, &field, &opts, SweepParameter::Bd, &bds, Some(&path), 0)?;
    write_sweep_csv(SweepParameter::Bd, &rows, std::io::stdout().lock())?;
    Ok(())
}
