//! Light viscous damping crashes, heavy viscous damping crawls, and the
//! anisotropic damper gets there quickly without touching a wall.
//!
//!     cargo run --release --example damping_comparison

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let base = spec.controller_or_default();

    let runs = [
        ("viscous B=0.1", ControllerConfig { kind: ControllerKind::Viscous, b: 0.1, ..base.clone() }),
        ("viscous B=0.7", ControllerConfig { kind: ControllerKind::Viscous, b: 0.7, ..base.clone() }),
        ("nadf B_d=10", ControllerConfig { kind: ControllerKind::Nadf, bd: 10.0, ..base.clone() }),
    ];
    for (label, cfg) in runs {
        let traj = run_simulation(&spec, &cfg, &field, &opts)?;
        let m = compute_metrics(&traj, &grid, None);
        println!(
            "{label:>14}: {:?}, Ts = {}, clearance {:.3} m",
            traj.terminal,
            m.settling_time.map_or("never".into(), |t| format!("{t:.2} s")),
            m.min_clearance
        );
    }
    Ok(())
}
