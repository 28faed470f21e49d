//! Sliding-mode gradient tracking against the clamped damper on the drift
//! fixture. Both reach the target, at very different control cost.
//!
//!     cargo run --release --example sliding_mode

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::drift_room();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let clamp = spec.controller_or_default();
    let sm = ControllerConfig { kind: ControllerKind::SlidingMode, f0: 100.0, ..clamp.clone() };

    for cfg in [clamp, sm] {
        let traj = run_simulation(&spec, &cfg, &field, &opts)?;
        let m = compute_metrics(&traj, &grid, None);
        println!(
            "{:>12}: final distance {:.3} m, effort {:.1} N*s",
            cfg.kind.as_str(),
            m.final_error,
            m.control_effort
        );
    }
    Ok(())
}
