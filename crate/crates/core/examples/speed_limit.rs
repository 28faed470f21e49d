//! Cap the speed at 5 m/s and compare with the unlimited run.
//!
//!     cargo run --release --example speed_limit

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::room_dividers();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let free = spec.controller_or_default().with_kind(ControllerKind::Nadf);
    let capped = ControllerConfig { vmax: 5.0, ..free.clone() };

    for (label, cfg) in [("unlimited", free), ("vmax = 5", capped)] {
        let traj = run_simulation(&spec, &cfg, &field, &opts)?;
        let m = compute_metrics(&traj, &grid, None);
        println!(
            "{label:>9}: peak {:.3} m/s, Ts {:.2} s, effort {:.1} N*s",
            m.peak_speed,
            m.settling_time.unwrap_or(f64::NAN),
            m.control_effort
        );
    }
    Ok(())
}
