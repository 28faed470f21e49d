//! Count how often the mass swings back and forth across the corridor once it
//! has passed the obstruction. Reversals smaller than one grid cell are ignored.
//!
//!     cargo run --release --example corridor_oscillation

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::corridor_obstruction();
    let field = solve_harmonic(&rasterize_scenario(&spec)?, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let base = spec.controller_or_default();
    let past = spec
        .obstacles
        .iter()
        .map(|o| match o {
            nadf::scenario::Obstacle::Rect { max, .. } => max.x,
            nadf::scenario::Obstacle::Disc { center, radius } => center.x + radius,
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let runs = [
        ("viscous B=0.3", ControllerConfig { kind: ControllerKind::Viscous, b: 0.3, ..base.clone() }),
        ("nadf B_d=5", ControllerConfig { kind: ControllerKind::Nadf, bd: 5.0, ..base.clone() }),
    ];
    for (label, cfg) in runs {
        let traj = run_simulation(&spec, &cfg, &field, &opts)?;
        let t_pass = traj.samples.iter().find(|s| s.q.x > past).map_or(f64::INFINITY, |s| s.t);
        let flips = traj.velocity_sign_changes(1, spec.cell_size, |s| s.t >= t_pass);
        println!("{label:>13}: {flips} lateral reversals, {:?}", traj.terminal);
    }
    Ok(())
}
