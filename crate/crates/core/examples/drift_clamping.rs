//! A constant push drags an NADF-controlled mass off the target. The
//! clamping term holds it within |G|/K_c.
//!
//!     cargo run --release --example drift_clamping

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let spec = fixtures::drift_room();
    let field = solve_harmonic(&rasterize_scenario(&spec)?, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let clamp = spec.controller_or_default();
    let bare = clamp.clone().with_kind(ControllerKind::Nadf);

    println!("drift {:?} N, bound {:.3} m", spec.drift.as_slice(), spec.drift.norm() / clamp.kc);
    for (label, cfg) in [("nadf", bare), ("nadf + clamp", clamp)] {
        let traj = run_simulation(&spec, &cfg, &field, &opts)?;
        let closest = traj.samples.iter().map(|s| s.dist).fold(f64::INFINITY, f64::min);
        println!(
            "{label:>12}: closest {:.3} m, final distance {:.3} m",
            closest,
            traj.final_sample().dist
        );
    }
    Ok(())
}
