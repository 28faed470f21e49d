//! Perturb the sensed position by up to half a cell and check that the
//! settling time barely moves. Pass a seed as the first argument.
//!
//!     cargo run --release --example sensing_noise -- 42

use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = fixtures::room_dividers();
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    let opts = RunOptions::from_spec(&spec);
    let cfg = spec.controller_or_default();

    let noisy = ScenarioSpec { noise_amplitude: 0.5, rng_seed: seed, ..spec.clone() };
    for (label, s) in [("clean", &spec), ("noisy", &noisy)] {
        let traj = run_simulation(s, &cfg, &field, &opts)?;
        let m = compute_metrics(&traj, &grid, None);
        println!("{label}: {:?}, Ts {:.2} s", traj.terminal, m.settling_time.unwrap_or(f64::NAN));
    }
    Ok(())
}
