//! Hold a pendulum horizontal with a PD regulator, first alone and then
//! with the bias circuit learning the gravity torque.
//!
//!     cargo run --release --example pendulum_bias

use nadf::error_cancel::pendulum_fixture;
use nadf::prelude::*;

fn main() -> nadf::Result<()> {
    let sc = pendulum_fixture();
    let bare = run_pendulum(&sc, false)?;
    println!("regulator alone: error {:.4} rad", bare.final_error());

    let run = run_pendulum(&sc, true)?;
    for (i, (s, e)) in run.switches.iter().zip(run.switch_errors()).enumerate().take(8) {
        println!("switch {:>2} at {:6.3} s: error {:+.3e} rad, bias {:.6} N*m", i + 1, s.t, e, s.u[0]);
    }
    println!("holding torque {:.6} N*m", sc.pendulum.holding_torque(sc.target_angle));
    Ok(())
}
