//! Predicted per-switch error ratio of the bias circuit for a few load
//! stiffnesses, next to a direct iteration of the linearized recursion.
//!
//!     cargo run --release --example contraction_rate

use nadf::error_cancel::contraction_matrix;
use nalgebra::{DMatrix, DVector};

fn main() -> nadf::Result<()> {
    let kp = DMatrix::from_row_slice(2, 2, &[10.0, 2.0, 2.0, 6.0]);
    for stiffness in [0.0, 1.0, 5.0, 20.0] {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![stiffness, 0.5 * stiffness]));
        let c = contraction_matrix(&h, &kp)?;
        let step = c.error_map();
        let mut e = DVector::from_vec(vec![1.0, 1.0]);
        let q0 = (c.whitening.transpose() * &e).norm();
        for _ in 0..5 {
            e = &step * e;
        }
        let q5 = (c.whitening.transpose() * &e).norm();
        println!(
            "H = diag({stiffness}, {}): rho = {:.4}, five-step decay {:.4e} (bound {:.4e})",
            0.5 * stiffness,
            c.rho,
            q5 / q0,
            c.rho.powi(5)
        );
    }
    Ok(())
}
