use rand::Rng;

use crate::Vec2;

/// Localization error: `p + u` with each component of `u` drawn from
/// `Uniform(-amplitude, amplitude) * cell_size`. Draws nothing when the
/// amplitude is zero.
pub fn perturb_sensing<R: Rng + ?Sized>(p: Vec2, amplitude: f64, cell_size: f64, rng: &mut R) -> Vec2 {
    if amplitude <= 0.0 {
        return p;
    }
    let half = amplitude * cell_size;
    let ux = rng.random_range(-half..half);
    let uy = rng.random_range(-half..half);
    p + Vec2::new(ux, uy)
}
