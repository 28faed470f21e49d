//! Control forces that turn the harmonic guidance field into an actuation
//! signal: nonlinear anisotropic damping (NADF), linear viscous damping,
//! clamping, sliding-mode gradient tracking, and a soft speed limit.
//!
//! The force helpers return the raw terms; [`compose_control`] applies the
//! gains and signs of the configured control law.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sample_gradient, HarmonicField};
use crate::Vec2;

/// Below this sliding-surface norm the sliding-mode force is zero.
pub const SLIDING_CHATTER_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Viscous,
    Nadf,
    NadfClamp,
    SlidingMode,
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "viscous" => Ok(Self::Viscous),
            "nadf" => Ok(Self::Nadf),
            "nadf_clamp" => Ok(Self::NadfClamp),
            "sliding_mode" | "sm" => Ok(Self::SlidingMode),
            other => Err(Error::invalid("controller", format!("unknown kind `{other}`"))),
        }
    }
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Viscous => "viscous",
            Self::Nadf => "nadf",
            Self::NadfClamp => "nadf_clamp",
            Self::SlidingMode => "sliding_mode",
        }
    }
}

/// Controller kind and gains. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Gradient gain, N per unit gradient.
    pub k: f64,
    /// Viscous coefficient, N·s/m.
    pub b: f64,
    /// NADF coefficient, N·s/m.
    pub bd: f64,
    /// Clamping gain, N/m.
    pub kc: f64,
    /// Clamp radius, m.
    pub sigma: f64,
    /// Speed limit in m/s; zero disables it.
    pub vmax: f64,
    /// Braking gain of the speed limit, N·s/m.
    pub kv: f64,
    /// Sliding-mode force magnitude, N.
    pub f0: f64,
    /// Sliding-mode desired speed, m/s.
    pub vd: f64,
    /// Gradient norm treated as singular; `None` scales with the field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_eps: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Nadf,
            k: 1.0,
            b: 0.0,
            bd: 10.0,
            kc: 0.0,
            sigma: 1.0,
            vmax: 0.0,
            kv: 10.0,
            f0: 100.0,
            vd: 1.0,
            grad_eps: None,
        }
    }
}

impl ControllerConfig {
    pub fn with_kind(mut self, kind: ControllerKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let gains = [
            ("k", self.k),
            ("b", self.b),
            ("bd", self.bd),
            ("kc", self.kc),
            ("sigma", self.sigma),
            ("vmax", self.vmax),
            ("kv", self.kv),
            ("f0", self.f0),
            ("vd", self.vd),
        ];
        for (name, value) in gains {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(
                    format!("controller.{name}"),
                    "must be a finite non-negative number",
                ));
            }
        }
        if self.kind == ControllerKind::NadfClamp && self.sigma <= 0.0 {
            return Err(Error::invalid("controller.sigma", "must be positive for nadf_clamp"));
        }
        if self.kind == ControllerKind::SlidingMode {
            if self.f0 <= 0.0 {
                return Err(Error::invalid("controller.f0", "must be positive for sliding_mode"));
            }
            if self.vd <= 0.0 {
                return Err(Error::invalid("controller.vd", "must be positive for sliding_mode"));
            }
        }
        if let Some(eps) = self.grad_eps {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(Error::invalid("controller.grad_eps", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn grad_eps_for(&self, field: &HarmonicField) -> f64 {
        self.grad_eps.unwrap_or_else(|| field.default_grad_eps())
    }

    pub fn speed_limited(&self) -> bool {
        self.vmax > 0.0
    }
}

/// Unit step with `phi(0) = 1`.
#[inline]
pub fn phi(s: f64) -> f64 {
    if s >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// NADF damping vector `M(x, v)` for guidance gradient `g`.
///
/// The component of `v` tangential to `g` is always returned; the radial
/// component is returned only when `g·v >= 0`, i.e. when the motion climbs
/// the potential. Below `grad_eps` the frame is undefined and `M = v`.
pub fn nadf_force<const N: usize>(g: &SVector<f64, N>, v: &SVector<f64, N>, grad_eps: f64) -> SVector<f64, N> {
    let gn = g.norm();
    if gn <= grad_eps || gn == 0.0 {
        return *v;
    }
    if phi(g.dot(v)) == 1.0 {
        // tangential plus full radial part is v itself; skip the round trip
        return *v;
    }
    let ghat = g / gn;
    v - ghat * ghat.dot(v)
}

pub fn viscous_force<const N: usize>(v: &SVector<f64, N>, b: f64) -> SVector<f64, N> {
    v * b
}

/// Clamping term: the displacement from the target while inside the clamp
/// radius and receding; zero otherwise.
pub fn clamping_force<const N: usize>(
    x: &SVector<f64, N>,
    v: &SVector<f64, N>,
    target: &SVector<f64, N>,
    sigma: f64,
) -> SVector<f64, N> {
    let d = x - target;
    d * (phi(sigma - d.norm()) * phi(v.dot(&d)))
}

/// Sliding-mode gradient tracking force `-F0 S/|S|` with surface
/// `S = v - v_d * (-g/|g|)`.
pub fn sliding_mode_force<const N: usize>(
    g: &SVector<f64, N>,
    v: &SVector<f64, N>,
    vd: f64,
    f0: f64,
    grad_eps: f64,
) -> std::result::Result<SVector<f64, N>, SingularGradient> {
    let gn = g.norm();
    if gn <= grad_eps || gn == 0.0 {
        return Err(SingularGradient);
    }
    let s = v + g * (vd / gn);
    let sn = s.norm();
    if sn < SLIDING_CHATTER_THRESHOLD {
        return Ok(SVector::zeros());
    }
    Ok(s * (-f0 / sn))
}

/// Marker for a vanishing guidance gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularGradient;

/// Braking term along `v`, active only above the speed limit.
pub fn speed_limit_force<const N: usize>(v: &SVector<f64, N>, vmax: f64, kv: f64) -> SVector<f64, N> {
    let speed = v.norm();
    if speed <= vmax || speed == 0.0 {
        return SVector::zeros();
    }
    v * (kv * (speed - vmax) / speed)
}

/// Total control force for the configured law at position `x` (the sensed
/// position) and velocity `v`.
pub fn compose_control(
    cfg: &ControllerConfig,
    x: Vec2,
    v: Vec2,
    field: &HarmonicField,
    target: Vec2,
) -> Result<Vec2> {
    let g = sample_gradient(field, x)?;
    let eps = cfg.grad_eps_for(field);
    let mut f = match cfg.kind {
        ControllerKind::Viscous => -viscous_force(&v, cfg.b) - g * cfg.k,
        ControllerKind::Nadf => -nadf_force(&g, &v, eps) * cfg.bd - g * cfg.k,
        ControllerKind::NadfClamp => {
            -nadf_force(&g, &v, eps) * cfg.bd
                - g * cfg.k
                - clamping_force(&x, &v, &target, cfg.sigma) * cfg.kc
        }
        ControllerKind::SlidingMode => {
            sliding_mode_force(&g, &v, cfg.vd, cfg.f0, eps).map_err(|_| Error::SingularGradient(x))?
        }
    };
    if cfg.speed_limited() {
        f -= speed_limit_force(&v, cfg.vmax, cfg.kv);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rasterize_scenario, sample_gradient, solve_harmonic, SolverOptions};
    use crate::scenario::fixtures;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn nadf_examples() {
        assert_eq!(nadf_force(&v(1.0, 0.0), &v(0.0, 1.0), 0.0), v(0.0, 1.0));
        assert_eq!(nadf_force(&v(1.0, 0.0), &v(-1.0, 0.0), 0.0), v(0.0, 0.0));
        assert_eq!(nadf_force(&v(1.0, 0.0), &v(1.0, 0.0), 0.0), v(1.0, 0.0));
        let m = nadf_force(&v(3.0, 4.0), &v(4.0, -3.0), 0.0);
        assert!((m - v(4.0, -3.0)).norm() < 1e-12);
    }

    #[test]
    fn nadf_singular_gradient_falls_back_to_full_damping() {
        let vel = v(0.3, -0.7);
        assert_eq!(nadf_force(&v(1e-14, 0.0), &vel, 1e-12), vel);
        assert_eq!(nadf_force(&v(0.0, 0.0), &vel, 0.0), vel);
    }

    #[test]
    fn nadf_is_dimension_generic() {
        let g = SVector::<f64, 3>::new(0.0, 0.0, 2.0);
        let vel = SVector::<f64, 3>::new(1.0, 2.0, -3.0);
        // downhill along z is left alone, x and y are damped
        assert_eq!(nadf_force(&g, &vel, 0.0), SVector::<f64, 3>::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn viscous_examples() {
        assert_eq!(viscous_force(&v(0.0, 0.0), 0.3), v(0.0, 0.0));
        assert!((viscous_force(&v(2.0, 0.0), 0.1) - v(0.2, 0.0)).norm() < 1e-15);
        assert_eq!(viscous_force(&v(5.0, -1.0), 0.0), v(0.0, 0.0));
    }

    #[test]
    fn clamping_examples() {
        let t = v(0.0, 0.0);
        assert_eq!(clamping_force(&v(0.1, 0.0), &v(1.0, 0.0), &t, 0.5), v(0.1, 0.0));
        assert_eq!(clamping_force(&v(0.1, 0.0), &v(-1.0, 0.0), &t, 0.5), v(0.0, 0.0));
        assert_eq!(clamping_force(&v(1.0, 0.0), &v(1.0, 0.0), &t, 0.5), v(0.0, 0.0));
        assert_eq!(clamping_force(&v(1.0, 0.0), &v(-3.0, 2.0), &t, 0.5), v(0.0, 0.0));
    }

    #[test]
    fn sliding_mode_examples() {
        let f = sliding_mode_force(&v(1.0, 0.0), &v(0.0, 0.0), 5.0, 100.0, 0.0).unwrap();
        assert!((f - v(-100.0, 0.0)).norm() < 1e-12);
        let on_surface = sliding_mode_force(&v(1.0, 0.0), &v(-5.0, 0.0), 5.0, 100.0, 0.0).unwrap();
        assert_eq!(on_surface, v(0.0, 0.0));
        assert_eq!(
            sliding_mode_force(&v(0.0, 0.0), &v(1.0, 0.0), 5.0, 100.0, 1e-12),
            Err(SingularGradient)
        );
    }

    #[test]
    fn speed_limit_examples() {
        assert_eq!(speed_limit_force(&v(5.0, 0.0), 5.0, 10.0), v(0.0, 0.0));
        assert!((speed_limit_force(&v(6.0, 0.0), 5.0, 10.0) - v(10.0, 0.0)).norm() < 1e-12);
        assert_eq!(speed_limit_force(&v(3.0, 0.0), 5.0, 10.0), v(0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ControllerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.bd = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidField { field, .. }) if field == "controller.bd"));
        let cfg = ControllerConfig {
            kind: ControllerKind::SlidingMode,
            f0: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ControllerConfig {
            kind: ControllerKind::NadfClamp,
            sigma: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn room_field() -> (HarmonicField, Vec2) {
        let g = rasterize_scenario(&fixtures::room_dividers()).unwrap();
        let t = g.target_point();
        (solve_harmonic(&g, &SolverOptions::default()).unwrap(), t)
    }

    #[test]
    fn composed_laws() {
        let (field, target) = room_field();
        let x = fixtures::room_dividers().start;
        let g = sample_gradient(&field, x).unwrap();

        // conformant motion: NADF is silent
        let cfg = ControllerConfig {
            kind: ControllerKind::Nadf,
            k: 2.0,
            bd: 10.0,
            ..Default::default()
        };
        let vel = -g.normalize() * 1.7;
        let f = compose_control(&cfg, x, vel, &field, target).unwrap();
        assert!((f + g * 2.0).norm() < 1e-12 * (1.0 + f.norm()));

        // clamped law at the target at rest: zero displacement, no clamp
        let cfg = ControllerConfig {
            kind: ControllerKind::NadfClamp,
            kc: 10.0,
            sigma: 1.0,
            ..cfg
        };
        let f = compose_control(&cfg, target, Vec2::zeros(), &field, target).unwrap();
        let gt = sample_gradient(&field, target).unwrap();
        assert!((f + gt * 2.0).norm() < 1e-12);

        // viscous law against an independent evaluation at random states
        let cfg = ControllerConfig {
            kind: ControllerKind::Viscous,
            k: 1.0,
            b: 0.1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 10 {
            let p = Vec2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
            if !field.grid().is_free_point(p) {
                continue;
            }
            let vel = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let gp = sample_gradient(&field, p).unwrap();
            let expect = Vec2::new(-0.1 * vel.x - gp.x, -0.1 * vel.y - gp.y);
            let got = compose_control(&cfg, p, vel, &field, target).unwrap();
            assert!((got - expect).norm() < 1e-14);
            checked += 1;
        }
    }

    #[test]
    fn gradient_gain_only_scales_gradient_term() {
        let (field, target) = room_field();
        let x = Vec2::new(3.3, 7.1);
        let vel = Vec2::new(0.4, -1.2);
        let g = sample_gradient(&field, x).unwrap();
        for kind in [ControllerKind::Viscous, ControllerKind::Nadf, ControllerKind::NadfClamp] {
            let base = ControllerConfig {
                kind,
                b: 0.5,
                kc: 3.0,
                vmax: 1.0,
                ..Default::default()
            };
            let a = compose_control(&ControllerConfig { k: 1.0, ..base.clone() }, x, vel, &field, target).unwrap();
            let b = compose_control(&ControllerConfig { k: 4.0, ..base }, x, vel, &field, target).unwrap();
            assert!(((a - b) - g * 3.0).norm() < 1e-12);
        }
    }

    #[test]
    fn sliding_mode_magnitude_is_bang_bang() {
        let (field, target) = room_field();
        let cfg = ControllerConfig {
            kind: ControllerKind::SlidingMode,
            f0: 100.0,
            vd: 2.0,
            ..Default::default()
        };
        let f = compose_control(&cfg, Vec2::new(2.2, 2.2), Vec2::new(0.5, 0.1), &field, target).unwrap();
        assert!((f.norm() - 100.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn nadf_dichotomy_and_passivity(
            gx in -10.0..10.0f64, gy in -10.0..10.0f64,
            vx in -10.0..10.0f64, vy in -10.0..10.0f64,
        ) {
            let g = v(gx, gy);
            let vel = v(vx, vy);
            prop_assume!(g.norm() > 1e-6);
            let m = nadf_force(&g, &vel, 0.0);
            prop_assert!(vel.dot(&m) >= -1e-12);
            if g.dot(&vel) >= 0.0 {
                prop_assert_eq!(m, vel);
            } else {
                let gh = g.normalize();
                let tang = vel - gh * gh.dot(&vel);
                prop_assert!((m - tang).norm() <= 1e-12 * (1.0 + vel.norm()));
            }
        }

        #[test]
        fn nadf_vanishes_only_for_conformant_motion(
            gx in -5.0..5.0f64, gy in -5.0..5.0f64, c in 0.01..5.0f64,
        ) {
            let g = v(gx, gy);
            prop_assume!(g.norm() > 1e-3);
            let vel = -g.normalize() * c;
            prop_assert!(nadf_force(&g, &vel, 0.0).norm() < 1e-12 * c.max(1.0));
            // any tangential admixture makes it nonzero
            let n = v(-g.y, g.x).normalize();
            prop_assert!(nadf_force(&g, &(vel + n * 0.1), 0.0).norm() > 0.05);
        }

        #[test]
        fn clamping_is_passive(
            x in -2.0..2.0f64, y in -2.0..2.0f64,
            vx in -3.0..3.0f64, vy in -3.0..3.0f64,
        ) {
            let vel = v(vx, vy);
            let fc = clamping_force(&v(x, y), &vel, &v(0.0, 0.0), 1.0);
            prop_assert!(vel.dot(&fc) >= 0.0);
        }

        #[test]
        fn speed_limit_is_passive(vx in -20.0..20.0f64, vy in -20.0..20.0f64) {
            let vel = v(vx, vy);
            prop_assert!(vel.dot(&speed_limit_force(&vel, 5.0, 10.0)) >= 0.0);
        }
    }
}
