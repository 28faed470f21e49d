//! Scenario documents: workspace geometry, start/target, drift, and the
//! optional controller and simulation blocks that travel with them.
//!
//! Scenario files are JSON. Unknown keys are rejected so that a typo in a
//! gain name fails loudly instead of silently falling back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerConfig;
use crate::error::{Error, Result};
use crate::Vec2;

/// Axis-aligned rectangle or disc, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Rect { min: Vec2, max: Vec2 },
    Disc { center: Vec2, radius: f64 },
}

impl Obstacle {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Obstacle::Rect {
            min: Vec2::new(x0.min(x1), y0.min(y1)),
            max: Vec2::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn disc(cx: f64, cy: f64, radius: f64) -> Self {
        Obstacle::Disc {
            center: Vec2::new(cx, cy),
            radius,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Obstacle::Rect { min, max } => {
                p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y
            }
            Obstacle::Disc { center, radius } => (p - center).norm() <= *radius,
        }
    }
}

/// Integration settings carried by a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub dt: f64,
    pub t_max: f64,
    /// Capture radius in meters; `None` means two cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capture_radius: Option<f64>,
    pub rest_speed: f64,
    /// With sensing noise the mass never comes to rest, so capture instead
    /// requires staying inside the capture radius for this long, seconds.
    pub capture_hold: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 120.0,
            capture_radius: None,
            rest_speed: 1e-3,
            capture_hold: 1.0,
        }
    }
}

impl SimulationSettings {
    pub fn capture_radius_for(&self, cell_size: f64) -> f64 {
        self.capture_radius.unwrap_or(2.0 * cell_size)
    }
}

fn is_zero_vec(v: &Vec2) -> bool {
    v.x == 0.0 && v.y == 0.0
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// A planar workspace plus the initial conditions of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Width and height in meters.
    pub extent: Vec2,
    pub cell_size: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub target: Vec2,
    pub start: Vec2,
    #[serde(default = "Vec2::zeros", skip_serializing_if = "is_zero_vec")]
    pub start_velocity: Vec2,
    /// Constant external force acting on the mass, in newtons.
    #[serde(default = "Vec2::zeros", skip_serializing_if = "is_zero_vec")]
    pub drift: Vec2,
    /// Sensing noise half-width, in cells.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSettings>,
}

impl ScenarioSpec {
    /// Checks the geometric invariants that do not need rasterization.
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(Error::invalid("cell_size", "must be a positive number of meters"));
        }
        if !(self.extent.x.is_finite() && self.extent.x > 0.0) {
            return Err(Error::invalid("extent", "width must be positive"));
        }
        if !(self.extent.y.is_finite() && self.extent.y > 0.0) {
            return Err(Error::invalid("extent", "height must be positive"));
        }
        if self.extent.x < 3.0 * self.cell_size || self.extent.y < 3.0 * self.cell_size {
            return Err(Error::invalid("extent", "must span at least three cells per axis"));
        }
        let inside = |p: Vec2| p.x > 0.0 && p.y > 0.0 && p.x < self.extent.x && p.y < self.extent.y;
        if !inside(self.target) {
            return Err(Error::invalid("target", "must lie inside the extent"));
        }
        if !inside(self.start) {
            return Err(Error::invalid("start", "must lie inside the extent"));
        }
        if !(self.noise_amplitude.is_finite() && self.noise_amplitude >= 0.0) {
            return Err(Error::invalid("noise_amplitude", "must be non-negative"));
        }
        if !self.drift.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("drift", "must be finite"));
        }
        if !self.start_velocity.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("start_velocity", "must be finite"));
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            match ob {
                Obstacle::Rect { min, max } if !(min.x <= max.x && min.y <= max.y) => {
                    return Err(Error::invalid(format!("obstacles[{i}]"), "rect min must not exceed max"));
                }
                Obstacle::Disc { radius, .. } if !(*radius > 0.0) => {
                    return Err(Error::invalid(format!("obstacles[{i}].radius"), "must be positive"));
                }
                _ => {}
            }
        }
        if let Some(cfg) = &self.controller {
            cfg.validate()?;
        }
        if let Some(sim) = &self.simulation {
            if !(sim.dt > 0.0) {
                return Err(Error::invalid("simulation.dt", "must be positive"));
            }
            if !(sim.t_max > 0.0) {
                return Err(Error::invalid("simulation.t_max", "must be positive"));
            }
            if !(sim.capture_hold >= 0.0 && sim.capture_hold.is_finite()) {
                return Err(Error::invalid("simulation.capture_hold", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| {
            Error::invalid(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn controller_or_default(&self) -> ControllerConfig {
        self.controller.clone().unwrap_or_default()
    }

    pub fn simulation_or_default(&self) -> SimulationSettings {
        self.simulation.unwrap_or_default()
    }
}

/// Scenario fixtures shipped with the crate.
pub mod fixtures {
    use super::ScenarioSpec;

    macro_rules! fixture {
        ($fn_name:ident, $file:literal) => {
            pub fn $fn_name() -> ScenarioSpec {
                ScenarioSpec::from_json(include_str!(concat!(
                    env!("CARGO_MANIFEST_DIR"),
                    "/fixtures/",
                    $file
                )))
                .expect(concat!("fixture ", $file, " is valid"))
            }
        };
    }

    fixture!(room_dividers, "room_dividers.json");
    fixture!(corridor_empty, "corridor_empty.json");
    fixture!(corridor_obstruction, "corridor_obstruction.json");
    fixture!(corridor_barrier, "corridor_barrier.json");
    fixture!(corridor_multi, "corridor_multi.json");
    fixture!(drift_room, "drift_room.json");

    /// Every grid fixture, by name.
    pub fn all() -> Vec<ScenarioSpec> {
        vec![
            room_dividers(),
            corridor_empty(),
            corridor_obstruction(),
            corridor_barrier(),
            corridor_multi(),
            drift_room(),
        ]
    }

    pub fn by_name(name: &str) -> Option<ScenarioSpec> {
        all().into_iter().find(|s| s.name == name)
    }
}
