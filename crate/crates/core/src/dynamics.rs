//! Plant models, fixed-step RK4 integration of `D q'' + C q' + G = F`, the
//! Lyapunov energy of the closed loop, and the simulation driver that ties a
//! scenario, a field and a controller together.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{compose_control, ControllerConfig};
use crate::error::{Error, Result};
use crate::field::{perturb_sensing, sample_potential, HarmonicField};
use crate::scenario::ScenarioSpec;
use crate::Vec2;

/// Inertia and configuration-dependent forces of a mechanical system with
/// `D` generalized coordinates.
pub trait Mechanism<const D: usize> {
    /// `D(q)`.
    fn mass_matrix(&self, q: &SVector<f64, D>) -> SMatrix<f64, D, D>;
    /// `C(q, q') q' + G(q)`: everything on the left-hand side except inertia.
    fn bias(&self, q: &SVector<f64, D>, qdot: &SVector<f64, D>) -> SVector<f64, D>;
}

/// Planar point mass pushed by a constant external force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub mass: f64,
    /// External force acting on the mass, N.
    pub drift: Vec2,
}

impl Mechanism<2> for PointMass {
    fn mass_matrix(&self, _q: &Vec2) -> SMatrix<f64, 2, 2> {
        SMatrix::identity() * self.mass
    }

    fn bias(&self, _q: &Vec2, _qdot: &Vec2) -> Vec2 {
        -self.drift
    }
}

/// Rigid pendulum `M L θ'' + M g sin θ = u`, with θ measured from the
/// hanging position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pendulum {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self { mass: 1.0, length: 1.0, gravity: 9.8 }
    }
}

impl Pendulum {
    /// Static torque needed to hold angle `theta`.
    pub fn holding_torque(&self, theta: f64) -> f64 {
        self.mass * self.gravity * theta.sin()
    }
}

impl Mechanism<1> for Pendulum {
    fn mass_matrix(&self, _q: &SVector<f64, 1>) -> SMatrix<f64, 1, 1> {
        SMatrix::<f64, 1, 1>::new(self.mass * self.length)
    }

    fn bias(&self, q: &SVector<f64, 1>, _qdot: &SVector<f64, 1>) -> SVector<f64, 1> {
        SVector::<f64, 1>::new(self.holding_torque(q[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsModel {
    PointMass(PointMass),
    Pendulum(Pendulum),
}

impl DynamicsModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DynamicsModel::PointMass(p) => {
                if !(p.mass > 0.0 && p.mass.is_finite()) {
                    return Err(Error::invalid("mass", "must be positive"));
                }
                if !p.drift.iter().all(|c| c.is_finite()) {
                    return Err(Error::invalid("drift", "must be finite"));
                }
            }
            DynamicsModel::Pendulum(p) => {
                if !(p.mass > 0.0 && p.mass.is_finite()) {
                    return Err(Error::invalid("mass", "must be positive"));
                }
                if !(p.length > 0.0 && p.length.is_finite()) {
                    return Err(Error::invalid("length", "must be positive"));
                }
                if !p.gravity.is_finite() {
                    return Err(Error::invalid("gravity", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<const D: usize> {
    pub q: SVector<f64, D>,
    pub qdot: SVector<f64, D>,
    pub t: f64,
}

impl<const D: usize> State<D> {
    pub fn new(q: SVector<f64, D>, qdot: SVector<f64, D>, t: f64) -> Self {
        Self { q, qdot, t }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|c| c.is_finite())
    }
}

/// `D⁻¹ rhs` through a dynamically sized LU, which keeps the const-generic
/// signature free of nalgebra's dimension bounds.
fn solve_inertia<const D: usize>(m: &SMatrix<f64, D, D>, rhs: &SVector<f64, D>) -> Option<SVector<f64, D>> {
    if D == 1 {
        let a = rhs[0] / m[(0, 0)];
        return a.is_finite().then(|| SVector::from_element(a));
    }
    let dm = DMatrix::from_column_slice(D, D, m.as_slice());
    let x = dm.lu().solve(&DVector::from_column_slice(rhs.as_slice()))?;
    Some(SVector::from_column_slice(x.as_slice()))
}

/// One classical RK4 step. The force is re-evaluated at every stage.
pub fn integrate_step<const D: usize, M, F>(model: &M, s: &State<D>, mut force: F, dt: f64) -> Result<State<D>>
where
    M: Mechanism<D>,
    F: FnMut(&State<D>) -> Result<SVector<f64, D>>,
{
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let mut accel = |st: &State<D>| -> Result<SVector<f64, D>> {
        let f = force(st)?;
        let rhs = f - model.bias(&st.q, &st.qdot);
        solve_inertia(&model.mass_matrix(&st.q), &rhs).ok_or(Error::NonFiniteState(st.t))
    };
    let stage = |base: &State<D>, dq: &SVector<f64, D>, dv: &SVector<f64, D>, h: f64| State {
        q: base.q + dq * h,
        qdot: base.qdot + dv * h,
        t: base.t + h,
    };

    let a1 = accel(s)?;
    let v1 = s.qdot;
    let s2 = stage(s, &v1, &a1, 0.5 * dt);
    let a2 = accel(&s2)?;
    let v2 = s2.qdot;
    let s3 = stage(s, &v2, &a2, 0.5 * dt);
    let a3 = accel(&s3)?;
    let v3 = s3.qdot;
    let s4 = stage(s, &v3, &a3, dt);
    let a4 = accel(&s4)?;
    let v4 = s4.qdot;

    let next = State {
        q: s.q + (v1 + v2 * 2.0 + v3 * 2.0 + v4) * (dt / 6.0),
        qdot: s.qdot + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0),
        t: s.t + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState(next.t));
    }
    Ok(next)
}

/// Reference point making the drift potential `-G·(q - q_ref)` non-negative
/// over the workspace rectangle `[0, extent]`.
pub fn drift_reference(drift: Vec2, extent: Vec2) -> Vec2 {
    Vec2::new(
        if drift.x > 0.0 { extent.x } else { 0.0 },
        if drift.y > 0.0 { extent.y } else { 0.0 },
    )
}

/// `K V(q) + ½ m |q'|² + P(q)` for the point mass, with `P` the drift
/// potential anchored at [`drift_reference`].
pub fn lyapunov_energy(model: &PointMass, s: &State<2>, field: &HarmonicField, k: f64) -> Result<f64> {
    let v = sample_potential(field, s.q)?;
    let grid = field.grid();
    let extent = Vec2::new(grid.nx() as f64, grid.ny() as f64) * grid.cell_size();
    let p = -model.drift.dot(&(s.q - drift_reference(model.drift, extent)));
    Ok(k * v + 0.5 * model.mass * s.qdot.norm_squared() + p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Collision,
    Capture,
    Stall,
    SpeedLimitActive,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Collision => "COLLISION",
            EventKind::Capture => "CAPTURE",
            EventKind::Stall => "STALL",
            EventKind::SpeedLimitActive => "SPEED_LIMIT_ACTIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalReason {
    Capture,
    Collision,
    Stall,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    /// Index of the sample the event is attached to.
    pub sample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: Vec2,
    pub qdot: Vec2,
    /// Control force applied over the following step.
    pub force: Vec2,
    pub xi: f64,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub terminal: TerminalReason,
    pub target: Vec2,
    pub dt: f64,
}

impl Trajectory {
    pub fn collided(&self) -> bool {
        self.terminal == TerminalReason::Collision
    }

    pub fn captured(&self) -> bool {
        self.terminal == TerminalReason::Capture
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    /// Largest single-step rise of the Lyapunov energy.
    pub fn max_energy_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].xi - w[0].xi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arc length of the sampled path up to time `until`.
    pub fn distance_traveled(&self, until: f64) -> f64 {
        self.samples
            .windows(2)
            .take_while(|w| w[1].t <= until)
            .map(|w| (w[1].q - w[0].q).norm())
            .sum()
    }

    /// Sign changes of one velocity component over samples passing `keep`,
    /// counted as reversals of the matching coordinate whose swing spans at
    /// least `min_swing`. Jitter smaller than the swing is ignored.
    pub fn velocity_sign_changes(&self, axis: usize, min_swing: f64, keep: impl Fn(&Sample) -> bool) -> usize {
        let mut kept = self.samples.iter().filter(|s| keep(s)).map(|s| s.q[axis]);
        let Some(first) = kept.next() else { return 0 };
        let (mut lo, mut hi) = (first, first);
        // +1 rising, -1 falling, 0 before the first full swing
        let mut dir = 0i8;
        let mut reversals = 0;
        for y in kept {
            match dir {
                0 => {
                    lo = lo.min(y);
                    hi = hi.max(y);
                    if y - lo >= min_swing {
                        dir = 1;
                        hi = y;
                    } else if hi - y >= min_swing {
                        dir = -1;
                        lo = y;
                    }
                }
                1 if y > hi => hi = y,
                1 if hi - y >= min_swing => {
                    reversals += 1;
                    dir = -1;
                    lo = y;
                }
                -1 if y < lo => lo = y,
                -1 if y - lo >= min_swing => {
                    reversals += 1;
                    dir = 1;
                    hi = y;
                }
                _ => {}
            }
        }
        reversals
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,x_m,y_m,vx_m_per_s,vy_m_per_s,fx_N,fy_N,xi_J,dist_to_target_m,event")?;
        let mut ev = self.events.iter().peekable();
        for (k, s) in self.samples.iter().enumerate() {
            let mut flags = Vec::new();
            while let Some(e) = ev.next_if(|e| e.sample == k) {
                flags.push(e.kind.as_str());
            }
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                s.t,
                s.q.x,
                s.q.y,
                s.qdot.x,
                s.qdot.y,
                s.force.x,
                s.force.y,
                s.xi,
                s.dist,
                flags.join("|")
            )?;
        }
        Ok(())
    }
}

/// Integration settings of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t_max: f64,
    pub capture_radius: f64,
    pub rest_speed: f64,
    pub capture_hold: f64,
    pub mass: f64,
}

impl RunOptions {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        let sim = spec.simulation_or_default();
        Self {
            dt: sim.dt,
            t_max: sim.t_max,
            capture_radius: sim.capture_radius_for(spec.cell_size),
            rest_speed: sim.rest_speed,
            capture_hold: sim.capture_hold,
            mass: 1.0,
        }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }
}

fn ends_run(e: &Error) -> Option<TerminalReason> {
    match e {
        Error::OutOfFreeSpace(_) => Some(TerminalReason::Collision),
        Error::SingularGradient(_) => Some(TerminalReason::Stall),
        _ => None,
    }
}

/// Closed-loop run of the point mass from the scenario's start state.
///
/// Each step draws one sensing offset (when the scenario has noise), applies
/// it to every RK4 stage, and checks the new position and the swept segment
/// for obstacle contact. Collision, capture and stall end the run as
/// terminal reasons; only numerical failures are errors.
pub fn run_simulation(
    spec: &ScenarioSpec,
    cfg: &ControllerConfig,
    field: &HarmonicField,
    opts: &RunOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(opts.dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(opts.t_max > 0.0) {
        return Err(Error::invalid("t_max", "must be positive"));
    }
    let model = PointMass { mass: opts.mass, drift: spec.drift };
    DynamicsModel::PointMass(model).validate()?;
    let grid = field.grid();
    let h = grid.cell_size();
    let target = grid.target_point();
    if !grid.is_free_point(spec.start) {
        return Err(Error::StartInsideObstacle(spec.start));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let steps = (opts.t_max / opts.dt).round() as usize;
    let mut state = State::new(spec.start, spec.start_velocity, 0.0);
    let mut samples = Vec::with_capacity(steps.min(1 << 20) + 1);
    let mut events = Vec::new();
    let mut limiting = false;
    let mut terminal = TerminalReason::TimeLimit;
    let noisy = spec.noise_amplitude > 0.0;
    let mut entered: Option<f64> = None;

    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        state.t = t;
        let offset = perturb_sensing(Vec2::zeros(), spec.noise_amplitude, h, &mut rng);
        let sense = |q: Vec2| {
            let p = q + offset;
            if offset != Vec2::zeros() && grid.is_free_point(p) {
                p
            } else {
                q
            }
        };
        let control = |st: &State<2>| compose_control(cfg, sense(st.q), st.qdot, field, target);

        let force = match control(&state) {
            Ok(f) => f,
            Err(e) => match ends_run(&e) {
                Some(reason) => {
                    terminal = reason;
                    break;
                }
                None => return Err(e),
            },
        };
        let dist = (state.q - target).norm();
        samples.push(Sample {
            t,
            q: state.q,
            qdot: state.qdot,
            force,
            xi: lyapunov_energy(&model, &state, field, cfg.k)?,
            dist,
        });
        let idx = samples.len() - 1;

        let over = cfg.speed_limited() && state.qdot.norm() > cfg.vmax;
        if over && !limiting {
            events.push(Event { t, kind: EventKind::SpeedLimitActive, sample: idx });
        }
        limiting = over;

        let inside = dist <= opts.capture_radius;
        if !inside {
            entered = None;
        } else if entered.is_none() {
            entered = Some(t);
        }
        let held = noisy && entered.is_some_and(|t0| t - t0 >= opts.capture_hold);
        if inside && (state.qdot.norm() <= opts.rest_speed || held) {
            events.push(Event { t, kind: EventKind::Capture, sample: idx });
            terminal = TerminalReason::Capture;
            break;
        }
        if k == steps {
            break;
        }

        let next = match integrate_step(&model, &state, control, opts.dt) {
            Ok(s) => s,
            Err(e) => match ends_run(&e) {
                Some(reason) => {
                    terminal = reason;
                    break;
                }
                None => return Err(e),
            },
        };
        if !grid.is_free_point(next.q) || grid.segment_hits_obstacle(state.q, next.q) {
            terminal = TerminalReason::Collision;
            break;
        }
        state = next;
    }

    let last = samples.len().saturating_sub(1);
    match terminal {
        TerminalReason::Collision => events.push(Event {
            t: state.t + opts.dt,
            kind: EventKind::Collision,
            sample: last,
        }),
        TerminalReason::Stall => events.push(Event { t: state.t, kind: EventKind::Stall, sample: last }),
        _ => {}
    }
    if samples.is_empty() {
        // the very first control evaluation ended the run
        samples.push(Sample {
            t: 0.0,
            q: state.q,
            qdot: state.qdot,
            force: Vec2::zeros(),
            xi: lyapunov_energy(&model, &state, field, cfg.k)?,
            dist: (state.q - target).norm(),
        });
    }
    Ok(Trajectory { samples, events, terminal, target, dt: opts.dt })
}
