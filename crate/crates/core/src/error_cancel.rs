//! Blind steady-state error cancellation.
//!
//! A proportional-derivative regulator leaves a residual error whenever an
//! unmodelled load (gravity, a constant push) acts on the plant. The bias
//! circuit waits for the motion to settle, then absorbs the control it is
//! currently applying into a bias term. Repeating this is a fixed-point
//! iteration whose fixed point is the control that exactly cancels the load.
//!
//! [`contraction_matrix`] predicts the per-switch decay rate from the load's
//! stiffness and the proportional gain.

use std::io::Write;

use nalgebra::{DMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_step, Pendulum, State};
use crate::error::{Error, Result};
use crate::metrics::run_parallel;

/// One settle event seen by the circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch<const D: usize> {
    pub t: f64,
    pub x: SVector<f64, D>,
    /// Control measured at the switch; becomes the new bias.
    pub u: SVector<f64, D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCircuit<const D: usize> {
    pub beta: SVector<f64, D>,
    pub alpha: f64,
    pub dwell: f64,
    last_switch: f64,
    pub history: Vec<Switch<D>>,
}

impl<const D: usize> BiasCircuit<D> {
    pub const DEFAULT_ALPHA: f64 = 0.01;
    pub const DEFAULT_DWELL: f64 = 0.5;

    /// Zero bias, with the dwell clock started at `t0`.
    pub fn new(alpha: f64, dwell: f64, t0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(dwell > 0.0 && dwell.is_finite()) {
            return Err(Error::invalid("dwell", "must be positive"));
        }
        Ok(Self {
            beta: SVector::zeros(),
            alpha,
            dwell,
            last_switch: t0,
            history: Vec::new(),
        })
    }

    /// Absorbs `u_now` into the bias when the plant is slower than `alpha`
    /// and the dwell time has elapsed. Returns whether it switched.
    pub fn bias_update(&mut self, u_now: SVector<f64, D>, speed: f64, t: f64, x: SVector<f64, D>) -> bool {
        if !(speed < self.alpha && t - self.last_switch >= self.dwell) {
            return false;
        }
        self.beta = u_now;
        self.last_switch = t;
        self.history.push(Switch { t, x, u: u_now });
        true
    }
}

/// Whitened iteration matrix of the bias circuit and its spectral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Contraction {
    /// Maps the whitened error `q = Lᵀe` (with `K_p = L Lᵀ`) from one switch
    /// to the next. Symmetric, eigenvalues in `[0, 1)`.
    pub a: DMatrix<f64>,
    pub rho: f64,
    /// Cholesky factor `L` of the gain.
    pub whitening: DMatrix<f64>,
}

impl Contraction {
    /// The same map in unwhitened coordinates: `(K_p + H)⁻¹ H`.
    pub fn error_map(&self) -> DMatrix<f64> {
        let l = &self.whitening;
        let lt_inv = l.transpose().try_inverse().expect("cholesky factor is invertible");
        &lt_inv * &self.a * l.transpose()
    }
}

/// Predicts how fast the circuit cancels a load with stiffness `h` (the
/// Hessian of the load potential at the target) under proportional gain
/// `kp`. Linearized, consecutive settle errors obey `(K_p + H) e_i = H e_{i-1}`.
pub fn contraction_matrix(h: &DMatrix<f64>, kp: &DMatrix<f64>) -> Result<Contraction> {
    let n = kp.nrows();
    if kp.ncols() != n || h.shape() != (n, n) {
        return Err(Error::invalid("hessian", "must be square and match the gain"));
    }
    let sym_tol = 1e-12 * (1.0 + kp.amax());
    if (kp - kp.transpose()).amax() > sym_tol {
        return Err(Error::NotPositiveDefinite);
    }
    let l = kp.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();

    let h_sym = (h + h.transpose()) * 0.5;
    let eig = h_sym.clone().symmetric_eigen();
    let tol = 1e-12 * (1.0 + h_sym.amax());
    if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -tol {
            return Err(Error::NegativeEigenvalue(min));
        }
    }

    let l_inv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let m = &l_inv * &h_sym * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let me = m.symmetric_eigen();
    let shrink = me.eigenvalues.map(|lam| {
        let lam = lam.max(0.0);
        lam / (1.0 + lam)
    });
    let a = &me.eigenvectors * DMatrix::from_diagonal(&shrink) * me.eigenvectors.transpose();
    let rho = shrink.iter().copied().fold(0.0, f64::max);
    Ok(Contraction { a, rho, whitening: l })
}

fn default_dwell() -> f64 {
    BiasCircuit::<1>::DEFAULT_DWELL
}

fn default_alpha() -> f64 {
    BiasCircuit::<1>::DEFAULT_ALPHA
}

/// Pendulum regulation experiment: `u = K_p (θ_T - θ) - B θ' + β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumScenario {
    pub name: String,
    #[serde(default)]
    pub pendulum: Pendulum,
    /// Radians from the hanging position.
    pub target_angle: f64,
    #[serde(default)]
    pub start_angle: f64,
    #[serde(default)]
    pub start_rate: f64,
    pub kp: f64,
    pub b: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Stop after this many switches; `0` runs to `t_max`.
    #[serde(default)]
    pub max_switches: usize,
}

impl PendulumScenario {
    pub fn validate(&self) -> Result<()> {
        crate::dynamics::DynamicsModel::Pendulum(self.pendulum).validate()?;
        let finite = [
            ("target_angle", self.target_angle),
            ("start_angle", self.start_angle),
            ("start_rate", self.start_rate),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.kp > 0.0 && self.kp.is_finite()) {
            return Err(Error::invalid("kp", "must be positive"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("b", "must be non-negative"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::invalid("t_max", "must be positive"));
        }
        BiasCircuit::<1>::new(self.alpha, self.dwell, 0.0)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(text).map_err(|e| {
            Error::invalid(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    /// Load stiffness at the target, `M g cos θ_T`.
    pub fn load_stiffness(&self) -> f64 {
        self.pendulum.mass * self.pendulum.gravity * self.target_angle.cos()
    }

    /// Per-switch error ratio predicted by the linearization.
    pub fn predicted_ratio(&self) -> Result<f64> {
        let h = DMatrix::from_element(1, 1, self.load_stiffness());
        let kp = DMatrix::from_element(1, 1, self.kp);
        Ok(contraction_matrix(&h, &kp)?.rho)
    }
}

/// The shipped pendulum experiment.
pub fn pendulum_fixture() -> PendulumScenario {
    PendulumScenario::from_json(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pendulum.json")))
        .expect("fixture pendulum.json is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumSample {
    pub t: f64,
    pub theta: f64,
    pub omega: f64,
    pub u: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumRun {
    pub target: f64,
    pub samples: Vec<PendulumSample>,
    pub switches: Vec<Switch<1>>,
}

impl PendulumRun {
    /// `θ_T - θ_i` at every switch.
    pub fn switch_errors(&self) -> Vec<f64> {
        self.switches.iter().map(|s| self.target - s.x[0]).collect()
    }

    pub fn final_error(&self) -> f64 {
        self.target - self.samples.last().map_or(f64::NAN, |s| s.theta)
    }

    pub fn final_beta(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.beta)
    }

    /// First switch (1-based) whose error is below `tol`.
    pub fn first_switch_within(&self, tol: f64) -> Option<usize> {
        self.switch_errors().iter().position(|e| e.abs() < tol).map(|i| i + 1)
    }

    /// Rows `i,t_i,x_i,e_i,beta_i`.
    pub fn write_switch_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,t_s,theta_rad,error_rad,beta_N_m")?;
        for (i, s) in self.switches.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", i + 1, s.t, s.x[0], self.target - s.x[0], s.u[0])?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,theta_rad,omega_rad_per_s,u_N_m,beta_N_m")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{}", s.t, s.theta, s.omega, s.u, s.beta)?;
        }
        Ok(())
    }
}

/// Simulates the regulator, with or without the bias circuit.
pub fn run_pendulum(sc: &PendulumScenario, with_circuit: bool) -> Result<PendulumRun> {
    sc.validate()?;
    type S1 = SVector<f64, 1>;
    let mut circuit = BiasCircuit::<1>::new(sc.alpha, sc.dwell, 0.0)?;
    let steps = (sc.t_max / sc.dt).round() as usize;
    let mut state = State::new(S1::new(sc.start_angle), S1::new(sc.start_rate), 0.0);
    let mut samples = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        state.t = k as f64 * sc.dt;
        let beta = circuit.beta[0];
        let control = |st: &State<1>| -> Result<S1> {
            Ok(S1::new(sc.kp * (sc.target_angle - st.q[0]) - sc.b * st.qdot[0] + beta))
        };
        let u = control(&state)?;
        let switched = with_circuit && circuit.bias_update(u, state.qdot[0].abs(), state.t, state.q);
        samples.push(PendulumSample {
            t: state.t,
            theta: state.q[0],
            omega: state.qdot[0],
            u: u[0],
            beta: circuit.beta[0],
        });
        if switched && sc.max_switches > 0 && circuit.history.len() >= sc.max_switches {
            break;
        }
        if k == steps {
            break;
        }
        let beta = circuit.beta[0];
        state = integrate_step(
            &sc.pendulum,
            &state,
            |st: &State<1>| Ok(S1::new(sc.kp * (sc.target_angle - st.q[0]) - sc.b * st.qdot[0] + beta)),
            sc.dt,
        )?;
    }
    Ok(PendulumRun { target: sc.target_angle, samples, switches: circuit.history })
}

/// Outcome of one threshold in [`alpha_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    pub result: Result<PendulumRun>,
}

/// Runs the circuit once per settle threshold.
pub fn alpha_sweep(sc: &PendulumScenario, alphas: &[f64], jobs: usize) -> Result<Vec<AlphaRow>> {
    if alphas.is_empty() {
        return Err(Error::invalid("values", "must not be empty"));
    }
    let results = run_parallel(alphas, jobs, |alpha| {
        let sc = PendulumScenario { alpha, ..sc.clone() };
        run_pendulum(&sc, true)
    });
    Ok(alphas
        .iter()
        .zip(results)
        .map(|(&alpha, result)| AlphaRow { alpha, result })
        .collect())
}

/// Rows `alpha,switches,final_error_rad,final_beta_N_m,error`.
pub fn write_alpha_csv<W: Write>(rows: &[AlphaRow], mut w: W) -> Result<()> {
    writeln!(w, "alpha_rad_per_s,switches,final_error_rad,final_beta_N_m,error")?;
    for r in rows {
        match &r.result {
            Ok(run) => writeln!(
                w,
                "{},{},{},{},",
                r.alpha,
                run.switches.len(),
                run.final_error(),
                run.final_beta()
            )?,
            Err(e) => writeln!(w, "{},,,,{}", r.alpha, e.to_string().replace(',', ";"))?,
        }
    }
    Ok(())
}
