//! Command-line front end. Each verb loads a scenario, applies flag
//! overrides, runs one library operation and writes CSV/SVG artifacts into
//! the output directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::controllers::ControllerKind;
use crate::dynamics::{run_simulation, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::error_cancel::{alpha_sweep, pendulum_fixture, run_pendulum, write_alpha_csv, PendulumScenario};
use crate::field::{locate_critical_points, rasterize_scenario, solve_harmonic, write_field_csv, HarmonicField, SolverOptions};
use crate::kinematics::{trace_kinematic_path, Path, TraceOptions};
use crate::metrics::{compute_metrics, parameter_sweep, write_sweep_csv, MetricsReport, SweepParameter};
use crate::plot::{render_plot, Overlay, Plot, Series};
use crate::scenario::{fixtures, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "nadf", version, about = "Harmonic-field guidance with anisotropic damping")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Solve the harmonic field and report the residual.
    Solve(Common),
    /// Run one closed-loop simulation.
    Simulate(Common),
    /// Sweep one parameter over a list of values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// b, bd, kc, k, or alpha (pendulum scenarios).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Run NADF, viscous and sliding-mode control on one scenario.
    Compare(Common),
    /// Pendulum regulation with the bias circuit.
    Pendulum {
        #[command(flatten)]
        common: Common,
        /// Settle threshold, rad/s.
        #[arg(long)]
        alpha: Option<f64>,
        /// Target angle, rad.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Locate and classify the field's critical points.
    Critpoints(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Scenario JSON file, or the name of a shipped fixture.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub controller: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub bd: Option<f64>,
    #[arg(long)]
    pub kc: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub f0: Option<f64>,
    #[arg(long)]
    pub vd: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sensing noise half-width, cells.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Worker threads for sweeps; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl Common {
    fn scenario_source(&self) -> Result<&str> {
        self.scenario
            .as_deref()
            .ok_or_else(|| Error::invalid("scenario", "--scenario is required"))
    }

    /// Scenario with every flag override folded in.
    fn load_scenario(&self) -> Result<ScenarioSpec> {
        let src = self.scenario_source()?;
        let mut spec = if FsPath::new(src).exists() {
            ScenarioSpec::load(src)?
        } else {
            fixtures::by_name(src).ok_or_else(|| Error::invalid("scenario", format!("no file or fixture `{src}`")))?
        };
        let mut cfg = spec.controller_or_default();
        if let Some(kind) = &self.controller {
            cfg.kind = kind.parse()?;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.k, self.k);
        set(&mut cfg.b, self.b);
        set(&mut cfg.bd, self.bd);
        set(&mut cfg.kc, self.kc);
        set(&mut cfg.sigma, self.sigma);
        set(&mut cfg.vmax, self.vmax);
        set(&mut cfg.f0, self.f0);
        set(&mut cfg.vd, self.vd);
        spec.controller = Some(cfg);
        let mut sim = spec.simulation_or_default();
        set(&mut sim.dt, self.dt);
        set(&mut sim.t_max, self.tmax);
        spec.simulation = Some(sim);
        if let Some(seed) = self.seed {
            spec.rng_seed = seed;
        }
        set(&mut spec.noise_amplitude, self.noise);
        spec.validate()?;
        Ok(spec)
    }

    fn out_dir(&self) -> Result<&FsPath> {
        fs::create_dir_all(&self.out).map_err(|e| Error::Io(format!("{}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct World {
    spec: ScenarioSpec,
    field: HarmonicField,
}

fn world(common: &Common) -> Result<World> {
    let spec = common.load_scenario()?;
    let grid = rasterize_scenario(&spec)?;
    let field = solve_harmonic(&grid, &SolverOptions::default())?;
    Ok(World { spec, field })
}

impl World {
    fn reference(&self) -> Option<Path> {
        trace_kinematic_path(&self.field, self.spec.start, &TraceOptions::default()).ok()
    }

    fn overlay(&self) -> Overlay<'_> {
        Overlay {
            grid: self.field.grid(),
            start: Some(self.spec.start),
            target: Some(self.field.grid().target_point()),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into())
}

fn metrics_text(label: &str, traj: &Trajectory, m: &MetricsReport) -> String {
    format!(
        "{label}: terminal {:?}, Ts {} s, delta_m {} m, clearance {:.4} m, collided {}, effort {:.4} N*s, peak speed {:.4} m/s, final error {:.4} m\n",
        traj.terminal,
        fmt_opt(m.settling_time),
        fmt_opt(m.max_deviation),
        m.min_clearance,
        m.collided,
        m.control_effort,
        m.peak_speed,
        m.final_error
    )
}

fn distance_series(label: &str, traj: &Trajectory) -> Series {
    Series::new(label, traj.samples.iter().map(|s| (s.t, s.dist)).collect())
}

fn position_series(label: &str, traj: &Trajectory) -> Series {
    Series::new(label, traj.samples.iter().map(|s| (s.q.x, s.q.y)).collect())
}

fn solve(common: &Common) -> Result<String> {
    let w = world(common)?;
    let out = common.out_dir()?;
    write_field_csv(&w.field, create(out.join("field.csv"))?)?;
    let mut report = format!(
        "grid {} x {} cells of {} m\nSOR iterations {}\nmax Laplacian residual {:e}\n",
        w.field.grid().nx(),
        w.field.grid().ny(),
        w.field.grid().cell_size(),
        w.field.iterations(),
        w.field.residual()
    );
    if let Some(path) = w.reference() {
        path.write_csv(create(out.join("path.csv"))?)?;
        let plot = Plot::new(format!("{}: kinematic path", w.spec.name), "x [m]", "y [m]")
            .with_overlay(w.overlay())
            .with_series(Series::from_path("path", &path.points));
        write_text(out.join("path.svg"), &render_plot(&plot))?;
        report += &format!("kinematic path length {:.4} m\n", path.arc_length);
    }
    write_text(out.join("residual.txt"), &report)?;
    Ok(report)
}

fn simulate(common: &Common) -> Result<String> {
    let w = world(common)?;
    let out = common.out_dir()?;
    let cfg = w.spec.controller_or_default();
    let traj = run_simulation(&w.spec, &cfg, &w.field, &RunOptions::from_spec(&w.spec))?;
    let reference = w.reference();
    let m = compute_metrics(&traj, w.field.grid(), reference.as_ref());
    traj.write_csv(create(out.join("trajectory.csv"))?)?;
    let mut plot = Plot::new(format!("{}: {}", w.spec.name, cfg.kind.as_str()), "x [m]", "y [m]")
        .with_overlay(w.overlay())
        .with_series(position_series("dynamic", &traj));
    if let Some(r) = &reference {
        plot = plot.with_series(Series::from_path("kinematic", &r.points));
    }
    write_text(out.join("trajectory.svg"), &render_plot(&plot))?;
    let dist = Plot::new("distance to target", "t [s]", "distance [m]").with_series(distance_series("distance", &traj));
    write_text(out.join("distance.svg"), &render_plot(&dist))?;
    let text = metrics_text(cfg.kind.as_str(), &traj, &m);
    write_text(out.join("metrics.txt"), &text)?;
    Ok(text)
}

fn sweep(common: &Common, param: &str, values: &[f64]) -> Result<String> {
    let param: SweepParameter = param.parse()?;
    if values.is_empty() {
        return Err(Error::invalid("values", "--values needs at least one number"));
    }
    if param == SweepParameter::Alpha {
        let sc = pendulum_scenario(common, None, None)?;
        let out = common.out_dir()?;
        let rows = alpha_sweep(&sc, values, common.jobs)?;
        write_alpha_csv(&rows, create(out.join("sweep.csv"))?)?;
        let mut text = String::new();
        for r in &rows {
            match &r.result {
                Ok(run) => text += &format!(
                    "alpha {}: {} switches, final error {:e} rad, beta {:.6}\n",
                    r.alpha,
                    run.switches.len(),
                    run.final_error(),
                    run.final_beta()
                ),
                Err(e) => text += &format!("alpha {}: {e}\n", r.alpha),
            }
        }
        return Ok(text);
    }
    let w = world(common)?;
    let out = common.out_dir()?;
    let cfg = w.spec.controller_or_default();
    let reference = w.reference();
    let rows = parameter_sweep(
        &w.spec,
        &cfg,
        &w.field,
        &RunOptions::from_spec(&w.spec),
        param,
        values,
        reference.as_ref(),
        common.jobs,
    )?;
    write_sweep_csv(param, &rows, create(out.join("sweep.csv"))?)?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().and_then(|m| m.settling_time).map(|ts| (r.value, ts)))
        .collect();
    let plot = Plot::new(format!("Ts versus {}", param.as_str()), param.as_str(), "Ts [s]").with_series(Series::new("Ts", pts));
    write_text(out.join("sweep.svg"), &render_plot(&plot))?;
    let mut text = String::new();
    for r in &rows {
        match &r.result {
            Ok(m) => text += &format!("{} = {}: Ts {} s, effort {:.4}\n", param.as_str(), r.value, fmt_opt(m.settling_time), m.control_effort),
            Err(e) => text += &format!("{} = {}: {e}\n", param.as_str(), r.value),
        }
    }
    Ok(text)
}

fn compare(common: &Common) -> Result<String> {
    let w = world(common)?;
    let out = common.out_dir()?;
    let base = w.spec.controller_or_default();
    let damped = if base.kc > 0.0 { ControllerKind::NadfClamp } else { ControllerKind::Nadf };
    let kinds = [damped, ControllerKind::Viscous, ControllerKind::SlidingMode];
    let opts = RunOptions::from_spec(&w.spec);
    let reference = w.reference();
    let mut summary = String::from("controller,terminal,ts_s,delta_m_m,min_clearance_m,collided,effort_N_s,peak_speed_m_per_s,final_error_m\n");
    let mut text = String::new();
    let mut paths = Plot::new(format!("{}: controllers", w.spec.name), "x [m]", "y [m]").with_overlay(w.overlay());
    let mut dists = Plot::new("distance to target", "t [s]", "distance [m]");
    let mut forces = Plot::new("control force magnitude", "t [s]", "|F| [N]");
    for kind in kinds {
        let cfg = base.clone().with_kind(kind);
        let traj = run_simulation(&w.spec, &cfg, &w.field, &opts)?;
        let m = compute_metrics(&traj, w.field.grid(), reference.as_ref());
        traj.write_csv(create(out.join(format!("trajectory_{}.csv", kind.as_str())))?)?;
        summary += &format!(
            "{},{:?},{},{},{},{},{},{},{}\n",
            kind.as_str(),
            traj.terminal,
            m.settling_time.map(|t| t.to_string()).unwrap_or_default(),
            m.max_deviation.map(|t| t.to_string()).unwrap_or_default(),
            m.min_clearance,
            m.collided,
            m.control_effort,
            m.peak_speed,
            m.final_error
        );
        text += &metrics_text(kind.as_str(), &traj, &m);
        paths = paths.with_series(position_series(kind.as_str(), &traj));
        dists = dists.with_series(distance_series(kind.as_str(), &traj));
        forces = forces.with_series(Series::new(kind.as_str(), traj.samples.iter().map(|s| (s.t, s.force.norm())).collect()));
    }
    write_text(out.join("compare.csv"), &summary)?;
    write_text(out.join("compare.svg"), &render_plot(&paths))?;
    write_text(out.join("compare_distance.svg"), &render_plot(&dists))?;
    write_text(out.join("compare_force.svg"), &render_plot(&forces))?;
    Ok(text)
}

fn pendulum_scenario(common: &Common, alpha: Option<f64>, target: Option<f64>) -> Result<PendulumScenario> {
    let mut sc = match common.scenario.as_deref() {
        Some(src) if FsPath::new(src).exists() => PendulumScenario::load(src)?,
        None | Some("pendulum") => pendulum_fixture(),
        Some(src) => return Err(Error::invalid("scenario", format!("no file or fixture `{src}`"))),
    };
    if let Some(k) = common.k {
        sc.kp = k;
    }
    if let Some(b) = common.b {
        sc.b = b;
    }
    if let Some(dt) = common.dt {
        sc.dt = dt;
    }
    if let Some(t) = common.tmax {
        sc.t_max = t;
    }
    if let Some(a) = alpha {
        sc.alpha = a;
    }
    if let Some(t) = target {
        sc.target_angle = t;
    }
    sc.validate()?;
    Ok(sc)
}

fn pendulum(common: &Common, alpha: Option<f64>, target: Option<f64>) -> Result<String> {
    let sc = pendulum_scenario(common, alpha, target)?;
    let out = common.out_dir()?;
    let bare = run_pendulum(&sc, false)?;
    let run = run_pendulum(&sc, true)?;
    run.write_switch_csv(create(out.join("switches.csv"))?)?;
    run.write_csv(create(out.join("pendulum.csv"))?)?;
    bare.write_csv(create(out.join("pendulum_uncompensated.csv"))?)?;
    let decay: Vec<(f64, f64)> = run
        .switch_errors()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() > 0.0)
        .map(|(i, e)| ((i + 1) as f64, e.abs().log10()))
        .collect();
    let plot = Plot::new("error at each switch", "switch", "log10 |error| [rad]").with_series(Series::new("error", decay));
    write_text(out.join("error_decay.svg"), &render_plot(&plot))?;
    let angle = Plot::new("pendulum angle", "t [s]", "angle [rad]")
        .with_series(Series::new("with circuit", run.samples.iter().map(|s| (s.t, s.theta)).collect()))
        .with_series(Series::new("without", bare.samples.iter().map(|s| (s.t, s.theta)).collect()));
    write_text(out.join("angle.svg"), &render_plot(&angle))?;
    Ok(format!(
        "without circuit: final error {:.6} rad\nwith circuit: {} switches, final error {:e} rad, bias {:.6} N*m (holding torque {:.6})\npredicted per-switch ratio {:.4}\n",
        bare.final_error(),
        run.switches.len(),
        run.final_error(),
        run.final_beta(),
        sc.pendulum.holding_torque(sc.target_angle),
        sc.predicted_ratio()?
    ))
}

fn critpoints(common: &Common) -> Result<String> {
    let w = world(common)?;
    let out = common.out_dir()?;
    let text = locate_critical_points(&w.field, None).to_text();
    write_text(out.join("critpoints.txt"), &text)?;
    Ok(text)
}

/// Runs one parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.verb {
        Verb::Solve(c) => solve(c),
        Verb::Simulate(c) => simulate(c),
        Verb::Sweep { common, param, values } => sweep(common, param, values),
        Verb::Compare(c) => compare(c),
        Verb::Pendulum { common, alpha, target } => pendulum(common, *alpha, *target),
        Verb::Critpoints(c) => critpoints(c),
    }
}

/// Process exit status for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
