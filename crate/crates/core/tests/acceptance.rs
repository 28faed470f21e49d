//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines are printed whether or not
//! output capture is on. The process exits non-zero if any criterion fails.

use std::collections::VecDeque;
use std::time::Instant;

use nadf::controllers::{nadf_force, phi};
use nadf::dynamics::Trajectory;
use nadf::error_cancel::{contraction_matrix, pendulum_fixture, run_pendulum, PendulumScenario};
use nadf::field::{
    laplacian_residual, locate_critical_points, Cell, CriticalKind, OccupancyGrid,
};
use nadf::kinematics::Path;
use nadf::metrics::MetricsReport;
use nadf::prelude::*;
use nadf::scenario::Obstacle;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NOISE_SEED: u64 = 20_240_601;

struct Outcome {
    id: usize,
    pass: bool,
}

#[derive(Default)]
struct Ledger {
    outcomes: Vec<Outcome>,
    /// Worst relative Ξ rise for every noiseless run made along the way.
    energy: Vec<(String, f64)>,
}

impl Ledger {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}: {}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.outcomes.push(Outcome { id, pass });
    }

    fn track(&mut self, label: impl Into<String>, traj: &Trajectory) {
        let rise = traj.max_energy_increase().max(0.0) / traj.samples[0].xi.abs();
        self.energy.push((label.into(), rise));
    }
}

struct Workspace {
    spec: ScenarioSpec,
    field: HarmonicField,
    opts: RunOptions,
    base: ControllerConfig,
}

impl Workspace {
    fn load(spec: ScenarioSpec) -> Self {
        let grid = rasterize_scenario(&spec).expect("fixture rasterizes");
        let field = solve_harmonic(&grid, &SolverOptions::default()).expect("fixture solves");
        let opts = RunOptions::from_spec(&spec);
        let base = spec.controller_or_default();
        Self { spec, field, opts, base }
    }

    fn grid(&self) -> &OccupancyGrid {
        self.field.grid()
    }

    fn run(&self, cfg: &ControllerConfig) -> Trajectory {
        run_simulation(&self.spec, cfg, &self.field, &self.opts).expect("run completes")
    }

    fn run_noisy(&self, cfg: &ControllerConfig, amplitude: f64, seed: u64) -> Trajectory {
        let spec = ScenarioSpec { noise_amplitude: amplitude, rng_seed: seed, ..self.spec.clone() };
        run_simulation(&spec, cfg, &self.field, &self.opts).expect("run completes")
    }

    fn metrics(&self, traj: &Trajectory, reference: Option<&Path>) -> MetricsReport {
        compute_metrics(traj, self.grid(), reference)
    }

    fn viscous(&self, b: f64) -> ControllerConfig {
        ControllerConfig { kind: ControllerKind::Viscous, b, ..self.base.clone() }
    }

    fn nadf(&self, bd: f64) -> ControllerConfig {
        ControllerConfig { kind: ControllerKind::Nadf, bd, ..self.base.clone() }
    }
}

fn ts(m: &MetricsReport) -> f64 {
    m.settling_time.unwrap_or(f64::INFINITY)
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn criterion_1(led: &mut Ledger, room: &Workspace) -> (Trajectory, MetricsReport) {
    let clock = Instant::now();
    let low = room.run(&room.viscous(0.1));
    let high = room.run(&room.viscous(0.7));
    let nadf = room.run(&room.nadf(10.0));
    let (m_high, m_nadf) = (room.metrics(&high, None), room.metrics(&nadf, None));
    let elapsed = secs(clock);
    for (label, tr) in [("room viscous B=0.1", &low), ("room viscous B=0.7", &high), ("room nadf B_d=10", &nadf)] {
        led.track(label, tr);
    }
    let ratio = ts(&m_nadf) / ts(&m_high);
    let pass = low.collided()
        && high.captured()
        && !m_high.collided
        && nadf.captured()
        && !m_nadf.collided
        && ratio <= 0.5
        && elapsed < 30.0;
    led.record(
        1,
        pass,
        format!(
            "B=0.1 {:?}; B=0.7 {:?} Ts {:.2} s; NADF {:?} Ts {:.2} s; ratio {ratio:.3} (<= 0.5); {elapsed:.1} s (< 30 s)",
            low.terminal,
            high.terminal,
            ts(&m_high),
            nadf.terminal,
            ts(&m_nadf)
        ),
    );
    (nadf, m_nadf)
}

fn criteria_2_and_12(led: &mut Ledger, room: &Workspace, path: &Path) {
    let clock = Instant::now();
    let bs: Vec<f64> = (1..=15).map(|i| i as f64 / 10.0).collect();
    let bds = [2.0, 5.0, 10.0, 20.0, 40.0];
    let mut sweep = |cfgs: Vec<(String, ControllerConfig)>| -> Vec<MetricsReport> {
        cfgs.into_iter()
            .map(|(label, cfg)| {
                let tr = room.run(&cfg);
                led.track(label, &tr);
                room.metrics(&tr, Some(path))
            })
            .collect()
    };
    let b_rows = sweep(bs.iter().map(|&b| (format!("room viscous B={b}"), room.viscous(b))).collect());
    let bd_rows = sweep(bds.iter().map(|&bd| (format!("room nadf B_d={bd}"), room.nadf(bd))).collect());
    let elapsed = secs(clock);

    let b_ts: Vec<f64> = b_rows.iter().map(ts).collect();
    let (argmin, min) = b_ts
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &t)| if t < acc.1 { (i, t) } else { acc });
    let interior = argmin > 0 && argmin + 1 < bs.len() && min < b_ts[0] && min < b_ts[bs.len() - 1];
    let bd_ts: Vec<f64> = bd_rows.iter().map(ts).collect();
    let steps_ok = bd_ts.windows(2).all(|w| w[1] < w[0]);
    let spread = 1.0 - bd_ts[bd_ts.len() - 1] / bd_ts[0];
    let pass = min.is_finite() && interior && steps_ok && spread >= 0.10 && elapsed < 120.0;
    let show = |v: &[f64]| v.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>().join(" ");
    led.record(
        2,
        pass,
        format!(
            "B sweep Ts [{}], min at B={:.1} (interior: {interior}); B_d sweep Ts [{}], decreasing: {steps_ok}, total {:.1}% (>= 10%); {elapsed:.1} s (< 120 s)",
            show(&b_ts),
            bs[argmin],
            show(&bd_ts),
            100.0 * spread
        ),
    );

    let dm: Vec<f64> = bd_rows[1..].iter().map(|m| m.max_deviation.unwrap_or(f64::NAN)).collect();
    let non_increasing = dm.windows(2).all(|w| w[1] <= w[0]);
    let pass = dm.iter().all(|d| d.is_finite()) && non_increasing && dm[dm.len() - 1] < dm[0];
    led.record(
        12,
        pass,
        format!(
            "delta_m for B_d = 5, 10, 20, 40: [{}] m, non-increasing: {non_increasing}, first > last: {}",
            dm.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(" "),
            dm[dm.len() - 1] < dm[0]
        ),
    );
}

fn criterion_3(led: &mut Ledger) {
    let worst = led
        .energy
        .iter()
        .cloned()
        .fold((String::from("none"), 0.0), |acc, e| if e.1 > acc.1 { e } else { acc });
    led.record(
        3,
        worst.1 <= 1e-6,
        format!(
            "{} noiseless runs, worst single-step rise {:.2e} x Xi(0) in '{}' (<= 1e-6)",
            led.energy.len(),
            worst.1,
            worst.0
        ),
    );
}

/// Number of 4-connected obstacle components; the outer frame is one.
fn obstacle_components(grid: &OccupancyGrid) -> usize {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut seen = vec![false; nx * ny];
    let mut count = 0;
    for start in 0..nx * ny {
        if seen[start] || grid.labels()[start] != Cell::Obstacle {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % nx, k / nx);
            for (ni, nj) in grid.neighbors4(i, j) {
                let n = grid.index(ni, nj);
                if !seen[n] && grid.labels()[n] == Cell::Obstacle {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    count
}

fn criterion_4(led: &mut Ledger) {
    let clock = Instant::now();
    let n = 5;
    let mut labels = vec![Cell::Free; n];
    labels[0] = Cell::Obstacle;
    labels[n - 1] = Cell::Target;
    let strip = solve_harmonic(&OccupancyGrid::new(n, 1, 0.1, labels).unwrap(), &SolverOptions::default()).unwrap();
    let strip_err = (0..n)
        .map(|i| (strip.value(i, 0) - (1.0 - i as f64 / (n - 1) as f64)).abs())
        .fold(0.0, f64::max);

    let mut pass = strip_err <= 1e-10;
    let mut notes = vec![format!("strip max error {strip_err:.1e}")];
    let mut multiply_connected = 0;
    for spec in fixtures::all() {
        let grid = rasterize_scenario(&spec).unwrap();
        let field = solve_harmonic(&grid, &SolverOptions::default()).unwrap();
        let mut mean_value = 0.0f64;
        let mut in_range = true;
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if grid.label(i, j) != Cell::Free {
                    continue;
                }
                let v = field.value(i, j);
                in_range &= v > 0.0 && v < 1.0;
                let nb: Vec<f64> = grid.neighbors4(i, j).map(|(a, b)| field.value(a, b)).collect();
                let mean = nb.iter().sum::<f64>() / nb.len() as f64;
                mean_value = mean_value.max((v - mean).abs());
            }
        }
        let residual = laplacian_residual(&field);
        let components = obstacle_components(&grid);
        let (mut crit, mut degenerate) = (0, 0);
        if components > 1 {
            multiply_connected += 1;
            let report = locate_critical_points(&field, None);
            crit = report.points.len();
            degenerate = report
                .points
                .iter()
                .filter(|p| p.kind == CriticalKind::Degenerate || p.determinant.abs() <= report.det_tol)
                .count();
        }
        pass &= residual <= 1e-10 && mean_value <= 1e-10 && in_range && degenerate == 0;
        notes.push(format!(
            "{}: residual {residual:.1e}, mean-value {mean_value:.1e}, 0<V<1 {in_range}, obstacle components {components}, critical points {crit} ({degenerate} degenerate)",
            spec.name
        ));
    }
    let elapsed = secs(clock);
    pass &= multiply_connected >= 3 && elapsed < 30.0;
    led.record(
        4,
        pass,
        format!("{}; {multiply_connected} multiply connected (>= 3); {elapsed:.1} s (< 30 s)", notes.join("; ")),
    );
}

/// Damping vector written out component-wise in two dimensions.
fn nadf_planar(g: Vec2, v: Vec2) -> Vec2 {
    let (gx, gy, vx, vy) = (g.x, g.y, v.x, v.y);
    let tangential = gx * vy - gy * vx;
    let radial = gx * vx + gy * vy;
    (Vec2::new(-gy, gx) * tangential + Vec2::new(gx, gy) * (radial * phi(radial))) / (gx * gx + gy * gy)
}

fn criterion_5(led: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut passive, mut conform, mut project, mut agree) = (0usize, 0usize, 0usize, 0.0f64);
    let (mut climbing, mut descending) = (0usize, 0usize);
    let n = 10_000;
    for k in 0..n {
        let g = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let mut v = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if k % 50 == 0 {
            // exactly orthogonal pairs sit on the switching boundary
            v = Vec2::new(-g.y, g.x) * rng.random_range(-1.0..1.0);
        }
        let m = nadf_force(&g, &v, 0.0);
        if v.dot(&m) >= -1e-12 * v.norm_squared() {
            passive += 1;
        }
        if g.dot(&v) >= 0.0 {
            climbing += 1;
            if m == v {
                conform += 1;
            }
        } else {
            descending += 1;
            let gh = g.normalize();
            let tangential = v - gh * gh.dot(&v);
            if (m - tangential).norm() <= 1e-12 * v.norm().max(1.0) && m.dot(&gh).abs() <= 1e-12 * v.norm().max(1.0) {
                project += 1;
            }
        }
        agree = agree.max((m - nadf_planar(g, v)).norm() / v.norm().max(1.0));
    }
    let pass = passive == n && conform == climbing && project == descending && agree <= 1e-12;
    led.record(
        5,
        pass,
        format!(
            "{n} pairs: passive {passive}/{n}, M = v on {conform}/{climbing} climbing pairs, tangential projection on {project}/{descending} descending pairs, planar form max gap {agree:.1e} (<= 1e-12)"
        ),
    );
}

/// Largest rise of `d` above its running minimum, from index `from` on.
fn rise_after(d: &[f64], from: usize) -> f64 {
    let mut lowest = f64::INFINITY;
    let mut worst = 0.0f64;
    for &x in &d[from..] {
        lowest = lowest.min(x);
        worst = worst.max(x - lowest);
    }
    worst
}

fn criteria_6_and_7(led: &mut Ledger, drift: &Workspace) {
    let cfg = drift.base.clone();
    let clamp = drift.run(&cfg);
    let free = drift.run(&ControllerConfig { kind: ControllerKind::Nadf, ..cfg.clone() });
    led.track("drift nadf clamp", &clamp);
    led.track("drift nadf", &free);
    let bound = drift.spec.drift.norm() / cfg.kc;
    let d: Vec<f64> = clamp.samples.iter().map(|s| s.dist).collect();
    let entry = d.iter().position(|&x| x <= cfg.sigma);
    let rise = entry.map_or(f64::INFINITY, |k| rise_after(&d, k));
    let steady = clamp.final_sample().dist;
    let escaped = free.final_sample().dist;
    let free_min = free.samples.iter().map(|s| s.dist).fold(f64::INFINITY, f64::min);
    let pass = steady <= bound && rise <= 1e-3 && !clamp.collided() && escaped > cfg.sigma;
    led.record(
        6,
        pass,
        format!(
            "clamped steady error {steady:.4} m (<= |G|/K_c = {bound:.4}); rise after entering sigma {rise:.1e} m (<= 1e-3); unclamped closest {free_min:.3} m then final {escaped:.3} m (> sigma = {})",
            cfg.sigma
        ),
    );

    let sm_cfg = ControllerConfig { kind: ControllerKind::SlidingMode, f0: 100.0, ..cfg.clone() };
    let sm = drift.run(&sm_cfg);
    let (mut active, mut exact, mut idle_ok) = (0usize, 0usize, true);
    for s in &sm.samples[..sm.samples.len() - 1] {
        let g = sample_gradient(&drift.field, s.q).expect("gradient on the run");
        let surface = s.qdot + g * (sm_cfg.vd / g.norm());
        if surface.norm() >= nadf::controllers::SLIDING_CHATTER_THRESHOLD {
            active += 1;
            if (s.force.norm() - sm_cfg.f0).abs() <= 1e-9 * sm_cfg.f0 {
                exact += 1;
            }
        } else {
            idle_ok &= s.force == Vec2::zeros();
        }
    }
    let sm_m = drift.metrics(&sm, None);
    let clamp_m = drift.metrics(&clamp, None);
    let inside = sm.final_sample().dist <= cfg.sigma;
    let pass = inside && !sm.collided() && active > 0 && exact == active && idle_ok && sm_m.control_effort > clamp_m.control_effort;
    led.record(
        7,
        pass,
        format!(
            "SM {:?} at {:.2} s, final distance {:.3} m (<= sigma); |F| = F0 on {exact}/{active} active steps; effort SM {:.1} N s vs clamp {:.1} N s",
            sm.terminal,
            sm.final_sample().t,
            sm.final_sample().dist,
            sm_m.control_effort,
            clamp_m.control_effort
        ),
    );
}

fn criterion_8(led: &mut Ledger, room: &Workspace, unlimited: &MetricsReport) {
    let cfg = ControllerConfig { vmax: 5.0, ..room.nadf(10.0) };
    let tr = room.run(&cfg);
    led.track("room nadf B_d=10 vmax=5", &tr);
    let m = room.metrics(&tr, None);
    let pass = m.peak_speed <= 5.05 && ts(&m) > ts(unlimited) && m.control_effort < unlimited.control_effort && !m.collided;
    led.record(
        8,
        pass,
        format!(
            "peak {:.3} m/s (<= 5.05, unlimited {:.2}); Ts {:.2} s vs {:.2} s; effort {:.1} vs {:.1} N s",
            m.peak_speed,
            unlimited.peak_speed,
            ts(&m),
            ts(unlimited),
            m.control_effort,
            unlimited.control_effort
        ),
    );
}

fn criterion_9(led: &mut Ledger) {
    let sc = pendulum_fixture();
    let open = run_pendulum(&sc, false).expect("uncompensated run");
    let mut pass = open.final_error().abs() > 0.05;
    let mut notes = vec![format!("without circuit error {:.3} rad (> 0.05)", open.final_error())];
    for alpha in [0.005, 0.02, 0.05] {
        let run = run_pendulum(&PendulumScenario { alpha, ..sc.clone() }, true).expect("compensated run");
        let within = run.first_switch_within(1e-4);
        let beta = run.final_beta();
        pass &= within.is_some_and(|k| k <= 20) && (beta - 9.8).abs() <= 0.01;
        notes.push(format!("alpha {alpha}: within 1e-4 at switch {within:?}, beta {beta:.4}"));
    }

    let quarter = PendulumScenario { target_angle: std::f64::consts::FRAC_PI_4, ..sc.clone() };
    let h = DMatrix::from_element(1, 1, quarter.load_stiffness());
    let kp = DMatrix::from_element(1, 1, quarter.kp);
    let predicted = contraction_matrix(&h, &kp).expect("contraction").rho;
    let closed_form = quarter.load_stiffness() / (quarter.kp + quarter.load_stiffness());
    let errors = run_pendulum(&quarter, true).expect("quarter run").switch_errors();
    let observed = errors[1] / errors[0];
    pass &= (observed / predicted - 1.0).abs() <= 0.2 && (predicted - closed_form).abs() < 1e-12;
    notes.push(format!(
        "pi/4 ratio e2/e1 {observed:.4} vs predicted {predicted:.4} (closed form {closed_form:.4})"
    ));
    led.record(9, pass, notes.join("; "));
}

fn criterion_10(led: &mut Ledger, sites: &[(&Workspace, &Trajectory, &MetricsReport)]) {
    let mut pass = true;
    let mut notes = Vec::new();
    for (ws, clean, clean_m) in sites {
        let noisy = ws.run_noisy(&ws.base, 0.5, NOISE_SEED);
        let m = ws.metrics(&noisy, None);
        let ratio = ts(&m) / ts(clean_m);
        pass &= noisy.captured() && !m.collided && clean.captured() && (ratio - 1.0).abs() <= 0.25;
        notes.push(format!(
            "{}: {:?}, Ts {:.2} s vs {:.2} s noiseless (ratio {ratio:.3})",
            ws.spec.name,
            noisy.terminal,
            ts(&m),
            ts(clean_m)
        ));
    }
    led.record(10, pass, format!("noise 0.5 cell, seed {NOISE_SEED}: {}", notes.join("; ")));
}

/// Largest x of any obstacle that does not touch the outer frame.
fn obstruction_end(spec: &ScenarioSpec) -> f64 {
    spec.obstacles
        .iter()
        .map(|o| match o {
            Obstacle::Rect { max, .. } => max.x,
            Obstacle::Disc { center, radius } => center.x + radius,
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Cross-corridor velocity sign changes once the obstruction is cleared,
/// ignoring swings narrower than one cell.
fn lateral_flips(traj: &Trajectory, past: f64, cell: f64) -> usize {
    let t_pass = traj.samples.iter().find(|s| s.q.x > past).map_or(f64::INFINITY, |s| s.t);
    traj.velocity_sign_changes(1, cell, |s| s.t >= t_pass)
}

/// Progress along the corridor axis at `t`, or at the end of a shorter run.
fn progress(traj: &Trajectory, x0: f64, t: f64) -> f64 {
    traj.samples.iter().take_while(|s| s.t <= t).last().map_or(0.0, |s| s.q.x - x0)
}

fn criterion_11(led: &mut Ledger, corridor: &Workspace) -> (Trajectory, MetricsReport) {
    let past = obstruction_end(&corridor.spec);
    let cell = corridor.spec.cell_size;
    let visc = corridor.run(&corridor.viscous(0.3));
    let soft = corridor.run(&corridor.nadf(5.0));
    let stiff = corridor.run(&corridor.nadf(30.0));
    led.track("corridor viscous B=0.3", &visc);
    led.track("corridor nadf B_d=5", &soft);
    led.track("corridor nadf B_d=30", &stiff);
    let (fv, fs) = (lateral_flips(&visc, past, cell), lateral_flips(&soft, past, cell));
    let (ps, pt) = (progress(&soft, corridor.spec.start.x, 10.0), progress(&stiff, corridor.spec.start.x, 10.0));
    let gap = (pt / ps - 1.0).abs();
    let pass = fv >= 3 && fs <= 1 && gap <= 0.05;
    led.record(
        11,
        pass,
        format!(
            "sign changes past x = {past:.2} m: viscous B=0.3 {fv} (>= 3), NADF B_d=5 {fs} (<= 1); progress in 10 s B_d=5 {ps:.3} m, B_d=30 {pt:.3} m, gap {:.2}% (<= 5%)",
            100.0 * gap
        ),
    );

    let base = corridor.run(&corridor.base);
    led.track("corridor fixture controller", &base);
    let m = corridor.metrics(&base, None);
    (base, m)
}

fn main() {
    let mut led = Ledger::default();
    let room = Workspace::load(fixtures::room_dividers());
    let path = trace_kinematic_path(&room.field, room.spec.start, &TraceOptions::default()).expect("reference path");
    let drift = Workspace::load(fixtures::drift_room());
    let corridor = Workspace::load(fixtures::corridor_obstruction());

    let (room_nadf, room_nadf_m) = criterion_1(&mut led, &room);
    criteria_2_and_12(&mut led, &room, &path);
    criterion_4(&mut led);
    criterion_5(&mut led);
    criteria_6_and_7(&mut led, &drift);
    criterion_8(&mut led, &room, &room_nadf_m);
    criterion_9(&mut led);
    let (corr_base, corr_m) = criterion_11(&mut led, &corridor);
    criterion_10(&mut led, &[(&room, &room_nadf, &room_nadf_m), (&corridor, &corr_base, &corr_m)]);
    criterion_3(&mut led);

    led.outcomes.sort_by_key(|o| o.id);
    let failed: Vec<usize> = led.outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!();
    for o in &led.outcomes {
        println!("criterion {:>2}: {}", o.id, if o.pass { "PASS" } else { "FAIL" });
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", led.outcomes.len());
    } else {
        println!("acceptance: {} of {} criteria fail: {failed:?}", failed.len(), led.outcomes.len());
        std::process::exit(1);
    }
}
