//! Performance measures of a run and parameter sweeps over many runs.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::ControllerConfig;
use crate::dynamics::{run_simulation, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::field::{HarmonicField, OccupancyGrid};
use crate::kinematics::Path;
use crate::scenario::ScenarioSpec;
use crate::Vec2;

/// Default settling zone as a fraction of the initial distance.
pub const DEFAULT_ZONE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` when the run never settled.
    pub settling_time: Option<f64>,
    /// `None` when no reference path was supplied.
    pub max_deviation: Option<f64>,
    pub min_clearance: f64,
    pub collided: bool,
    pub control_effort: f64,
    pub peak_speed: f64,
    pub final_error: f64,
}

/// Settling time of a sampled error signal: the first sample time after
/// which `err <= zone_fraction * err[0]` holds for every remaining sample.
pub fn settling_time_series(t: &[f64], err: &[f64], zone_fraction: f64) -> Result<f64> {
    assert_eq!(t.len(), err.len(), "time and error series differ in length");
    let Some(&e0) = err.first() else {
        return Err(Error::NeverSettled);
    };
    let zone = zone_fraction * e0.abs();
    match err.iter().rposition(|e| e.abs() > zone) {
        None => Ok(t[0]),
        Some(k) if k + 1 == err.len() => Err(Error::NeverSettled),
        Some(k) => Ok(t[k + 1]),
    }
}

/// Settling time of a planar run relative to `target`. A run that ended in a
/// collision never settles.
pub fn settling_time(traj: &Trajectory, target: Vec2, zone_fraction: f64) -> Result<f64> {
    if traj.collided() {
        return Err(Error::NeverSettled);
    }
    let t: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let d: Vec<f64> = traj.samples.iter().map(|s| (s.q - target).norm()).collect();
    settling_time_series(&t, &d, zone_fraction)
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// Uniform bucket index over polyline segments for nearest-segment queries.
struct SegmentIndex<'a> {
    pts: &'a [Vec2],
    origin: Vec2,
    size: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> SegmentIndex<'a> {
    fn new(pts: &'a [Vec2]) -> Self {
        let mut lo = pts[0];
        let mut hi = pts[0];
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += (w[1] - w[0]).norm();
        }
        for p in pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let span = (hi - lo).max().max(1e-9);
        let mean_seg = if pts.len() > 1 { total / (pts.len() - 1) as f64 } else { span };
        let size = (4.0 * mean_seg).max(span / 256.0).max(1e-9);
        let nx = ((hi.x - lo.x) / size).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / size).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let cell = |p: Vec2| {
            (
                (((p.x - lo.x) / size).floor() as usize).min(nx - 1),
                (((p.y - lo.y) / size).floor() as usize).min(ny - 1),
            )
        };
        let nseg = pts.len().saturating_sub(1).max(1);
        for s in 0..nseg {
            let a = pts[s];
            let b = pts[(s + 1).min(pts.len() - 1)];
            let (i0, j0) = cell(a.inf(&b));
            let (i1, j1) = cell(a.sup(&b));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(s);
                }
            }
        }
        Self { pts, origin: lo, size, nx, ny, buckets }
    }

    fn segment(&self, s: usize) -> (Vec2, Vec2) {
        (self.pts[s], self.pts[(s + 1).min(self.pts.len() - 1)])
    }

    fn nearest(&self, p: Vec2) -> f64 {
        let fi = ((p.x - self.origin.x) / self.size).floor() as isize;
        let fj = ((p.y - self.origin.y) / self.size).floor() as isize;
        // distance from p to the bucket grid's bounding box
        let w = self.nx as f64 * self.size;
        let hgt = self.ny as f64 * self.size;
        let dx = (self.origin.x - p.x).max(0.0).max(p.x - (self.origin.x + w));
        let dy = (self.origin.y - p.y).max(0.0).max(p.y - (self.origin.y + hgt));
        let outside = dx.hypot(dy);
        let mut best = f64::INFINITY;
        let max_ring = (self.nx.max(self.ny) as isize) + fi.abs().max(fj.abs()) + 1;
        for ring in 0..=max_ring {
            // every bucket in this ring is at least (ring - 1) buckets away
            let floor = ((ring - 1).max(0) as f64 * self.size).max(outside);
            if floor >= best {
                break;
            }
            for dj in -ring..=ring {
                for di in -ring..=ring {
                    if di.abs() != ring && dj.abs() != ring {
                        continue;
                    }
                    let (i, j) = (fi + di, fj + dj);
                    if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                        continue;
                    }
                    for &s in &self.buckets[j as usize * self.nx + i as usize] {
                        let (a, b) = self.segment(s);
                        best = best.min(point_segment_distance(p, a, b));
                    }
                }
            }
        }
        best
    }
}

/// One-sided Hausdorff distance from the points of `dynamic` to the
/// polyline `reference`.
pub fn polyline_deviation(dynamic: &[Vec2], reference: &[Vec2]) -> f64 {
    if dynamic.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let index = SegmentIndex::new(reference);
    dynamic.iter().map(|p| index.nearest(*p)).fold(0.0, f64::max)
}

/// Largest distance from any sample of a run to the reference path.
pub fn path_deviation(traj: &Trajectory, reference: &Path) -> f64 {
    let pts: Vec<Vec2> = traj.samples.iter().map(|s| s.q).collect();
    polyline_deviation(&pts, &reference.points)
}

/// Smallest distance to an obstacle cell over a sequence of positions.
///
/// Clearance is 1-Lipschitz in position, so points that cannot beat the
/// current minimum given the last exact evaluation are skipped.
pub fn min_clearance_of(points: &[Vec2], grid: &OccupancyGrid) -> f64 {
    let mut best = f64::INFINITY;
    let mut anchor: Option<(Vec2, f64)> = None;
    for p in points {
        if let Some((a, d)) = anchor {
            if d - (p - a).norm() >= best {
                continue;
            }
        }
        let d = grid.obstacle_distance(*p);
        best = best.min(d);
        anchor = Some((*p, d));
    }
    best
}

/// Minimum clearance of a run and whether it touched an obstacle.
pub fn min_clearance(traj: &Trajectory, grid: &OccupancyGrid) -> (f64, bool) {
    let pts: Vec<Vec2> = traj.samples.iter().map(|s| s.q).collect();
    let clearance = if traj.collided() { 0.0 } else { min_clearance_of(&pts, grid) };
    let touched = traj.collided()
        || pts.iter().any(|p| !grid.is_free_point(*p))
        || pts.windows(2).any(|w| grid.segment_hits_obstacle(w[0], w[1]));
    (clearance, touched)
}

/// `∫|F| dt` with the force held over each step.
pub fn control_effort(traj: &Trajectory) -> f64 {
    let n = traj.samples.len();
    traj.samples[..n.saturating_sub(1)]
        .iter()
        .map(|s| s.force.norm() * traj.dt)
        .sum()
}

pub fn compute_metrics(traj: &Trajectory, grid: &OccupancyGrid, reference: Option<&Path>) -> MetricsReport {
    let (min_clearance, collided) = min_clearance(traj, grid);
    MetricsReport {
        settling_time: settling_time(traj, traj.target, DEFAULT_ZONE_FRACTION).ok(),
        max_deviation: reference.map(|r| path_deviation(traj, r)),
        min_clearance,
        collided,
        control_effort: control_effort(traj),
        peak_speed: traj.samples.iter().map(|s| s.qdot.norm()).fold(0.0, f64::max),
        final_error: traj.final_sample().dist,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    B,
    Bd,
    Kc,
    K,
    /// Settle threshold of the bias circuit; swept on pendulum runs.
    Alpha,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" => Ok(Self::B),
            "bd" | "b_d" => Ok(Self::Bd),
            "kc" | "k_c" => Ok(Self::Kc),
            "k" => Ok(Self::K),
            "alpha" => Ok(Self::Alpha),
            other => Err(Error::invalid("param", format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::B => "b",
            Self::Bd => "bd",
            Self::Kc => "kc",
            Self::K => "k",
            Self::Alpha => "alpha",
        }
    }

    /// Controller with this parameter set to `value`.
    pub fn apply(&self, cfg: &ControllerConfig, value: f64) -> Result<ControllerConfig> {
        let mut c = cfg.clone();
        match self {
            Self::B => c.b = value,
            Self::Bd => c.bd = value,
            Self::Kc => c.kc = value,
            Self::K => c.k = value,
            Self::Alpha => {
                return Err(Error::invalid("param", "alpha is a bias-circuit parameter, not a controller gain"))
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<MetricsReport, Error>,
}

/// Runs `f` over `values` on a pool of `jobs` threads (0 means one per core),
/// keeping the input order.
pub fn run_parallel<T, F>(values: &[f64], jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool builds");
    pool.install(|| values.par_iter().map(|v| f(*v)).collect())
}

/// One closed-loop run per value of a controller parameter. Failed rows are
/// recorded and the sweep carries on.
pub fn parameter_sweep(
    spec: &ScenarioSpec,
    cfg: &ControllerConfig,
    field: &HarmonicField,
    opts: &RunOptions,
    param: SweepParameter,
    values: &[f64],
    reference: Option<&Path>,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    if param == SweepParameter::Alpha {
        return Err(Error::invalid("param", "alpha sweeps run on the pendulum"));
    }
    Ok(run_parallel(values, jobs, |value| {
        let result = param
            .apply(cfg, value)
            .and_then(|c| run_simulation(spec, &c, field, opts))
            .map(|traj| compute_metrics(&traj, field.grid(), reference));
        SweepRow { value, result }
    }))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sweep table with one row per value; failed rows carry the error text.
pub fn write_sweep_csv<W: Write>(param: SweepParameter, rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "{},ts_s,delta_m_m,min_clearance_m,collided,effort_N_s,peak_speed_m_per_s,final_error_m,error",
        param.as_str()
    )?;
    for row in rows {
        match &row.result {
            Ok(m) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},",
                row.value,
                opt(m.settling_time),
                opt(m.max_deviation),
                m.min_clearance,
                m.collided,
                m.control_effort,
                m.peak_speed,
                m.final_error
            )?,
            Err(e) => writeln!(w, "{},,,,,,,,\"{}\"", row.value, e.to_string().replace('"', "'"))?,
        }
    }
    Ok(())
}
