use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioSpec;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Obstacle,
    Target,
}

/// Rasterized workspace. Cell `(i, j)` covers `[i*h, (i+1)*h) x [j*h, (j+1)*h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    nx: usize,
    ny: usize,
    cell_size: f64,
    labels: Vec<Cell>,
    target: (usize, usize),
}

impl OccupancyGrid {
    /// Builds a grid from row-major labels (`labels[j * nx + i]`).
    ///
    /// Requires exactly one target cell with at least one 4-connected free
    /// neighbor. The obstacle frame is not required here so that strips and
    /// other test geometries can be expressed; [`rasterize_scenario`] always
    /// produces one.
    pub fn new(nx: usize, ny: usize, cell_size: f64, labels: Vec<Cell>) -> Result<Self> {
        if nx == 0 || ny == 0 || labels.len() != nx * ny {
            return Err(Error::InvalidGrid(format!(
                "expected {} labels for a {nx}x{ny} grid, got {}",
                nx * ny,
                labels.len()
            )));
        }
        if !(cell_size > 0.0) {
            return Err(Error::invalid("cell_size", "must be positive"));
        }
        let targets: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Target)
            .map(|(k, _)| k)
            .collect();
        if targets.len() != 1 {
            return Err(Error::InvalidGrid(format!(
                "expected exactly one target cell, found {}",
                targets.len()
            )));
        }
        let target = (targets[0] % nx, targets[0] / nx);
        let grid = Self {
            nx,
            ny,
            cell_size,
            labels,
            target,
        };
        if !grid
            .neighbors4(target.0, target.1)
            .any(|(i, j)| grid.label(i, j) == Cell::Free)
        {
            return Err(Error::EmptyFreeSpace);
        }
        Ok(grid)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn labels(&self) -> &[Cell] {
        &self.labels
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn label(&self, i: usize, j: usize) -> Cell {
        self.labels[self.index(i, j)]
    }

    /// Label with out-of-range indices reading as obstacle.
    #[inline]
    pub fn label_or_wall(&self, i: isize, j: isize) -> Cell {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            Cell::Obstacle
        } else {
            self.label(i as usize, j as usize)
        }
    }

    pub fn target_cell(&self) -> (usize, usize) {
        self.target
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            (i as f64 + 0.5) * self.cell_size,
            (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Center of the target cell; the point the potential is pinned to zero at.
    pub fn target_point(&self) -> Vec2 {
        self.cell_center(self.target.0, self.target.1)
    }

    pub fn locate(&self, p: Vec2) -> Option<(usize, usize)> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let i = (p.x / self.cell_size).floor() as usize;
        let j = (p.y / self.cell_size).floor() as usize;
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    pub fn label_at(&self, p: Vec2) -> Cell {
        self.locate(p)
            .map(|(i, j)| self.label(i, j))
            .unwrap_or(Cell::Obstacle)
    }

    pub fn is_free_point(&self, p: Vec2) -> bool {
        self.label_at(p) != Cell::Obstacle
    }

    pub fn neighbors4(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        const OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        OFFSETS.iter().filter_map(move |(di, dj)| {
            let ni = i as isize + di;
            let nj = j as isize + dj;
            (ni >= 0 && nj >= 0 && (ni as usize) < self.nx && (nj as usize) < self.ny)
                .then_some((ni as usize, nj as usize))
        })
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.labels.iter().filter(|c| **c == cell).count()
    }

    /// Does the straight segment `a -> b` touch an obstacle cell?
    pub fn segment_hits_obstacle(&self, a: Vec2, b: Vec2) -> bool {
        let len = (b - a).norm();
        let n = ((len / (0.25 * self.cell_size)).ceil() as usize).max(1);
        (0..=n).any(|k| {
            let p = a + (b - a) * (k as f64 / n as f64);
            !self.is_free_point(p)
        })
    }

    /// Euclidean distance from `p` to the nearest obstacle cell boundary
    /// (zero if `p` lies inside one).
    pub fn obstacle_distance(&self, p: Vec2) -> f64 {
        let h = self.cell_size;
        let Some((ci, cj)) = self.locate(p) else {
            return 0.0;
        };
        if self.label(ci, cj) == Cell::Obstacle {
            return 0.0;
        }
        let max_ring = self.nx.max(self.ny);
        let mut best = f64::INFINITY;
        for ring in 1..=max_ring {
            // any cell in this ring is at least (ring - 1) cells away
            if (ring as f64 - 1.0) * h >= best {
                break;
            }
            let r = ring as isize;
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let i = ci as isize + di;
                    let j = cj as isize + dj;
                    if self.label_or_wall(i, j) != Cell::Obstacle {
                        continue;
                    }
                    let x0 = i as f64 * h;
                    let y0 = j as f64 * h;
                    let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + h));
                    let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + h));
                    best = best.min(dx.hypot(dy));
                }
            }
        }
        best
    }
}

/// Rasterizes a scenario onto a cell grid with an obstacle frame.
pub fn rasterize_scenario(spec: &ScenarioSpec) -> Result<OccupancyGrid> {
    spec.validate()?;
    let h = spec.cell_size;
    let nx = (spec.extent.x / h).round() as usize;
    let ny = (spec.extent.y / h).round() as usize;
    let mut labels = vec![Cell::Free; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let c = Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let frame = i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
            if frame || spec.obstacles.iter().any(|o| o.contains(c)) {
                labels[j * nx + i] = Cell::Obstacle;
            }
        }
    }
    let locate = |p: Vec2| {
        let i = ((p.x / h).floor() as usize).min(nx - 1);
        let j = ((p.y / h).floor() as usize).min(ny - 1);
        j * nx + i
    };
    let t = locate(spec.target);
    if labels[t] == Cell::Obstacle || spec.obstacles.iter().any(|o| o.contains(spec.target)) {
        return Err(Error::TargetInsideObstacle(spec.target));
    }
    let s = locate(spec.start);
    if labels[s] == Cell::Obstacle || spec.obstacles.iter().any(|o| o.contains(spec.start)) {
        return Err(Error::StartInsideObstacle(spec.start));
    }
    labels[t] = Cell::Target;
    OccupancyGrid::new(nx, ny, h, labels)
}
