//! Obstacle circles, obstacle motion prediction and reference-path queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleObstacle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl CircleObstacle {
    #[inline]
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.cx;
        let dy = p[1] - self.cy;
        (dx * dx + dy * dy).sqrt() - self.radius
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) <= 0.0
    }
}

/// Oriented rectangle; `length` runs along `yaw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub center: [f64; 2],
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidFootprint(format!(
                "dimensions must be positive, got {} x {}",
                self.length, self.width
            )));
        }
        if self.length < self.width {
            return Err(Error::InvalidFootprint(format!(
                "length {} is shorter than width {}",
                self.length, self.width
            )));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite() && self.yaw.is_finite()) {
            return Err(Error::InvalidFootprint("non-finite pose".into()));
        }
        Ok(())
    }

    /// Corners in counter-clockwise order starting at rear-right.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let local = [[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]];
        local.map(|[lx, ly]| [self.center[0] + c * lx - s * ly, self.center[1] + s * lx + c * ly])
    }

    /// Maps a point in body coordinates (along, across) to the world frame.
    pub fn to_world(&self, along: f64, across: f64) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.center[0] + c * along - s * across,
            self.center[1] + s * along + c * across,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    #[default]
    Static,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrack {
    pub footprint: Footprint,
    /// World-frame velocity, m/s. Ignored for static tracks.
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub kind: MotionKind,
}

impl ObstacleTrack {
    pub fn stationary(footprint: Footprint) -> Self {
        Self {
            footprint,
            velocity: [0.0, 0.0],
            kind: MotionKind::Static,
        }
    }

    pub fn moving(footprint: Footprint, velocity: [f64; 2]) -> Self {
        Self {
            footprint,
            velocity,
            kind: MotionKind::Moving,
        }
    }

    pub fn effective_velocity(&self) -> [f64; 2] {
        match self.kind {
            MotionKind::Static => [0.0, 0.0],
            MotionKind::Moving => self.velocity,
        }
    }

    /// Footprint after `t` seconds of constant-velocity motion.
    pub fn footprint_at(&self, t: f64) -> Footprint {
        let [vx, vy] = self.effective_velocity();
        Footprint {
            center: [
                self.footprint.center[0] + vx * t,
                self.footprint.center[1] + vy * t,
            ],
            ..self.footprint
        }
    }

    /// Circle decomposition translated by `velocity * t`.
    pub fn predict(&self, t: f64, margin: f64) -> Result<Vec<CircleObstacle>> {
        let circles = decompose(self, margin)?;
        Ok(translate(&circles, self.effective_velocity(), t))
    }
}

/// Covers the track footprint with `max(1, ceil(length / width))` equal
/// circles whose centres tile the major axis.
pub fn decompose(track: &ObstacleTrack, margin: f64) -> Result<Vec<CircleObstacle>> {
    let fp = &track.footprint;
    fp.validate()?;
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::invalid("margin", "must be finite and non-negative"));
    }
    let count = ((fp.length / fp.width).ceil() as usize).max(1);
    let segment = fp.length / count as f64;
    let radius = (segment / 2.0).hypot(fp.width / 2.0) + margin;
    Ok((0..count)
        .map(|i| {
            let along = -fp.length / 2.0 + segment * (i as f64 + 0.5);
            let [cx, cy] = fp.to_world(along, 0.0);
            CircleObstacle { cx, cy, radius }
        })
        .collect())
}

/// Constant-velocity extrapolation of a set of circles.
pub fn translate(circles: &[CircleObstacle], velocity: [f64; 2], t: f64) -> Vec<CircleObstacle> {
    circles
        .iter()
        .map(|c| CircleObstacle {
            cx: c.cx + velocity[0] * t,
            cy: c.cy + velocity[1] * t,
            radius: c.radius,
        })
        .collect()
}

/// Minimum signed clearance from `p` to any circle; `+inf` when empty.
#[inline]
pub fn min_obstacle_distance(p: [f64; 2], circles: &[CircleObstacle]) -> f64 {
    circles
        .iter()
        .map(|c| c.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Obstacle tracks plus the inflation margin used to decompose them.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    tracks: Vec<ObstacleTrack>,
    margin: f64,
    base: Vec<(Vec<CircleObstacle>, [f64; 2])>,
}

impl Scene {
    pub fn new(tracks: Vec<ObstacleTrack>, margin: f64) -> Result<Self> {
        let base = tracks
            .iter()
            .map(|t| Ok((decompose(t, margin)?, t.effective_velocity())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tracks,
            margin,
            base,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tracks(&self) -> &[ObstacleTrack] {
        &self.tracks
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// All obstacle circles at absolute scene time `t`.
    pub fn circles_at(&self, t: f64) -> Vec<CircleObstacle> {
        let mut out = Vec::new();
        for (circles, velocity) in &self.base {
            out.extend(translate(circles, *velocity, t));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Reference yaw, rad.
    pub yaw: f64,
    /// Reference speed, m/s.
    pub speed: f64,
}

/// Uniform grid over the waypoints' bounding box, CSR layout.
#[derive(Debug, Clone)]
struct WaypointGrid {
    origin: [f64; 2],
    cell: f64,
    nx: i64,
    ny: i64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl WaypointGrid {
    fn build(waypoints: &[Waypoint]) -> Self {
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        let mut spacing = 0.0;
        for (i, w) in waypoints.iter().enumerate() {
            min = [min[0].min(w.x), min[1].min(w.y)];
            max = [max[0].max(w.x), max[1].max(w.y)];
            if i > 0 {
                let prev = &waypoints[i - 1];
                spacing += (w.x - prev.x).hypot(w.y - prev.y);
            }
        }
        spacing /= (waypoints.len() - 1) as f64;
        let extent = (max[0] - min[0]).max(max[1] - min[1]);
        // at most ~4096 cells per axis
        let cell = (2.0 * spacing).max(extent / 4096.0).max(1e-6);
        let nx = ((max[0] - min[0]) / cell).floor() as i64 + 1;
        let ny = ((max[1] - min[1]) / cell).floor() as i64 + 1;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); (nx * ny) as usize];
        for (i, w) in waypoints.iter().enumerate() {
            let ix = (((w.x - min[0]) / cell).floor() as i64).clamp(0, nx - 1);
            let iy = (((w.y - min[1]) / cell).floor() as i64).clamp(0, ny - 1);
            buckets[(iy * nx + ix) as usize].push(i as u32);
        }
        let mut starts = Vec::with_capacity(buckets.len() + 1);
        let mut items = Vec::with_capacity(waypoints.len());
        starts.push(0);
        for b in buckets {
            items.extend(b);
            starts.push(items.len() as u32);
        }
        Self {
            origin: min,
            cell,
            nx,
            ny,
            starts,
            items,
        }
    }

    #[inline]
    fn scan_cell(
        &self,
        ix: i64,
        iy: i64,
        waypoints: &[Waypoint],
        p: [f64; 2],
        best: &mut (f64, usize),
    ) {
        let c = (iy * self.nx + ix) as usize;
        for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
            let i = i as usize;
            let w = &waypoints[i];
            let dx = p[0] - w.x;
            let dy = p[1] - w.y;
            let d2 = dx * dx + dy * dy;
            if d2 < best.0 || (d2 == best.0 && i < best.1) {
                *best = (d2, i);
            }
        }
    }

    /// Pushes the indices of all waypoints within `radius` of `p`.
    fn within(&self, waypoints: &[Waypoint], p: [f64; 2], radius: f64, out: &mut Vec<u32>) {
        let cell_of = |v: f64, o: f64, n: i64| (((v - o) / self.cell).floor() as i64).clamp(0, n - 1);
        let x0 = cell_of(p[0] - radius, self.origin[0], self.nx);
        let x1 = cell_of(p[0] + radius, self.origin[0], self.nx);
        let y0 = cell_of(p[1] - radius, self.origin[1], self.ny);
        let y1 = cell_of(p[1] + radius, self.origin[1], self.ny);
        let r2 = radius * radius;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let c = (iy * self.nx + ix) as usize;
                for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let w = &waypoints[i as usize];
                    let dx = p[0] - w.x;
                    let dy = p[1] - w.y;
                    if dx * dx + dy * dy <= r2 {
                        out.push(i);
                    }
                }
            }
        }
    }

    /// Exact nearest waypoint (lowest index on ties) by ring search.
    fn nearest(&self, waypoints: &[Waypoint], p: [f64; 2]) -> usize {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        if !(fx.is_finite() && fy.is_finite()) {
            return 0;
        }
        let limit = (1i64 << 40) as f64;
        let cx = fx.clamp(-limit, limit) as i64;
        let cy = fy.clamp(-limit, limit) as i64;
        // offset of p inside its cell, in cells; only meaningful on the grid
        let lx = (p[0] - self.origin[0]) / self.cell - cx as f64;
        let ly = (p[1] - self.origin[1]) / self.cell - cy as f64;
        let inner = if (0.0..=1.0).contains(&lx) && (0.0..=1.0).contains(&ly) {
            lx.min(1.0 - lx).min(ly).min(1.0 - ly)
        } else {
            0.0
        };
        // first ring that touches the grid
        let gap_x = (-cx).max(cx - (self.nx - 1)).max(0);
        let gap_y = (-cy).max(cy - (self.ny - 1)).max(0);
        let mut r = gap_x.max(gap_y);
        let r_max = cx
            .max(self.nx - 1 - cx)
            .max(cy)
            .max(self.ny - 1 - cy)
            .max(r);
        let mut best = (f64::INFINITY, usize::MAX);
        loop {
            let x0 = (cx - r).max(0);
            let x1 = (cx + r).min(self.nx - 1);
            let y0 = (cy - r).max(0);
            let y1 = (cy + r).min(self.ny - 1);
            if r == 0 {
                self.scan_cell(cx, cy, waypoints, p, &mut best);
            } else {
                for iy in [cy - r, cy + r] {
                    if (0..self.ny).contains(&iy) {
                        for ix in x0..=x1 {
                            self.scan_cell(ix, iy, waypoints, p, &mut best);
                        }
                    }
                }
                for ix in [cx - r, cx + r] {
                    if (0..self.nx).contains(&ix) {
                        for iy in y0.max(cy - r + 1)..=y1.min(cy + r - 1) {
                            self.scan_cell(ix, iy, waypoints, p, &mut best);
                        }
                    }
                }
            }
            // every unvisited cell is at least (r + inner) cells away from p
            let reach = (r as f64 + inner) * self.cell * (1.0 - 1e-9);
            if best.1 != usize::MAX && best.0 < reach * reach {
                return best.1;
            }
            if r >= r_max {
                return best.1;
            }
            r += 1;
        }
    }
}

/// Per-cell candidate lists on a grid around the path. For any point in a
/// cell, the nearest waypoint lies within `d_c + 2h` of the cell center,
/// where `d_c` is the center's nearest-waypoint distance and `h` the half
/// diagonal, so scanning those candidates is exact.
#[derive(Debug, Clone)]
struct CandidateTable {
    origin: [f64; 2],
    cell: f64,
    nx: i64,
    ny: i64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CandidateTable {
    const MARGIN: f64 = 6.0;
    const MAX_CELLS: f64 = (1 << 21) as f64;

    fn build(grid: &WaypointGrid, waypoints: &[Waypoint]) -> Self {
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for w in waypoints {
            min = [min[0].min(w.x), min[1].min(w.y)];
            max = [max[0].max(w.x), max[1].max(w.y)];
        }
        let origin = [min[0] - Self::MARGIN, min[1] - Self::MARGIN];
        let span = [max[0] - min[0] + 2.0 * Self::MARGIN, max[1] - min[1] + 2.0 * Self::MARGIN];
        let cell = (grid.cell / 4.0).max((span[0] * span[1] / Self::MAX_CELLS).sqrt());
        let nx = (span[0] / cell).ceil() as i64;
        let ny = (span[1] / cell).ceil() as i64;
        let h = cell * std::f64::consts::FRAC_1_SQRT_2;
        let mut starts = Vec::with_capacity((nx * ny + 1) as usize);
        let mut items = Vec::new();
        starts.push(0);
        for iy in 0..ny {
            for ix in 0..nx {
                let c = [
                    origin[0] + (ix as f64 + 0.5) * cell,
                    origin[1] + (iy as f64 + 0.5) * cell,
                ];
                let w = &waypoints[grid.nearest(waypoints, c)];
                let d_c = ((c[0] - w.x).powi(2) + (c[1] - w.y).powi(2)).sqrt();
                let reach = (d_c + 2.0 * h) * (1.0 + 1e-9) + 1e-9;
                let first = items.len();
                grid.within(waypoints, c, reach, &mut items);
                items[first..].sort_unstable();
                starts.push(items.len() as u32);
            }
        }
        Self {
            origin,
            cell,
            nx,
            ny,
            starts,
            items,
        }
    }

    /// Nearest waypoint, or `None` when `p` is off the table.
    #[inline]
    fn nearest(&self, waypoints: &[Waypoint], p: [f64; 2]) -> Option<usize> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64) {
            return None;
        }
        // truncation is floor here
        let c = fy as usize * self.nx as usize + fx as usize;
        let mut best = (f64::INFINITY, usize::MAX);
        // candidates are sorted, so strict improvement keeps the lowest index
        for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
            let w = &waypoints[i as usize];
            let dx = p[0] - w.x;
            let dy = p[1] - w.y;
            let d2 = dx * dx + dy * dy;
            if d2 < best.0 {
                best = (d2, i as usize);
            }
        }
        Some(best.1)
    }
}

/// Waypoint polyline with reference yaw/speed and a target point.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    waypoints: Vec<Waypoint>,
    target: [f64; 2],
    grid: WaypointGrid,
    table: CandidateTable,
}

impl ReferencePath {
    pub fn new(waypoints: Vec<Waypoint>, target: [f64; 2]) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidPath("at least two waypoints required".into()));
        }
        if waypoints.len() > u32::MAX as usize {
            return Err(Error::InvalidPath("too many waypoints".into()));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !(w.x.is_finite() && w.y.is_finite() && w.yaw.is_finite()) {
                return Err(Error::InvalidPath(format!("waypoint {i} is not finite")));
            }
            if !(w.speed >= 0.0 && w.speed.is_finite()) {
                return Err(Error::InvalidPath(format!(
                    "waypoint {i} has invalid reference speed {}",
                    w.speed
                )));
            }
            if i > 0 && w.x == waypoints[i - 1].x && w.y == waypoints[i - 1].y {
                return Err(Error::InvalidPath(format!(
                    "waypoints {} and {i} coincide",
                    i - 1
                )));
            }
        }
        if !(target[0].is_finite() && target[1].is_finite()) {
            return Err(Error::InvalidPath("target point is not finite".into()));
        }
        let grid = WaypointGrid::build(&waypoints);
        let table = CandidateTable::build(&grid, &waypoints);
        Ok(Self {
            waypoints,
            target,
            grid,
            table,
        })
    }

    /// Builds waypoints from a polyline; yaw follows the local tangent and the
    /// target is the last point.
    pub fn from_points(points: &[[f64; 2]], speed: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath("at least two points required".into()));
        }
        let n = points.len();
        let waypoints = (0..n)
            .map(|i| {
                let a = points[i.saturating_sub(1)];
                let b = points[(i + 1).min(n - 1)];
                Waypoint {
                    x: points[i][0],
                    y: points[i][1],
                    yaw: (b[1] - a[1]).atan2(b[0] - a[0]),
                    speed,
                }
            })
            .collect();
        Self::new(waypoints, points[n - 1])
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn target(&self) -> [f64; 2] {
        self.target
    }

    /// Index of the nearest waypoint; ties go to the lowest index.
    #[inline]
    pub fn closest_index(&self, p: [f64; 2]) -> usize {
        self.table
            .nearest(&self.waypoints, p)
            .unwrap_or_else(|| self.grid.nearest(&self.waypoints, p))
    }

    #[inline]
    pub fn closest_waypoint(&self, p: [f64; 2]) -> &Waypoint {
        &self.waypoints[self.closest_index(p)]
    }
}
