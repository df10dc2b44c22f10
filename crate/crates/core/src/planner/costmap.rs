use super::edt::squared_distance_transform;
use super::{ConstraintDisk, PlannerConfig};
use crate::geometry::{Circle, Point2};
use crate::world::{Cell, CellIndex, GridMap, RobotState, SemanticMap};
use serde::{Deserialize, Serialize};

pub const LETHAL: u8 = 255;
pub const INSCRIBED: u8 = 254;

/// Robot-centered window of traversal costs, aligned with the map grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costmap {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// World position of the lower-left corner of cell (0, 0).
    pub origin: Point2,
    pub cost: Vec<u8>,
    /// Distance in meters from each cell center to the nearest lethal cell center.
    #[serde(skip)]
    pub distance: Vec<f64>,
    /// Same, counting only static map cells (no constraint disks).
    #[serde(skip)]
    pub obstacle_distance: Vec<f64>,
}

impl Costmap {
    pub fn in_bounds(&self, (cx, cy): CellIndex) -> bool {
        cx >= 0 && cy >= 0 && (cx as usize) < self.width && (cy as usize) < self.height
    }

    fn idx(&self, (cx, cy): CellIndex) -> usize {
        cy as usize * self.width + cx as usize
    }

    /// Cost of a cell; outside the window reads as lethal.
    pub fn get(&self, c: CellIndex) -> u8 {
        if self.in_bounds(c) {
            self.cost[self.idx(c)]
        } else {
            LETHAL
        }
    }

    pub fn is_lethal(&self, c: CellIndex) -> bool {
        self.get(c) == LETHAL
    }

    pub fn world_to_cell(&self, p: Point2) -> CellIndex {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, (cx, cy): CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cx as f64 + 0.5) * self.resolution,
            self.origin.y + (cy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cost_at(&self, p: Point2) -> u8 {
        self.get(self.world_to_cell(p))
    }

    /// Distance from the center of the cell holding `p` to the nearest
    /// lethal cell center; zero outside the window.
    pub fn distance_at(&self, p: Point2) -> f64 {
        let c = self.world_to_cell(p);
        if self.in_bounds(c) && !self.distance.is_empty() {
            self.distance[self.idx(c)]
        } else {
            0.0
        }
    }

    /// Distance from the center of the cell holding `p` to the nearest
    /// non-free map cell center; zero outside the window.
    pub fn obstacle_distance_at(&self, p: Point2) -> f64 {
        let c = self.world_to_cell(p);
        if self.in_bounds(c) && !self.obstacle_distance.is_empty() {
            self.obstacle_distance[self.idx(c)]
        } else {
            0.0
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.in_bounds(self.world_to_cell(p))
    }

    /// Copy with every cell whose center lies in one of `circles` made lethal.
    pub fn with_footprints(&self, circles: &[Circle]) -> Costmap {
        let mut out = self.clone();
        for c in circles {
            let lo = self.world_to_cell(Point2::new(c.center.x - c.radius, c.center.y - c.radius));
            let hi = self.world_to_cell(Point2::new(c.center.x + c.radius, c.center.y + c.radius));
            for cy in lo.1.max(0)..=hi.1.min(self.height as i64 - 1) {
                for cx in lo.0.max(0)..=hi.0.min(self.width as i64 - 1) {
                    if c.contains(self.cell_center((cx, cy))) {
                        let i = self.idx((cx, cy));
                        out.cost[i] = LETHAL;
                    }
                }
            }
        }
        out
    }

    /// Block-max downsampling so that neither side exceeds `max_side` cells.
    pub fn downsample(&self, max_side: usize) -> Costmap {
        let factor = self.width.max(self.height).div_ceil(max_side.max(1)).max(1);
        if factor == 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut cost = vec![0u8; w * h];
        for y in 0..self.height {
            for x in 0..self.width {
                let o = &mut cost[(y / factor) * w + x / factor];
                *o = (*o).max(self.cost[y * self.width + x]);
            }
        }
        Costmap {
            width: w,
            height: h,
            resolution: self.resolution * factor as f64,
            origin: self.origin,
            cost,
            distance: Vec::new(),
            obstacle_distance: Vec::new(),
        }
    }
}

/// Inflation cost for a cell at distance `d` from the nearest lethal cell.
pub fn inflation_cost(d: f64, cfg: &PlannerConfig) -> u8 {
    if d <= 0.0 {
        LETHAL
    } else if d > cfg.inflation_radius {
        0
    } else if d <= cfg.robot_radius {
        INSCRIBED
    } else {
        let c = 254.0 * (-cfg.inflation_decay * (d - cfg.robot_radius)).exp();
        c.round().min(254.0) as u8
    }
}

/// Costmap window centered on the robot.
pub fn build_costmap(robot: &RobotState, map: &SemanticMap, disks: &[ConstraintDisk], cfg: &PlannerConfig) -> Costmap {
    costmap_window(robot.position, &map.grid, disks, cfg)
}

/// Lethal cells: every non-free map cell (cells outside the map count as
/// non-free) and every cell whose center lies in a constraint disk. Other
/// cells get exponentially decaying inflation cost.
pub fn costmap_window(robot: Point2, grid: &GridMap, disks: &[ConstraintDisk], cfg: &PlannerConfig) -> Costmap {
    let res = grid.resolution;
    let n = (cfg.window_size / res).round().max(1.0) as i64;
    let (rcx, rcy) = grid.world_to_cell(robot);
    let x0 = rcx - n / 2;
    let y0 = rcy - n / 2;
    let origin = grid.cell_center((x0, y0)).sub(Point2::new(res / 2.0, res / 2.0));
    let n = n as usize;
    let mut cm = Costmap {
        width: n,
        height: n,
        resolution: res,
        origin,
        cost: vec![0; n * n],
        distance: Vec::new(),
        obstacle_distance: Vec::new(),
    };
    let mut lethal = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let cell = grid.cell((x0 + i as i64, y0 + j as i64));
            if cell != Cell::Free {
                lethal[j * n + i] = true;
            }
        }
    }
    let sq = squared_distance_transform(&lethal, n, n);
    cm.obstacle_distance = sq.iter().map(|d| d.sqrt() * res).collect();
    for disk in disks {
        mark_disk(&cm, disk, &mut lethal);
    }
    let sq = squared_distance_transform(&lethal, n, n);
    cm.distance = sq.iter().map(|d| d.sqrt() * res).collect();
    for (c, &d) in cm.cost.iter_mut().zip(&cm.distance) {
        *c = inflation_cost(d, cfg);
    }
    cm
}

fn mark_disk(cm: &Costmap, disk: &ConstraintDisk, lethal: &mut [bool]) {
    let a = disk.radius;
    let lo = cm.world_to_cell(Point2::new(disk.center.x - a, disk.center.y - a));
    let hi = cm.world_to_cell(Point2::new(disk.center.x + a, disk.center.y + a));
    for cy in (lo.1 - 1).max(0)..=(hi.1 + 1).min(cm.height as i64 - 1) {
        for cx in (lo.0 - 1).max(0)..=(hi.0 + 1).min(cm.width as i64 - 1) {
            if disk_contains(disk, cm.cell_center((cx, cy))) {
                lethal[cy as usize * cm.width + cx as usize] = true;
            }
        }
    }
}

/// The region test `(x - x0)^2 + (y - y0)^2 <= a^2`.
pub fn disk_contains(disk: &ConstraintDisk, p: Point2) -> bool {
    let dx = p.x - disk.center.x;
    let dy = p.y - disk.center.y;
    dx * dx + dy * dy <= disk.radius * disk.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::GridMap;

    fn open_grid() -> GridMap {
        GridMap::new(400, 400, 0.05, Point2::new(-10.0, -10.0), Cell::Free)
    }

    fn disk(x: f64, y: f64, a: f64) -> ConstraintDisk {
        ConstraintDisk {
            object_id: 1,
            label: "person".into(),
            center: Point2::new(x, y),
            radius: a,
            moving: false,
            last_seen: 0.0,
        }
    }

    #[test]
    fn empty_window_is_zero() {
        let cm = costmap_window(Point2::new(0.01, 0.02), &open_grid(), &[], &PlannerConfig::default());
        assert_eq!((cm.width, cm.height), (120, 120));
        assert!(cm.cost.iter().all(|&c| c == 0));
        assert!(cm.distance.iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn window_is_grid_aligned_and_centered() {
        let g = open_grid();
        let p = Point2::new(1.234, -0.567);
        let cm = costmap_window(p, &g, &[], &PlannerConfig::default());
        let k = ((cm.origin.x - g.origin.x) / g.resolution).round();
        assert!((cm.origin.x - (g.origin.x + k * g.resolution)).abs() < 1e-9);
        let c = cm.world_to_cell(p);
        assert_eq!(c, (60, 60));
    }

    #[test]
    fn centered_disk_cells_are_lethal() {
        let cfg = PlannerConfig::default();
        let d = disk(0.0, 0.0, 0.5);
        let cm = costmap_window(Point2::new(0.0, 0.0), &open_grid(), std::slice::from_ref(&d), &cfg);
        let mut inside = 0;
        for cy in 0..cm.height as i64 {
            for cx in 0..cm.width as i64 {
                let c = cm.cell_center((cx, cy));
                let expect = c.x * c.x + c.y * c.y <= 0.25;
                assert_eq!(cm.get((cx, cy)) == LETHAL, expect, "cell ({cx}, {cy})");
                inside += expect as usize;
            }
        }
        assert!(inside > 300);
    }

    #[test]
    fn cost_non_increasing_along_rays() {
        let mut g = GridMap::new(60, 60, 0.05, Point2::new(0.0, 0.0), Cell::Free);
        g.fill_rect(Point2::new(1.2, 1.0), Point2::new(1.6, 1.9), Cell::Obstacle);
        let cfg = PlannerConfig { window_size: 3.0, ..PlannerConfig::default() };
        let cm = costmap_window(Point2::new(1.5, 1.5), &g, &[], &cfg);
        assert_eq!((cm.width, cm.height), (60, 60));
        let dirs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        let mut checked = 0;
        for cy in 0..60i64 {
            for cx in 0..60i64 {
                if !cm.is_lethal((cx, cy)) {
                    continue;
                }
                for (dx, dy) in dirs {
                    let mut prev = LETHAL;
                    let mut p = (cx + dx, cy + dy);
                    while cm.in_bounds(p) {
                        let c = cm.get(p);
                        if c == LETHAL && prev != LETHAL {
                            break;
                        }
                        assert!(c <= prev, "cost rises at {p:?}");
                        prev = c;
                        p = (p.0 + dx, p.1 + dy);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn cost_is_monotone_in_distance() {
        let mut g = GridMap::new(60, 60, 0.05, Point2::new(0.0, 0.0), Cell::Free);
        g.fill_rect(Point2::new(0.5, 0.5), Point2::new(0.9, 1.6), Cell::Obstacle);
        g.fill_rect(Point2::new(2.0, 0.2), Point2::new(2.1, 0.4), Cell::Unknown);
        let cfg = PlannerConfig { window_size: 3.0, ..PlannerConfig::default() };
        let cm = costmap_window(Point2::new(1.5, 1.5), &g, &[disk(2.2, 2.0, 0.3)], &cfg);
        let mut pairs: Vec<(f64, u8)> = cm.distance.iter().copied().zip(cm.cost.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        for (i, &d) in cm.distance.iter().enumerate() {
            let (cx, cy) = ((i % 60) as i64, (i / 60) as i64);
            let p = cm.cell_center((cx, cy));
            let brute = (0..3600)
                .filter(|&j| cm.cost[j] == LETHAL)
                .map(|j| p.dist(cm.cell_center(((j % 60) as i64, (j / 60) as i64))))
                .fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn inflation_profile() {
        let cfg = PlannerConfig::default();
        assert_eq!(inflation_cost(0.0, &cfg), LETHAL);
        assert_eq!(inflation_cost(0.1, &cfg), INSCRIBED);
        assert_eq!(inflation_cost(0.2, &cfg), INSCRIBED);
        assert_eq!(inflation_cost(0.6, &cfg), (254.0 * (-1.2f64).exp()).round() as u8);
        assert_eq!(inflation_cost(0.61, &cfg), 0);
        let mut prev = 255;
        for i in 1..200 {
            let c = inflation_cost(i as f64 * 0.005, &cfg);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn footprints_only_touch_covered_cells() {
        let cfg = PlannerConfig::default();
        let cm = costmap_window(Point2::new(0.0, 0.0), &open_grid(), &[], &cfg);
        let c = Circle { center: Point2::new(0.4, -0.3), radius: 0.35 };
        let f = cm.with_footprints(&[c]);
        for cy in 0..cm.height as i64 {
            for cx in 0..cm.width as i64 {
                assert_eq!(f.is_lethal((cx, cy)), c.contains(cm.cell_center((cx, cy))));
            }
        }
        assert_eq!(f.distance, cm.distance);
    }

    #[test]
    fn downsample_keeps_maxima() {
        let cfg = PlannerConfig::default();
        let cm = costmap_window(Point2::new(0.0, 0.0), &open_grid(), &[disk(1.0, 1.0, 0.3)], &cfg);
        let small = cm.downsample(50);
        assert!(small.width <= 50 && small.height <= 50);
        assert_eq!(small.cost.iter().max(), Some(&LETHAL));
        assert_eq!(cm.downsample(120), cm);
    }
}
