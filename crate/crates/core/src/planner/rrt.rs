use super::edt::squared_distance_transform;
use super::{ConstraintDisk, GlobalPath, PlannerConfig, PlannerError, Result};
use crate::geometry::Point2;
use crate::world::{Cell, CellIndex, GridMap, SemanticMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Distance in meters from each cell center to the nearest non-free cell
/// center, treating everything outside the map as non-free.
pub fn clearance_field(grid: &GridMap) -> Vec<f64> {
    let (w, h) = (grid.width, grid.height);
    let seeds: Vec<bool> = grid.cells.iter().map(|&c| c != Cell::Free).collect();
    let sq = squared_distance_transform(&seeds, w, h);
    let res = grid.resolution;
    let mut out = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            let border = (i + 1).min(w - i).min(j + 1).min(h - j) as f64 * res;
            out.push((sq[j * w + i].sqrt() * res).min(border));
        }
    }
    out
}

struct Checker<'a> {
    grid: &'a GridMap,
    clearance: Vec<f64>,
    required: f64,
    /// (center, squared keep-out radius)
    keep_out: Vec<(Point2, f64)>,
}

impl Checker<'_> {
    fn clearance_at(&self, p: Point2) -> f64 {
        let c = self.grid.world_to_cell(p);
        if self.grid.in_bounds(c) {
            self.clearance[c.1 as usize * self.grid.width + c.0 as usize]
        } else {
            0.0
        }
    }

    fn point_ok(&self, p: Point2) -> bool {
        self.grid.is_free_at(p)
            && self.clearance_at(p) >= self.required
            && self.keep_out.iter().all(|&(c, r2)| p.dist_sq(c) > r2)
    }

    fn segment_ok(&self, a: Point2, b: Point2) -> bool {
        let spacing = self.grid.resolution / 2.0;
        let n = (a.dist(b) / spacing).ceil().max(1.0) as usize;
        (0..=n).all(|k| self.point_ok(a.lerp(b, k as f64 / n as f64))) && self.grid.segment_is_free(a, b)
    }
}

/// Collision-free path on the map grid (Obstacle and Unknown cells are both
/// blocked), shortcut-smoothed and densified to the step length.
pub fn plan_global_rrt(start: Point2, goal: Point2, map: &SemanticMap, cfg: &PlannerConfig, seed: u64) -> Result<GlobalPath> {
    plan_global_rrt_avoiding(start, goal, map, &[], cfg, seed)
}

/// Like [`plan_global_rrt`], additionally keeping the path outside every
/// constraint disk (plus one cell). Disks already containing an endpoint
/// shrink to just exclude it.
pub fn plan_global_rrt_avoiding(
    start: Point2,
    goal: Point2,
    map: &SemanticMap,
    disks: &[ConstraintDisk],
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<GlobalPath> {
    let grid = &map.grid;
    for (name, p) in [("start", start), ("goal", goal)] {
        if !grid.is_free_at(p) {
            return Err(PlannerError::InvalidEndpoint(format!("{name} ({:.2}, {:.2}) is not on a free cell", p.x, p.y)));
        }
    }
    if start.dist(goal) < 1e-9 {
        return Ok(GlobalPath::new(vec![start]));
    }
    let clearance = clearance_field(grid);
    let mut checker = Checker {
        grid,
        clearance,
        required: 0.0,
        keep_out: Vec::new(),
    };
    checker.required = cfg
        .rrt_clearance
        .min(checker.clearance_at(start))
        .min(checker.clearance_at(goal));
    for d in disks {
        let mut r = d.radius + grid.resolution;
        for p in [start, goal] {
            r = r.min(p.dist(d.center) - 1e-6);
        }
        if r > 0.0 {
            checker.keep_out.push((d.center, r * r));
        }
    }
    let inner: Vec<(Point2, f64)> = checker
        .keep_out
        .iter()
        .map(|&(c, r2)| (c, r2.sqrt() - grid.resolution))
        .filter(|&(_, r)| r > 0.0)
        .collect();
    let blocked = |cell: CellIndex| {
        let p = grid.cell_center(cell);
        inner.iter().any(|&(c, r)| p.dist(c) <= r)
    };
    if !connected(grid, grid.world_to_cell(start), grid.world_to_cell(goal), blocked) {
        return Err(PlannerError::PlanningFailed { iterations: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = grow_tree(start, goal, &checker, cfg, &mut rng)?;
    let mut path = greedy_shortcut(&raw, &checker);
    random_shortcuts(&mut path, &checker, cfg.rrt_shortcut_attempts, &mut rng);
    Ok(GlobalPath::new(densify(&path, cfg.rrt_step)))
}

/// 8-connected flood fill over free cells, skipping cells deep inside a
/// keep-out disk; a necessary condition for any continuous valid path.
fn connected(grid: &GridMap, s: CellIndex, t: CellIndex, blocked: impl Fn(CellIndex) -> bool) -> bool {
    let mut seen = vec![false; grid.width * grid.height];
    let idx = |c: CellIndex| c.1 as usize * grid.width + c.0 as usize;
    let mut queue = VecDeque::from([s]);
    seen[idx(s)] = true;
    while let Some(c) = queue.pop_front() {
        if c == t {
            return true;
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                let n = (c.0 + dx, c.1 + dy);
                if grid.cell(n) == Cell::Free && !seen[idx(n)] && !blocked(n) {
                    seen[idx(n)] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

fn grow_tree(start: Point2, goal: Point2, checker: &Checker, cfg: &PlannerConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Point2>> {
    if checker.segment_ok(start, goal) {
        return Ok(vec![start, goal]);
    }
    let grid = checker.grid;
    let (sx, sy) = grid.size_m();
    let mut nodes = vec![start];
    let mut parent = vec![usize::MAX];
    for _ in 0..cfg.rrt_max_iterations {
        let sample = if rng.random_bool(cfg.rrt_goal_bias) {
            goal
        } else {
            Point2::new(
                grid.origin.x + rng.random_range(0.0..sx),
                grid.origin.y + rng.random_range(0.0..sy),
            )
        };
        let mut nearest = 0;
        let mut best = f64::INFINITY;
        for (i, n) in nodes.iter().enumerate() {
            let d = n.dist_sq(sample);
            if d < best {
                best = d;
                nearest = i;
            }
        }
        let from = nodes[nearest];
        let d = best.sqrt();
        if d < 1e-9 {
            continue;
        }
        let new = if d <= cfg.rrt_step { sample } else { from.lerp(sample, cfg.rrt_step / d) };
        if !checker.segment_ok(from, new) {
            continue;
        }
        nodes.push(new);
        parent.push(nearest);
        if new.dist(goal) <= cfg.rrt_step && checker.segment_ok(new, goal) {
            nodes.push(goal);
            parent.push(nodes.len() - 2);
            let mut path = Vec::new();
            let mut i = nodes.len() - 1;
            while i != usize::MAX {
                path.push(nodes[i]);
                i = parent[i];
            }
            path.reverse();
            return Ok(path);
        }
    }
    Err(PlannerError::PlanningFailed {
        iterations: cfg.rrt_max_iterations,
    })
}

fn greedy_shortcut(path: &[Point2], checker: &Checker) -> Vec<Point2> {
    let mut out = vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !checker.segment_ok(path[i], path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Point at arc length `s`, with the index of the segment holding it.
fn point_at(path: &[Point2], mut s: f64) -> (usize, Point2) {
    for (i, w) in path.windows(2).enumerate() {
        let len = w[0].dist(w[1]);
        if s <= len {
            let t = if len > 0.0 { s / len } else { 0.0 };
            return (i, w[0].lerp(w[1], t));
        }
        s -= len;
    }
    (path.len().saturating_sub(2), *path.last().unwrap())
}

fn random_shortcuts(path: &mut Vec<Point2>, checker: &Checker, attempts: usize, rng: &mut ChaCha8Rng) {
    for _ in 0..attempts {
        if path.len() < 3 {
            return;
        }
        let total = crate::geometry::polyline_length(path);
        let mut a = rng.random_range(0.0..total);
        let mut b = rng.random_range(0.0..total);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (ia, pa) = point_at(path, a);
        let (ib, pb) = point_at(path, b);
        if ib <= ia || !checker.segment_ok(pa, pb) {
            continue;
        }
        let mut next = path[..=ia].to_vec();
        next.push(pa);
        next.push(pb);
        next.extend_from_slice(&path[ib + 1..]);
        next.dedup_by(|x, y| x.dist(*y) < 1e-9);
        *path = next;
    }
}

/// Insert evenly spaced points so no segment exceeds `step`.
fn densify(path: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let n = (w[0].dist(w[1]) / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0].lerp(w[1], k as f64 / n as f64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Pose;
    use proptest::prelude::*;

    fn map(grid: GridMap) -> SemanticMap {
        SemanticMap {
            name: "t".into(),
            grid,
            start: Pose::default(),
            locations: vec![],
            objects: vec![],
        }
    }

    fn assert_valid(path: &GlobalPath, grid: &GridMap, step: f64) {
        for w in path.waypoints.windows(2) {
            assert!(w[0].dist(w[1]) <= step + 1e-9);
            let n = (w[0].dist(w[1]) / (grid.resolution / 2.0)).ceil().max(1.0) as usize;
            for k in 0..=n {
                let p = w[0].lerp(w[1], k as f64 / n as f64);
                assert_eq!(grid.cell_at(p), Cell::Free, "sample {p:?}");
            }
        }
    }

    #[test]
    fn start_equals_goal() {
        let m = map(GridMap::new(100, 100, 0.1, Point2::default(), Cell::Free));
        let p = plan_global_rrt(Point2::new(3.0, 3.0), Point2::new(3.0, 3.0), &m, &PlannerConfig::default(), 1).unwrap();
        assert_eq!(p.waypoints, vec![Point2::new(3.0, 3.0)]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn open_map_near_straight() {
        let m = map(GridMap::new(400, 400, 0.05, Point2::default(), Cell::Free));
        let cfg = PlannerConfig::default();
        let p = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(18.0, 18.0), &m, &cfg, 5).unwrap();
        let straight = Point2::new(1.0, 1.0).dist(Point2::new(18.0, 18.0));
        assert!((straight - 24.04).abs() < 0.01);
        assert!(p.length <= straight * 1.05, "{} vs {straight}", p.length);
        assert_valid(&p, &m.grid, cfg.rrt_step);
    }

    #[test]
    fn detours_around_wall() {
        let mut g = GridMap::new(200, 200, 0.05, Point2::default(), Cell::Free);
        g.fill_rect(Point2::new(4.8, 0.0), Point2::new(5.2, 8.0), Cell::Obstacle);
        let m = map(g);
        let cfg = PlannerConfig::default();
        let p = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(9.0, 1.0), &m, &cfg, 3).unwrap();
        assert_valid(&p, &m.grid, cfg.rrt_step);
        assert!(p.length > 15.0 && p.length < 20.0, "{}", p.length);
        assert_eq!(p.waypoints[0], Point2::new(1.0, 1.0));
        assert_eq!(*p.waypoints.last().unwrap(), Point2::new(9.0, 1.0));
    }

    #[test]
    fn walled_off_goal_fails() {
        let mut g = GridMap::new(100, 100, 0.1, Point2::default(), Cell::Free);
        g.fill_rect(Point2::new(6.0, 6.0), Point2::new(9.0, 9.0), Cell::Obstacle);
        g.fill_rect(Point2::new(6.5, 6.5), Point2::new(8.5, 8.5), Cell::Free);
        let m = map(g);
        let r = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(7.5, 7.5), &m, &PlannerConfig::default(), 0);
        assert!(matches!(r, Err(PlannerError::PlanningFailed { .. })));
    }

    #[test]
    fn blocked_endpoint_rejected() {
        let mut g = GridMap::new(100, 100, 0.1, Point2::default(), Cell::Free);
        g.fill_rect(Point2::new(6.0, 6.0), Point2::new(9.0, 9.0), Cell::Unknown);
        let m = map(g);
        let r = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(7.5, 7.5), &m, &PlannerConfig::default(), 0);
        assert!(matches!(r, Err(PlannerError::InvalidEndpoint(_))));
    }

    #[test]
    fn avoids_disks() {
        let m = map(GridMap::new(200, 200, 0.05, Point2::default(), Cell::Free));
        let cfg = PlannerConfig::default();
        let disk = ConstraintDisk {
            object_id: 1,
            label: "person".into(),
            center: Point2::new(5.0, 5.0),
            radius: 0.5,
            moving: false,
            last_seen: 0.0,
        };
        let p = plan_global_rrt_avoiding(Point2::new(2.0, 5.0), Point2::new(8.0, 5.0), &m, &[disk.clone()], &cfg, 9).unwrap();
        assert!(p.length > 6.0);
        for w in p.waypoints.windows(2) {
            for k in 0..=50 {
                let q = w[0].lerp(w[1], k as f64 / 50.0);
                assert!(q.dist(disk.center) > disk.radius);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let mut g = GridMap::new(200, 200, 0.05, Point2::default(), Cell::Free);
        g.fill_rect(Point2::new(4.8, 0.0), Point2::new(5.2, 8.0), Cell::Obstacle);
        let m = map(g);
        let cfg = PlannerConfig::default();
        let a = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(9.0, 1.0), &m, &cfg, 11).unwrap();
        let b = plan_global_rrt(Point2::new(1.0, 1.0), Point2::new(9.0, 1.0), &m, &cfg, 11).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_maps_give_valid_paths(
            rects in prop::collection::vec((0.0f64..9.0, 0.0f64..9.0, 0.2f64..2.5, 0.2f64..2.5), 0..6),
            seed in any::<u64>(),
        ) {
            let mut g = GridMap::new(100, 100, 0.1, Point2::default(), Cell::Free);
            for &(x, y, w, h) in &rects {
                g.fill_rect(Point2::new(x, y), Point2::new(x + w, y + h), Cell::Obstacle);
            }
            let (s, t) = (Point2::new(0.55, 0.55), Point2::new(9.45, 9.45));
            g.fill_rect(Point2::new(0.0, 0.0), Point2::new(1.2, 1.2), Cell::Free);
            g.fill_rect(Point2::new(8.8, 8.8), Point2::new(10.0, 10.0), Cell::Free);
            let m = map(g);
            let cfg = PlannerConfig::default();
            match plan_global_rrt(s, t, &m, &cfg, seed) {
                Ok(p) => {
                    prop_assert_eq!(p.waypoints[0], s);
                    prop_assert_eq!(*p.waypoints.last().unwrap(), t);
                    assert_valid(&p, &m.grid, cfg.rrt_step);
                }
                Err(PlannerError::PlanningFailed { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
