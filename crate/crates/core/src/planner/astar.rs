use super::costmap::{Costmap, LETHAL};
use super::{LocalPath, PlannerError, Result};
use crate::geometry::Point2;
use crate::world::CellIndex;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

/// Exact path cost `(orth + sqrt(2) * diag) / 128` in cell units, where each
/// step into a cell of cost `c` adds `128 + c` to the matching component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct PathCost {
    pub orth: u64,
    pub diag: u64,
}

impl PathCost {
    pub fn value(self) -> f64 {
        (self.orth as f64 + SQRT_2 * self.diag as f64) / 128.0
    }

    /// Cost in meters for a grid of the given resolution.
    pub fn meters(self, resolution: f64) -> f64 {
        self.value() * resolution
    }

    fn step(self, diagonal: bool, cell_cost: u8) -> PathCost {
        let w = 128 + cell_cost as u64;
        if diagonal {
            PathCost { orth: self.orth, diag: self.diag + w }
        } else {
            PathCost { orth: self.orth + w, diag: self.diag }
        }
    }

    fn raw(self) -> f64 {
        self.orth as f64 + SQRT_2 * self.diag as f64
    }
}

impl Ord for PathCost {
    /// Exact comparison of `a1 + sqrt(2) b1` against `a2 + sqrt(2) b2`.
    fn cmp(&self, other: &Self) -> Ordering {
        let da = self.orth as i128 - other.orth as i128;
        let db = other.diag as i128 - self.diag as i128;
        // sign of da - sqrt(2) * db
        match (da.signum(), db.signum()) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b <= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b >= 0 => Ordering::Less,
            (1, 1) => (da * da).cmp(&(2 * db * db)),
            _ => (2 * db * db).cmp(&(da * da)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellPath {
    pub cells: Vec<CellIndex>,
    pub cost: PathCost,
}

const ORTH: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const DIAG: [(i64, i64); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    idx: usize,
    g: PathCost,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (f, h, idx).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Successors of `c`: in-window non-lethal cells; diagonals need both
/// adjacent orthogonal cells non-lethal.
fn neighbors(cm: &Costmap, c: CellIndex, connectivity: u8, out: &mut Vec<(CellIndex, bool)>) {
    out.clear();
    for (dx, dy) in ORTH {
        let n = (c.0 + dx, c.1 + dy);
        if cm.get(n) != LETHAL {
            out.push((n, false));
        }
    }
    if connectivity == 8 {
        for (dx, dy) in DIAG {
            let n = (c.0 + dx, c.1 + dy);
            if cm.get(n) != LETHAL && cm.get((c.0 + dx, c.1)) != LETHAL && cm.get((c.0, c.1 + dy)) != LETHAL {
                out.push((n, true));
            }
        }
    }
}

/// A* between two non-lethal cells with edge weight `step * (1 + cost / 128)`.
pub fn search_cells(cm: &Costmap, start: CellIndex, goal: CellIndex, connectivity: u8) -> Option<CellPath> {
    if cm.is_lethal(start) || cm.is_lethal(goal) {
        return None;
    }
    let w = cm.width;
    let index = |c: CellIndex| c.1 as usize * w + c.0 as usize;
    let cell = |i: usize| ((i % w) as i64, (i / w) as i64);
    let heuristic = |c: CellIndex| {
        let dx = (c.0 - goal.0) as f64;
        let dy = (c.1 - goal.1) as f64;
        128.0 * dx.hypot(dy)
    };
    let n = cm.width * cm.height;
    let mut g: Vec<Option<PathCost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let s = index(start);
    let goal_idx = index(goal);
    g[s] = Some(PathCost::default());
    let h0 = heuristic(start);
    heap.push(Entry { f: h0, h: h0, idx: s, g: PathCost::default() });
    let mut best_goal: Option<PathCost> = None;
    let mut succ = Vec::with_capacity(8);
    while let Some(e) = heap.pop() {
        if let Some(bg) = best_goal {
            // Float priorities only order the search; stop once nothing left
            // could beat the goal even allowing for rounding.
            let bound = bg.raw();
            if e.f > bound + 1e-9 * bound.max(1.0) {
                break;
            }
        }
        if g[e.idx] != Some(e.g) {
            continue;
        }
        if e.idx == goal_idx {
            best_goal = Some(e.g);
            continue;
        }
        neighbors(cm, cell(e.idx), connectivity, &mut succ);
        for &(nc, diagonal) in &succ {
            let ni = index(nc);
            let ng = e.g.step(diagonal, cm.get(nc));
            if g[ni].is_none_or(|old| ng < old) {
                g[ni] = Some(ng);
                parent[ni] = e.idx;
                let h = heuristic(nc);
                heap.push(Entry { f: ng.raw() + h, h, idx: ni, g: ng });
                if ni == goal_idx {
                    best_goal = Some(ng);
                }
            }
        }
    }
    let cost = g[goal_idx]?;
    let mut cells = vec![goal];
    let mut i = goal_idx;
    while i != s {
        i = parent[i];
        cells.push(cell(i));
    }
    cells.reverse();
    Some(CellPath { cells, cost })
}

/// Nearest non-lethal window cell to `p` by center distance, row-major on ties.
pub(super) fn nearest_free_cell(cm: &Costmap, p: Point2) -> Option<CellIndex> {
    let mut best: Option<(f64, CellIndex)> = None;
    for cy in 0..cm.height as i64 {
        for cx in 0..cm.width as i64 {
            if cm.is_lethal((cx, cy)) {
                continue;
            }
            let d = cm.cell_center((cx, cy)).dist_sq(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, (cx, cy)));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Optimal local path from `start` to `goal` (both world frame). A lethal or
/// out-of-window goal is moved to the nearest non-lethal cell.
pub fn plan_local_astar(cm: &Costmap, start: Point2, goal: Point2, connectivity: u8) -> Result<LocalPath> {
    let s = cm.world_to_cell(start);
    if !cm.in_bounds(s) {
        return Err(PlannerError::InvalidEndpoint("start outside costmap window".into()));
    }
    if cm.is_lethal(s) {
        return Err(PlannerError::InvalidEndpoint("start cell is lethal".into()));
    }
    let mut gc = cm.world_to_cell(goal);
    if cm.is_lethal(gc) {
        gc = nearest_free_cell(cm, goal).ok_or(PlannerError::NoPath)?;
    }
    let path = search_cells(cm, s, gc, connectivity).ok_or(PlannerError::NoPath)?;
    let waypoints: Vec<Point2> = path.cells.iter().map(|&c| cm.cell_center(c)).collect();
    Ok(LocalPath {
        length: crate::geometry::polyline_length(&waypoints),
        waypoints,
        cost: path.cost.meters(cm.resolution),
    })
}
