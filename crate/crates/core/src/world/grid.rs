use crate::geometry::Point2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Free,
    Obstacle,
    Unknown,
}

impl Cell {
    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Free),
            '#' => Some(Cell::Obstacle),
            '?' => Some(Cell::Unknown),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Free => '.',
            Cell::Obstacle => '#',
            Cell::Unknown => '?',
        }
    }
}

/// Signed cell coordinates; may lie outside the grid.
pub type CellIndex = (i64, i64);

/// Occupancy grid. Row 0 is the bottom row (smallest y); `origin` is the
/// world position of the lower-left corner of cell (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Point2,
    pub cells: Vec<Cell>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Point2, fill: Cell) -> Self {
        Self {
            width,
            height,
            resolution,
            origin,
            cells: vec![fill; width * height],
        }
    }

    pub fn in_bounds(&self, (cx, cy): CellIndex) -> bool {
        cx >= 0 && cy >= 0 && (cx as usize) < self.width && (cy as usize) < self.height
    }

    /// Cell state; anything outside the grid reads as `Unknown`.
    pub fn cell(&self, c: CellIndex) -> Cell {
        if self.in_bounds(c) {
            self.cells[c.1 as usize * self.width + c.0 as usize]
        } else {
            Cell::Unknown
        }
    }

    pub fn set(&mut self, (cx, cy): CellIndex, value: Cell) {
        assert!(self.in_bounds((cx, cy)), "cell ({cx}, {cy}) outside grid");
        self.cells[cy as usize * self.width + cx as usize] = value;
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

    pub fn cell_at(&self, p: Point2) -> Cell {
        self.cell(self.world_to_cell(p))
    }

    pub fn is_free_at(&self, p: Point2) -> bool {
        self.cell_at(p) == Cell::Free
    }

    pub fn size_m(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    /// Set every cell whose center lies in the axis-aligned box.
    pub fn fill_rect(&mut self, min: Point2, max: Point2, value: Cell) {
        for cy in 0..self.height as i64 {
            for cx in 0..self.width as i64 {
                let c = self.cell_center((cx, cy));
                if c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y {
                    self.set((cx, cy), value);
                }
            }
        }
    }

    /// Cells crossed by the segment `a`-`b`, in order, by grid traversal.
    pub fn cells_on_segment(&self, a: Point2, b: Point2) -> Vec<CellIndex> {
        let res = self.resolution;
        let (mut cx, mut cy) = self.world_to_cell(a);
        let end = self.world_to_cell(b);
        let mut out = vec![(cx, cy)];
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        let ax = (a.x - self.origin.x) / res;
        let ay = (a.y - self.origin.y) / res;
        let next_boundary = |c: i64, step: i64| if step > 0 { (c + 1) as f64 } else { c as f64 };
        let (mut t_max_x, t_delta_x) = if dx != 0.0 {
            ((next_boundary(cx, step_x) - ax) * res / dx, res / dx.abs())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let (mut t_max_y, t_delta_y) = if dy != 0.0 {
            ((next_boundary(cy, step_y) - ay) * res / dy, res / dy.abs())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let limit = (end.0 - cx).abs() + (end.1 - cy).abs();
        for _ in 0..limit {
            if (cx, cy) == end {
                break;
            }
            if t_max_x < t_max_y {
                cx += step_x;
                t_max_x += t_delta_x;
            } else {
                cy += step_y;
                t_max_y += t_delta_y;
            }
            out.push((cx, cy));
        }
        out
    }

    /// True when every cell on the segment is free.
    pub fn segment_is_free(&self, a: Point2, b: Point2) -> bool {
        self.cells_on_segment(a, b).into_iter().all(|c| self.cell(c) == Cell::Free)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridMap {
        GridMap::new(10, 8, 0.5, Point2::new(-1.0, 2.0), Cell::Free)
    }

    #[test]
    fn cell_round_trip() {
        let g = grid();
        for cy in 0..8 {
            for cx in 0..10 {
                assert_eq!(g.world_to_cell(g.cell_center((cx, cy))), (cx, cy));
            }
        }
        assert_eq!(g.cell((-1, 0)), Cell::Unknown);
        assert_eq!(g.cell((10, 0)), Cell::Unknown);
    }

    #[test]
    fn traversal_is_connected_and_matches_dense_sampling() {
        let g = grid();
        let cases = [
            (Point2::new(-0.9, 2.1), Point2::new(3.9, 5.9)),
            (Point2::new(3.7, 2.2), Point2::new(-0.6, 5.3)),
            (Point2::new(0.1, 3.3), Point2::new(3.1, 3.3)),
            (Point2::new(1.2, 5.8), Point2::new(1.2, 2.05)),
        ];
        for (a, b) in cases {
            let cells = g.cells_on_segment(a, b);
            assert_eq!(cells[0], g.world_to_cell(a));
            assert_eq!(*cells.last().unwrap(), g.world_to_cell(b));
            for w in cells.windows(2) {
                assert_eq!((w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs(), 1);
            }
            let n = 20_000;
            for i in 0..=n {
                let c = g.world_to_cell(a.lerp(b, i as f64 / n as f64));
                assert!(cells.contains(&c), "sampled cell {c:?} missing");
            }
        }
    }
}
