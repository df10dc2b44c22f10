//! JSON map files.
//!
//! ```json
//! {
//!   "name": "scene1",
//!   "resolution": 0.05,
//!   "origin": [0.0, 0.0],
//!   "grid": { "rle": ["120.", "3#117."] },
//!   "start": { "x": 1.0, "y": 1.0, "heading": 0.0 },
//!   "locations": [ { "name": "restaurant", "x": 5.0, "y": 2.0 } ],
//!   "objects": [
//!     { "id": 1, "label": "table", "radius": 0.4, "x": 3.0, "y": 2.0 },
//!     { "id": 2, "label": "person", "radius": 0.25,
//!       "motion": { "type": "waypoint_loop", "speed": 0.5,
//!                   "waypoints": [[1.0, 1.0], [4.0, 1.0]] } }
//!   ]
//! }
//! ```
//!
//! Grid rows are listed top (largest y) to bottom. `ascii` rows spell one
//! character per cell; `rle` rows are runs like `12.3#`. Legend: `.` free,
//! `#` obstacle, `?` unknown. A waypoint object starts at its first
//! waypoint, offset along the loop by the optional `phase` (meters).

use super::{GridMap, Motion, NamedLocation, Pose, SemanticMap, WorldError, WorldObject};
use crate::geometry::Point2;
use crate::world::Cell;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpec {
    Ascii(Vec<String>),
    Rle(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationSpec {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: u32,
    pub label: String,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default = "static_motion")]
    pub motion: Motion,
    #[serde(default)]
    pub phase: f64,
}

fn static_motion() -> Motion {
    Motion::Static
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub name: String,
    pub resolution: f64,
    #[serde(default)]
    pub origin: [f64; 2],
    pub grid: GridSpec,
    pub start: PoseSpec,
    #[serde(default)]
    pub locations: Vec<LocationSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

fn decode_rows(spec: &GridSpec) -> Result<Vec<Vec<Cell>>, WorldError> {
    let bad_char = |row: usize, c: char| WorldError::Parse(format!("row {row}: unknown cell character {c:?}"));
    match spec {
        GridSpec::Ascii(rows) => rows
            .iter()
            .enumerate()
            .map(|(r, line)| line.chars().map(|c| Cell::from_char(c).ok_or_else(|| bad_char(r, c))).collect())
            .collect(),
        GridSpec::Rle(rows) => rows
            .iter()
            .enumerate()
            .map(|(r, line)| {
                let mut out = Vec::new();
                let mut count = String::new();
                for c in line.chars() {
                    if c.is_ascii_digit() {
                        count.push(c);
                        continue;
                    }
                    let cell = Cell::from_char(c).ok_or_else(|| bad_char(r, c))?;
                    let n = if count.is_empty() {
                        1
                    } else {
                        count
                            .parse::<usize>()
                            .map_err(|e| WorldError::Parse(format!("row {r}: {e}")))?
                    };
                    out.extend(std::iter::repeat_n(cell, n));
                    count.clear();
                }
                if !count.is_empty() {
                    return Err(WorldError::Parse(format!("row {r}: dangling run length")));
                }
                Ok(out)
            })
            .collect(),
    }
}

/// Run-length encode grid rows, top row first.
pub fn encode_rle(grid: &GridMap) -> Vec<String> {
    (0..grid.height)
        .rev()
        .map(|row| {
            let cells = &grid.cells[row * grid.width..(row + 1) * grid.width];
            let mut s = String::new();
            let mut i = 0;
            while i < cells.len() {
                let mut j = i;
                while j < cells.len() && cells[j] == cells[i] {
                    j += 1;
                }
                s.push_str(&format!("{}{}", j - i, cells[i].to_char()));
                i = j;
            }
            s
        })
        .collect()
}

impl MapFile {
    pub fn into_map(self) -> Result<SemanticMap, WorldError> {
        let rows = decode_rows(&self.grid)?;
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || height == 0 {
            return Err(WorldError::Invalid(vec!["grid is empty".into()]));
        }
        let ragged: Vec<String> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.len() != width)
            .map(|(i, r)| format!("row {i} has {} cells, expected {width}", r.len()))
            .collect();
        if !ragged.is_empty() {
            return Err(WorldError::Invalid(ragged));
        }
        let mut grid = GridMap::new(width, height, self.resolution, Point2::new(self.origin[0], self.origin[1]), Cell::Free);
        for (i, row) in rows.iter().enumerate() {
            let y = height - 1 - i;
            grid.cells[y * width..(y + 1) * width].copy_from_slice(row);
        }
        let mut missing = Vec::new();
        let objects = self
            .objects
            .into_iter()
            .map(|o| {
                let position = match (&o.motion, o.x, o.y) {
                    (Motion::WaypointLoop { waypoints, .. }, _, _) if !waypoints.is_empty() => {
                        super::point_on_loop(waypoints, o.phase)
                    }
                    (_, Some(x), Some(y)) => Point2::new(x, y),
                    _ => {
                        missing.push(format!("object {} has no position", o.id));
                        Point2::default()
                    }
                };
                WorldObject {
                    id: o.id,
                    label: o.label,
                    position,
                    radius: o.radius,
                    motion: o.motion,
                    phase: o.phase,
                }
            })
            .collect();
        if !missing.is_empty() {
            return Err(WorldError::Invalid(missing));
        }
        let map = SemanticMap {
            name: self.name,
            grid,
            start: Pose {
                position: Point2::new(self.start.x, self.start.y),
                heading: self.start.heading,
            },
            locations: self
                .locations
                .into_iter()
                .map(|l| NamedLocation {
                    name: l.name,
                    position: Point2::new(l.x, l.y),
                })
                .collect(),
            objects,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn from_map(map: &SemanticMap) -> MapFile {
        MapFile {
            name: map.name.clone(),
            resolution: map.grid.resolution,
            origin: [map.grid.origin.x, map.grid.origin.y],
            grid: GridSpec::Rle(encode_rle(&map.grid)),
            start: PoseSpec {
                x: map.start.position.x,
                y: map.start.position.y,
                heading: map.start.heading,
            },
            locations: map
                .locations
                .iter()
                .map(|l| LocationSpec {
                    name: l.name.clone(),
                    x: l.position.x,
                    y: l.position.y,
                })
                .collect(),
            objects: map
                .objects
                .iter()
                .map(|o| ObjectSpec {
                    id: o.id,
                    label: o.label.clone(),
                    radius: o.radius,
                    x: Some(o.position.x),
                    y: Some(o.position.y),
                    motion: o.motion.clone(),
                    phase: o.phase,
                })
                .collect(),
        }
    }
}

pub fn parse_map(text: &str) -> Result<SemanticMap, WorldError> {
    let file: MapFile = serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
    file.into_map()
}

pub fn load_map(path: impl AsRef<Path>) -> Result<SemanticMap, WorldError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
    parse_map(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_map_json(loc_x: f64) -> String {
        let rows: Vec<String> = (0..10).map(|_| ".".repeat(10)).collect();
        serde_json::json!({
            "name": "open",
            "resolution": 1.0,
            "grid": { "ascii": rows },
            "start": { "x": 0.5, "y": 0.5 },
            "locations": [ { "name": "hall", "x": loc_x, "y": 5.5 } ],
        })
        .to_string()
    }

    #[test]
    fn empty_free_map_loads() {
        let m = parse_map(&open_map_json(4.5)).unwrap();
        assert_eq!((m.grid.width, m.grid.height), (10, 10));
        assert!(m.grid.cells.iter().all(|&c| c == Cell::Free));
        assert_eq!(m.location("hall").unwrap().position, Point2::new(4.5, 5.5));
    }

    #[test]
    fn location_on_obstacle_rejected() {
        let mut rows: Vec<String> = (0..10).map(|_| ".".repeat(10)).collect();
        rows[4] = "....#.....".into(); // top-down row 4 is y in [5, 6)
        let text = serde_json::json!({
            "name": "wall",
            "resolution": 1.0,
            "grid": { "ascii": rows },
            "start": { "x": 0.5, "y": 0.5 },
            "locations": [ { "name": "hall", "x": 4.5, "y": 5.5 }, { "name": "hall", "x": 1.5, "y": 1.5 } ],
        })
        .to_string();
        match parse_map(&text) {
            Err(WorldError::Invalid(msgs)) => {
                assert_eq!(msgs.len(), 2, "{msgs:?}");
                assert!(msgs.iter().any(|m| m.contains("not on a free cell")));
                assert!(msgs.iter().any(|m| m.contains("duplicate")));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn rle_round_trip_and_orientation() {
        let text = serde_json::json!({
            "name": "rle",
            "resolution": 0.5,
            "origin": [1.0, -1.0],
            "grid": { "rle": ["3#2.", "5."] },
            "start": { "x": 3.2, "y": -0.8 },
        })
        .to_string();
        let m = parse_map(&text).unwrap();
        assert_eq!(m.grid.cell((0, 1)), Cell::Obstacle);
        assert_eq!(m.grid.cell((0, 0)), Cell::Free);
        let again = MapFile::from_map(&m).into_map().unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn bad_inputs_are_parse_errors() {
        assert!(matches!(parse_map("{"), Err(WorldError::Parse(_))));
        let text = serde_json::json!({
            "name": "x", "resolution": 1.0, "grid": { "ascii": ["..x"] }, "start": { "x": 0.5, "y": 0.5 }
        })
        .to_string();
        assert!(matches!(parse_map(&text), Err(WorldError::Parse(_))));
    }
}
