//! Simulated environment: occupancy grid with named locations, static and
//! moving objects, unicycle robot kinematics, and a labeled-object sensor.

mod grid;
mod map_file;
mod sim;

pub use grid::{Cell, CellIndex, GridMap};
pub use map_file::{load_map, parse_map, MapFile};
pub use sim::{
    apply_control, robot_collides, sense_objects, sense_objects_noisy, step_world, visible, Detection,
    DetectionFrame, SensorConfig,
};

use crate::geometry::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("map parse error: {0}")]
    Parse(String),
    #[error("invalid map: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedLocation {
    pub name: String,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    Static,
    /// Closed loop through the waypoints at constant speed.
    WaypointLoop { waypoints: Vec<Point2>, speed: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: u32,
    pub label: String,
    pub position: Point2,
    pub radius: f64,
    pub motion: Motion,
    /// Arc length travelled along the loop, modulo its perimeter.
    #[serde(default)]
    pub phase: f64,
}

impl WorldObject {
    pub fn is_moving(&self) -> bool {
        matches!(&self.motion, Motion::WaypointLoop { speed, .. } if *speed > 0.0)
    }

    /// Put a waypoint object at the point `phase` meters along its loop.
    pub fn sync_position(&mut self) {
        if let Motion::WaypointLoop { waypoints, .. } = &self.motion {
            self.position = point_on_loop(waypoints, self.phase);
        }
    }
}

pub(crate) fn loop_length(waypoints: &[Point2]) -> f64 {
    let n = waypoints.len();
    (0..n).map(|i| waypoints[i].dist(waypoints[(i + 1) % n])).sum()
}

pub(crate) fn point_on_loop(waypoints: &[Point2], s: f64) -> Point2 {
    let n = waypoints.len();
    let total = loop_length(waypoints);
    if n == 1 || total == 0.0 {
        return waypoints[0];
    }
    let mut s = s.rem_euclid(total);
    for i in 0..n {
        let a = waypoints[i];
        let b = waypoints[(i + 1) % n];
        let len = a.dist(b);
        if s <= len {
            return if len == 0.0 { a } else { a.lerp(b, s / len) };
        }
        s -= len;
    }
    waypoints[0]
}

/// Planar pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Point2,
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
    pub radius: f64,
}

impl RobotState {
    pub fn at(pose: Pose, radius: f64) -> Self {
        Self {
            position: pose.position,
            heading: pose.heading,
            v: 0.0,
            omega: 0.0,
            radius,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            heading: self.heading,
        }
    }

    /// Express a world point in the robot frame.
    pub fn to_local(&self, world: Point2) -> Point2 {
        world.sub(self.position).rotate(-self.heading)
    }

    pub fn to_world(&self, local: Point2) -> Point2 {
        local.rotate(self.heading).add(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for RobotLimits {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 0.7,
            omega_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub v: f64,
    pub omega: f64,
}

impl ControlCommand {
    pub const STOP: ControlCommand = ControlCommand { v: 0.0, omega: 0.0 };

    pub fn clamped(self, limits: &RobotLimits) -> Self {
        Self {
            v: self.v.clamp(limits.v_min, limits.v_max),
            omega: self.omega.clamp(-limits.omega_max, limits.omega_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticMap {
    pub name: String,
    pub grid: GridMap,
    pub start: Pose,
    pub locations: Vec<NamedLocation>,
    pub objects: Vec<WorldObject>,
}

impl SemanticMap {
    pub fn location(&self, name: &str) -> Option<&NamedLocation> {
        self.locations.iter().find(|l| l.name == name)
    }

    /// Check every invariant and list all violations.
    pub fn validate(&self) -> Result<(), WorldError> {
        let mut bad = Vec::new();
        let g = &self.grid;
        if !(g.resolution > 0.0 && g.resolution.is_finite()) {
            bad.push(format!("resolution must be positive, got {}", g.resolution));
        }
        if g.cells.len() != g.width * g.height {
            bad.push(format!(
                "grid has {} cells, expected {}x{}",
                g.cells.len(),
                g.width,
                g.height
            ));
        }
        if !bad.is_empty() {
            return Err(WorldError::Invalid(bad));
        }
        if !g.is_free_at(self.start.position) {
            bad.push(format!("start pose {:?} is not on a free cell", self.start.position));
        }
        let mut names = std::collections::HashSet::new();
        for loc in &self.locations {
            if !names.insert(loc.name.as_str()) {
                bad.push(format!("duplicate location name {:?}", loc.name));
            }
            if !g.is_free_at(loc.position) {
                bad.push(format!("location {:?} is not on a free cell", loc.name));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id) {
                bad.push(format!("duplicate object id {}", obj.id));
            }
            if !(obj.radius > 0.0 && obj.radius.is_finite()) {
                bad.push(format!("object {} radius must be positive", obj.id));
            }
            match &obj.motion {
                Motion::Static => {}
                Motion::WaypointLoop { waypoints, speed } => {
                    if waypoints.is_empty() {
                        bad.push(format!("object {} has no waypoints", obj.id));
                    }
                    if !(*speed >= 0.0 && speed.is_finite()) {
                        bad.push(format!("object {} speed must be non-negative", obj.id));
                    }
                    for (i, w) in waypoints.iter().enumerate() {
                        if !g.is_free_at(*w) {
                            bad.push(format!("object {} waypoint {i} is not on a free cell", obj.id));
                        } else if !g.segment_is_free(*w, waypoints[(i + 1) % waypoints.len()]) {
                            bad.push(format!("object {} loop leg {i} crosses a non-free cell", obj.id));
                        }
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(WorldError::Invalid(bad))
        }
    }
}
