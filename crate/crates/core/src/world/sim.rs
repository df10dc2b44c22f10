use super::{
    loop_length, point_on_loop, Cell, ControlCommand, GridMap, Motion, RobotLimits, RobotState, SemanticMap,
    WorldObject,
};
use crate::geometry::{wrap_angle, Point2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub range: f64,
    /// Full field of view, radians.
    pub fov: f64,
    pub rate_hz: f64,
    /// Standard deviation of Gaussian position noise, meters. Zero disables it.
    pub noise_std: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            range: 5.0,
            fov: 120f64.to_radians(),
            rate_hz: 10.0,
            noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: u32,
    pub label: String,
    /// Robot-frame position, meters.
    pub position: Point2,
    pub radius: f64,
    pub moving: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

/// Range, field-of-view and line-of-sight test against the object center.
pub fn visible(from: &RobotState, obj: &WorldObject, grid: &GridMap, sensor: &SensorConfig) -> bool {
    let d = from.position.dist(obj.position);
    if d > sensor.range {
        return false;
    }
    if d > 0.0 {
        let to = obj.position.sub(from.position);
        let bearing = wrap_angle(to.y.atan2(to.x) - from.heading);
        if bearing.abs() > sensor.fov / 2.0 {
            return false;
        }
    }
    grid.cells_on_segment(from.position, obj.position)
        .into_iter()
        .all(|c| grid.cell(c) != Cell::Obstacle)
}

/// Noise-free detection frame of every visible object.
pub fn sense_objects(state: &RobotState, map: &SemanticMap, t: f64, sensor: &SensorConfig) -> DetectionFrame {
    let detections = map
        .objects
        .iter()
        .filter(|o| visible(state, o, &map.grid, sensor))
        .map(|o| Detection {
            object_id: o.id,
            label: o.label.clone(),
            position: state.to_local(o.position),
            radius: o.radius,
            moving: o.is_moving(),
        })
        .collect();
    DetectionFrame {
        timestamp: t,
        detections,
    }
}

/// Like [`sense_objects`] with Gaussian position noise of `sensor.noise_std`.
pub fn sense_objects_noisy(
    state: &RobotState,
    map: &SemanticMap,
    t: f64,
    sensor: &SensorConfig,
    rng: &mut impl Rng,
) -> DetectionFrame {
    let mut frame = sense_objects(state, map, t, sensor);
    if sensor.noise_std > 0.0 {
        let normal = Normal::new(0.0, sensor.noise_std).expect("finite std");
        for d in &mut frame.detections {
            d.position.x += normal.sample(rng);
            d.position.y += normal.sample(rng);
        }
    }
    frame
}

/// Advance every waypoint-loop object by `speed * dt` along its loop.
pub fn step_world(objects: &mut [WorldObject], dt: f64) {
    for obj in objects.iter_mut() {
        if let Motion::WaypointLoop { waypoints, speed } = &obj.motion {
            let total = loop_length(waypoints);
            if total > 0.0 {
                obj.phase = (obj.phase + speed * dt).rem_euclid(total);
                obj.position = point_on_loop(waypoints, obj.phase);
            }
        }
    }
}

/// Whether a disk robot at `position` overlaps a non-free cell or an object.
pub fn robot_collides(position: Point2, radius: f64, grid: &GridMap, objects: &[WorldObject]) -> bool {
    if objects.iter().any(|o| o.position.dist(position) < radius + o.radius) {
        return true;
    }
    let res = grid.resolution;
    let lo = grid.world_to_cell(Point2::new(position.x - radius, position.y - radius));
    let hi = grid.world_to_cell(Point2::new(position.x + radius, position.y + radius));
    for cy in lo.1..=hi.1 {
        for cx in lo.0..=hi.0 {
            if grid.cell((cx, cy)) == Cell::Free {
                continue;
            }
            let min_x = grid.origin.x + cx as f64 * res;
            let min_y = grid.origin.y + cy as f64 * res;
            let nx = position.x.clamp(min_x, min_x + res);
            let ny = position.y.clamp(min_y, min_y + res);
            if Point2::new(nx, ny).dist_sq(position) < radius * radius {
                return true;
            }
        }
    }
    false
}

/// Unicycle update: rotate first, then advance along the new heading.
/// Returns the new state and whether it collides.
pub fn apply_control(
    state: &RobotState,
    cmd: ControlCommand,
    dt: f64,
    limits: &RobotLimits,
    map: &SemanticMap,
) -> (RobotState, bool) {
    let cmd = cmd.clamped(limits);
    let heading = wrap_angle(state.heading + cmd.omega * dt);
    let position = Point2::new(
        state.position.x + cmd.v * dt * heading.cos(),
        state.position.y + cmd.v * dt * heading.sin(),
    );
    let next = RobotState {
        position,
        heading,
        v: cmd.v,
        omega: cmd.omega,
        radius: state.radius,
    };
    let hit = robot_collides(position, state.radius, &map.grid, &map.objects);
    (next, hit)
}
