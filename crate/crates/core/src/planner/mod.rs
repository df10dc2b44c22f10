//! Global RRT, local costmap with constraint disks, exact-cost A*, a
//! sampling velocity controller, and the per-tick navigation loop.

mod astar;
mod constraints;
mod costmap;
mod edt;
mod nav;
mod reactive;
mod rrt;
mod trace;

pub use astar::{plan_local_astar, search_cells, CellPath, PathCost};
pub use constraints::{update_constraints, ConstraintStore};
pub use costmap::{build_costmap, costmap_window, disk_contains, inflation_cost, Costmap, INSCRIBED, LETHAL};
pub use edt::squared_distance_transform;
pub use nav::{
    navigation_step, path_metrics, select_intermediate_goal, NavConfig, NavState, NavStatus, PathMetrics, TraceRecord, TrackedObject,
};
pub use reactive::{reactive_avoid, rollout, ReactiveInput};
pub use rrt::{clearance_field, plan_global_rrt, plan_global_rrt_avoiding};
pub use trace::{read_trace, write_trace, TraceLine, TRACE_SCHEMA};

use crate::geometry::{polyline_length, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("no path found after {iterations} iterations")]
    PlanningFailed { iterations: usize },
    #[error("no path in costmap")]
    NoPath,
    #[error("goal unreachable: {0}")]
    Unreachable(String),
    #[error("invalid planner config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, PlannerError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Constraint disk radius `a`.
    pub disk_radius: f64,
    /// Extra radius for disks around moving objects.
    pub moving_margin: f64,
    /// Seconds an unseen moving-object disk survives.
    pub moving_timeout: f64,
    pub robot_radius: f64,
    pub inflation_radius: f64,
    pub inflation_decay: f64,
    /// Side of the square costmap window, meters.
    pub window_size: f64,
    pub rrt_step: f64,
    pub rrt_goal_bias: f64,
    pub rrt_max_iterations: usize,
    pub rrt_shortcut_attempts: usize,
    /// Required distance between RRT samples and non-free cells.
    pub rrt_clearance: f64,
    pub seed: u64,
    /// 4 or 8.
    pub connectivity: u8,
    pub lookahead: f64,
    pub goal_tolerance: f64,
    /// Extra distance kept between the robot body and static obstacles.
    pub safety_margin: f64,
    /// Extra distance kept between the robot body and detected objects.
    pub object_margin: f64,
    pub control_horizon: f64,
    pub control_dt: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            disk_radius: 0.5,
            moving_margin: 0.2,
            moving_timeout: 3.0,
            robot_radius: 0.2,
            inflation_radius: 0.6,
            inflation_decay: 3.0,
            window_size: 6.0,
            rrt_step: 0.4,
            rrt_goal_bias: 0.1,
            rrt_max_iterations: 20_000,
            rrt_shortcut_attempts: 200,
            rrt_clearance: 0.3,
            seed: 0,
            connectivity: 8,
            lookahead: 2.0,
            goal_tolerance: 0.25,
            safety_margin: 0.02,
            object_margin: 0.1,
            control_horizon: 1.0,
            control_dt: 0.1,
            v_samples: 8,
            omega_samples: 15,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("disk_radius", self.disk_radius),
            ("robot_radius", self.robot_radius),
            ("inflation_radius", self.inflation_radius),
            ("inflation_decay", self.inflation_decay),
            ("window_size", self.window_size),
            ("rrt_step", self.rrt_step),
            ("lookahead", self.lookahead),
            ("goal_tolerance", self.goal_tolerance),
            ("moving_timeout", self.moving_timeout),
            ("control_horizon", self.control_horizon),
            ("control_dt", self.control_dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlannerError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("moving_margin", self.moving_margin),
            ("rrt_clearance", self.rrt_clearance),
            ("safety_margin", self.safety_margin),
            ("object_margin", self.object_margin),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PlannerError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.rrt_goal_bias) {
            return Err(PlannerError::Config("rrt_goal_bias must lie in [0, 1]".into()));
        }
        if self.connectivity != 4 && self.connectivity != 8 {
            return Err(PlannerError::Config("connectivity must be 4 or 8".into()));
        }
        if self.rrt_max_iterations == 0 || self.v_samples < 2 || self.omega_samples < 2 {
            return Err(PlannerError::Config("iteration and sample counts too small".into()));
        }
        Ok(())
    }
}

/// The region `(x - x0)^2 + (y - y0)^2 <= a^2` marked lethal around a
/// grounded constraint object, world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDisk {
    pub object_id: u32,
    pub label: String,
    pub center: Point2,
    pub radius: f64,
    pub moving: bool,
    pub last_seen: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalPath {
    pub waypoints: Vec<Point2>,
    pub length: f64,
}

impl GlobalPath {
    pub fn new(waypoints: Vec<Point2>) -> Self {
        let length = polyline_length(&waypoints);
        Self { waypoints, length }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPath {
    /// Cell centers, world frame.
    pub waypoints: Vec<Point2>,
    pub length: f64,
    /// Traversal cost in meters (step length times `1 + cost / 128`).
    pub cost: f64,
}
