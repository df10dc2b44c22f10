use super::costmap::Costmap;
use super::PlannerConfig;
use crate::geometry::{project_onto_segment, wrap_angle, Circle, Point2};
use crate::world::{ControlCommand, RobotLimits, RobotState};
use std::f64::consts::{FRAC_PI_3, SQRT_2};

/// Everything the velocity selector looks at. All positions are world frame.
pub struct ReactiveInput<'a> {
    pub path: &'a [Point2],
    pub robot: &'a RobotState,
    pub costmap: &'a Costmap,
    /// Physical extents of detected objects.
    pub obstacles: &'a [Circle],
    /// Constraint disks the robot center must stay out of.
    pub keep_out: &'a [Circle],
    pub limits: &'a RobotLimits,
}

/// Poses visited when holding `cmd` for `horizon` seconds, integrated the
/// same way as the simulator (rotate, then advance).
pub fn rollout(robot: &RobotState, cmd: ControlCommand, horizon: f64, dt: f64) -> Vec<(Point2, f64)> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    let mut p = robot.position;
    let mut th = robot.heading;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        th = wrap_angle(th + cmd.omega * dt);
        p = Point2::new(p.x + cmd.v * dt * th.cos(), p.y + cmd.v * dt * th.sin());
        out.push((p, th));
    }
    out
}

/// Safety margins at `p` (negative means violated): static obstacles,
/// detected objects, constraint disks.
fn margins(input: &ReactiveInput, cfg: &PlannerConfig, p: Point2) -> [f64; 3] {
    let cm = input.costmap;
    let r = input.robot.radius;
    let stat = cm.obstacle_distance_at(p) - SQRT_2 * cm.resolution - (r + cfg.safety_margin);
    let obj = input
        .obstacles
        .iter()
        .map(|o| p.dist(o.center) - (r + o.radius + cfg.object_margin))
        .fold(f64::INFINITY, f64::min);
    let keep = input
        .keep_out
        .iter()
        .map(|d| p.dist(d.center) - d.radius)
        .fold(f64::INFINITY, f64::min);
    [stat, obj, keep]
}

/// Point at arc length `s` past the projection of `p` onto the path.
pub(super) fn point_ahead(path: &[Point2], p: Point2, s: f64) -> Point2 {
    if path.len() == 1 {
        return path[0];
    }
    let mut best = (f64::INFINITY, 0usize, 0.0);
    for (i, w) in path.windows(2).enumerate() {
        let (q, t) = project_onto_segment(p, w[0], w[1]);
        let d = q.dist_sq(p);
        if d < best.0 {
            best = (d, i, t);
        }
    }
    let (_, mut i, t) = best;
    let mut remaining = s + t * path[i].dist(path[i + 1]);
    while i + 1 < path.len() {
        let len = path[i].dist(path[i + 1]);
        if remaining <= len {
            return path[i].lerp(path[i + 1], if len > 0.0 { remaining / len } else { 0.0 });
        }
        remaining -= len;
        i += 1;
    }
    *path.last().unwrap()
}

/// Grid search over `(v, omega)`. A sample is safe when its whole rollout
/// keeps every margin non-negative, or, for a margin already violated at
/// the current pose, never lets it get worse. Turning in place is only
/// considered when the target lies well off the current heading or the
/// robot is already in violation. Returns a stop when nothing is safe.
pub fn reactive_avoid(input: &ReactiveInput, cfg: &PlannerConfig) -> ControlCommand {
    let robot = input.robot;
    if input.path.is_empty() {
        return ControlCommand::STOP;
    }
    let reach = input.limits.v_max * cfg.control_horizon;
    let target = point_ahead(input.path, robot.position, reach);
    let aim = point_ahead(input.path, robot.position, reach + 0.5);
    let now = margins(input, cfg, robot.position);
    let escaping = now.iter().any(|&m| m < 0.0);
    let bearing = wrap_angle(target.sub(robot.position).y.atan2(target.sub(robot.position).x) - robot.heading);
    let allow_spin = escaping || (target.dist(robot.position) > 1e-6 && bearing.abs() > FRAC_PI_3);

    let nv = cfg.v_samples;
    let nw = cfg.omega_samples;
    let mut best: Option<(f64, ControlCommand)> = None;
    for i in 0..nv {
        let v = input.limits.v_min + (input.limits.v_max - input.limits.v_min) * i as f64 / (nv - 1) as f64;
        if v == 0.0 && !allow_spin {
            continue;
        }
        for j in 0..nw {
            let omega = -input.limits.omega_max + 2.0 * input.limits.omega_max * j as f64 / (nw - 1) as f64;
            let cmd = ControlCommand { v, omega };
            let poses = rollout(robot, cmd, cfg.control_horizon, cfg.control_dt);
            let safe = poses.iter().all(|&(p, _)| {
                margins(input, cfg, p)
                    .iter()
                    .zip(&now)
                    .all(|(&m, &m0)| m >= 0.0 || (m0 < 0.0 && m >= m0))
            });
            if !safe {
                continue;
            }
            let (end, th) = *poses.last().unwrap();
            let to_aim = aim.sub(end);
            let heading_err = if to_aim.norm() > 1e-6 {
                wrap_angle(to_aim.y.atan2(to_aim.x) - th).abs()
            } else {
                0.0
            };
            let score = end.dist(target) + 0.2 * heading_err;
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, cmd));
            }
        }
    }
    best.map_or(ControlCommand::STOP, |(_, c)| c)
}
