use super::{ConstraintDisk, PlannerConfig};
use crate::grounding::ConstraintGrounding;
use crate::world::RobotState;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Grounded constraint disks keyed by object id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintStore {
    pub disks: BTreeMap<u32, ConstraintDisk>,
}

impl ConstraintStore {
    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    pub fn to_vec(&self) -> Vec<ConstraintDisk> {
        self.disks.values().cloned().collect()
    }

    pub fn clear(&mut self) {
        self.disks.clear();
    }
}

/// Fold robot-local groundings into the world-frame disk store, then drop
/// moving-object disks unseen for longer than the timeout.
pub fn update_constraints(
    store: &mut ConstraintStore,
    groundings: &[ConstraintGrounding],
    robot: &RobotState,
    t: f64,
    cfg: &PlannerConfig,
) {
    for g in groundings {
        let radius = cfg.disk_radius + if g.moving { cfg.moving_margin } else { 0.0 };
        store.disks.insert(
            g.object_id,
            ConstraintDisk {
                object_id: g.object_id,
                label: g.label.clone(),
                center: robot.to_world(g.position),
                radius,
                moving: g.moving,
                last_seen: t,
            },
        );
    }
    store
        .disks
        .retain(|_, d| !d.moving || t - d.last_seen <= cfg.moving_timeout);
}
