//! Rule-based mapping from a task command and the current world to the
//! primitive set of the target OCP.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{build_ocp, MpcPrimitive, Ocp};
use crate::primitives::{
    make_acc, make_constant_speed, make_kbm, make_lane_change, make_lane_keep, make_pv_safety, EgoParams, LcGap,
    TaskParams,
};
use crate::sim::{Road, Vehicle, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskCommand {
    LaneLeft,
    Idle,
    LaneRight,
    Faster,
    Slower,
}

impl TaskCommand {
    /// Commands understood by the MPC pipelines.
    pub const MPC_SET: [TaskCommand; 3] = [TaskCommand::LaneLeft, TaskCommand::Idle, TaskCommand::LaneRight];
    /// Commands understood by the PID baseline.
    pub const EXTENDED_SET: [TaskCommand; 5] =
        [TaskCommand::LaneLeft, TaskCommand::Idle, TaskCommand::LaneRight, TaskCommand::Faster, TaskCommand::Slower];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskCommand::LaneLeft => "LANE_LEFT",
            TaskCommand::Idle => "IDLE",
            TaskCommand::LaneRight => "LANE_RIGHT",
            TaskCommand::Faster => "FASTER",
            TaskCommand::Slower => "SLOWER",
        }
    }

    pub fn is_lane_change(&self) -> bool {
        matches!(self, TaskCommand::LaneLeft | TaskCommand::LaneRight)
    }
}

impl fmt::Display for TaskCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskCommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskCommand::EXTENDED_SET
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnsupportedCommand(s.to_string()))
    }
}

/// A lateral task pinned to absolute lanes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LateralGoal {
    Keep { lane: usize },
    Change { from: usize, to: usize },
}

impl LateralGoal {
    pub fn target_lane(&self) -> usize {
        match *self {
            LateralGoal::Keep { lane } => lane,
            LateralGoal::Change { to, .. } => to,
        }
    }

    pub fn is_change(&self) -> bool {
        matches!(self, LateralGoal::Change { .. })
    }
}

/// Resolves a command relative to the ego's current lane.
pub fn resolve(cmd: TaskCommand, world: &WorldState) -> Result<LateralGoal> {
    let lane = world.ego_lane();
    match cmd {
        TaskCommand::Idle => Ok(LateralGoal::Keep { lane }),
        TaskCommand::LaneLeft => world
            .road
            .left_of(lane)
            .map(|to| LateralGoal::Change { from: lane, to })
            .ok_or(Error::NoAdjacentLane("left", lane)),
        TaskCommand::LaneRight => world
            .road
            .right_of(lane)
            .map(|to| LateralGoal::Change { from: lane, to })
            .ok_or(Error::NoAdjacentLane("right", lane)),
        other => Err(Error::UnsupportedCommand(other.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignerConfig {
    /// Longitudinal distance within which vehicles get a PV primitive or
    /// guard a lane change [m].
    pub vicinity: f64,
    pub max_pv: usize,
    /// Keep the ego body within the lanes the lateral task uses instead of
    /// bounding `y` by the road edges.
    pub lane_bounds: bool,
}

impl Default for AssignerConfig {
    fn default() -> Self {
        Self { vicinity: 60.0, max_pv: 6, lane_bounds: true }
    }
}

/// Lateral bounds of a goal. With lane bounds, the ego center stays half a
/// body width inside the outer edges of the goal's lanes, widened to contain
/// the current ordinate `y` so the task is never infeasible from the start;
/// otherwise the road-edge bounds of `ego` apply.
pub fn goal_y_bounds(
    goal: LateralGoal,
    y: f64,
    road: &Road,
    body_width: f64,
    ego: &EgoParams,
    cfg: &AssignerConfig,
) -> (f64, f64) {
    if !cfg.lane_bounds {
        return (ego.y_min, ego.y_max);
    }
    let (lo, hi) = match goal {
        LateralGoal::Keep { lane } => (lane, lane),
        LateralGoal::Change { from, to } => (from.min(to), from.max(to)),
    };
    let inset = 0.5 * (road.lane_width - body_width).max(0.0);
    let y_min = (road.center(lo) - inset).min(y).max(ego.y_min);
    let y_max = (road.center(hi) + inset).max(y).min(ego.y_max);
    (y_min, y_max)
}

fn ego_distance(world: &WorldState, v: &Vehicle) -> f64 {
    (v.x - world.ego.x).hypot(v.y - world.ego.y)
}

/// Up to `max_pv` vehicles within the vicinity, nearest first (ties by id).
pub fn select_pvs<'a>(world: &'a WorldState, cfg: &AssignerConfig) -> Vec<&'a Vehicle> {
    let mut near: Vec<&Vehicle> = world.vehicles.iter().filter(|v| (v.x - world.ego.x).abs() <= cfg.vicinity).collect();
    near.sort_by(|a, b| ego_distance(world, a).total_cmp(&ego_distance(world, b)).then(a.id.cmp(&b.id)));
    near.truncate(cfg.max_pv);
    near
}

/// Nearest neighbors ahead of and behind the ego in `lane`, within the
/// vicinity.
pub fn lane_neighbors<'a>(world: &'a WorldState, lane: usize, cfg: &AssignerConfig) -> Vec<&'a Vehicle> {
    [world.lead_in_lane(lane), world.follower_in_lane(lane)]
        .into_iter()
        .flatten()
        .filter(|v| (v.x - world.ego.x).abs() <= cfg.vicinity)
        .collect()
}

/// Primitive set for a resolved lateral goal: KBM, one lateral primitive,
/// one longitudinal primitive, then PV primitives nearest first.
pub fn assign_goal(
    goal: LateralGoal,
    world: &WorldState,
    task: &TaskParams,
    ego: &EgoParams,
    cfg: &AssignerConfig,
) -> Result<Vec<MpcPrimitive>> {
    let road = &world.road;
    let lane = goal.target_lane();
    if lane >= road.lane_count {
        return Err(Error::InvalidParameter(format!("lane {lane} outside the road")));
    }
    let lateral_task = TaskParams { y_ref: road.center(lane), ..*task };
    let (y_min, y_max) = goal_y_bounds(goal, world.ego.y, road, world.geometry.width, ego, cfg);
    let bounded = EgoParams { y_min, y_max, ..*ego };
    let lateral = match goal {
        LateralGoal::Keep { .. } => make_lane_keep(&lateral_task, &bounded)?,
        LateralGoal::Change { to, .. } => {
            let guard: Vec<_> = lane_neighbors(world, to, cfg).into_iter().map(|v| world.observe(v)).collect();
            let gap = if guard.is_empty() { LcGap::Disabled } else { LcGap::Vehicles(guard) };
            make_lane_change(&lateral_task, &bounded, gap)?
        }
    };
    let longitudinal = match world.lead_in_lane(world.ego_lane()) {
        Some(lead) if lead.x - world.ego.x <= 2.0 * task.d_acc => make_acc(task, &bounded, Some(world.observe(lead)))?,
        _ => make_constant_speed(task, &bounded)?,
    };
    let mut out = vec![make_kbm(ego)?, lateral, longitudinal];
    for v in select_pvs(world, cfg) {
        out.push(make_pv_safety(task, ego, v.id, v.pv_state())?);
    }
    Ok(out)
}

/// Primitive set for a command issued in the current world.
pub fn assign(
    cmd: TaskCommand,
    world: &WorldState,
    task: &TaskParams,
    ego: &EgoParams,
    cfg: &AssignerConfig,
) -> Result<Vec<MpcPrimitive>> {
    assign_goal(resolve(cmd, world)?, world, task, ego, cfg)
}

pub fn goal_ocp(
    goal: LateralGoal,
    world: &WorldState,
    task: &TaskParams,
    ego: &EgoParams,
    cfg: &AssignerConfig,
    horizon: usize,
    dt: f64,
) -> Result<Ocp> {
    build_ocp(&assign_goal(goal, world, task, ego, cfg)?, horizon, dt, ego.input_space())
}

pub fn target_ocp(
    cmd: TaskCommand,
    world: &WorldState,
    task: &TaskParams,
    ego: &EgoParams,
    cfg: &AssignerConfig,
    horizon: usize,
    dt: f64,
) -> Result<Ocp> {
    goal_ocp(resolve(cmd, world)?, world, task, ego, cfg, horizon, dt)
}
