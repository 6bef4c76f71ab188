use serde::{Deserialize, Serialize};

use super::{PlanOutput, Planner, PlannerFeedback};
use crate::assigner::TaskCommand;
use crate::error::Result;
use crate::sim::WorldState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecklessConfig {
    /// An adjacent lane counts as occupied when a vehicle in it is within
    /// this longitudinal distance of the ego [m].
    pub occupied_range: f64,
    /// Overtake a lead that is closer than this [m] and slower than the ego's
    /// reference speed.
    pub lead_range: f64,
    pub v_ref: f64,
}

impl Default for RecklessConfig {
    fn default() -> Self {
        Self { occupied_range: 15.0, lead_range: 40.0, v_ref: 25.0 }
    }
}

/// Ignores safety entirely: changes lane into an adjacent lane whenever a
/// vehicle is right beside the ego there, otherwise overtakes slow leads.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecklessPlanner {
    pub cfg: RecklessConfig,
}

impl RecklessPlanner {
    pub fn new(cfg: RecklessConfig) -> Self {
        Self { cfg }
    }

    fn adjacent(world: &WorldState) -> [(TaskCommand, Option<usize>); 2] {
        let lane = world.ego_lane();
        [(TaskCommand::LaneLeft, world.road.left_of(lane)), (TaskCommand::LaneRight, world.road.right_of(lane))]
    }

    fn occupied(&self, world: &WorldState, lane: usize) -> bool {
        world.vehicles.iter().any(|v| v.lane == lane && (v.x - world.ego.x).abs() <= self.cfg.occupied_range)
    }
}

impl Planner for RecklessPlanner {
    fn plan(&mut self, world: &WorldState, _feedback: Option<&PlannerFeedback>) -> Result<PlanOutput> {
        for (cmd, lane) in Self::adjacent(world) {
            if let Some(lane) = lane.filter(|l| self.occupied(world, *l)) {
                return Ok(PlanOutput::simple(cmd, format!("lane {lane} is occupied beside me, cutting in")));
            }
        }
        let lead = world.lead_in_lane(world.ego_lane());
        if let Some(lead) = lead {
            if lead.x - world.ego.x < self.cfg.lead_range && lead.v < self.cfg.v_ref {
                let choice = Self::adjacent(world).into_iter().find(|(_, l)| l.is_some());
                if let Some((cmd, _)) = choice {
                    return Ok(PlanOutput::simple(cmd, format!("overtaking slow vehicle {}", lead.id)));
                }
            }
        }
        Ok(PlanOutput::simple(TaskCommand::Idle, "road ahead is clear"))
    }
}
