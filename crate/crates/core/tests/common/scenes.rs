//! Hand-built worlds for closed-loop scenarios.

use mpc_builder::assigner::TaskCommand;
use mpc_builder::harness::{run_episode_from, Config, EpisodeOutcome, PipelineKind};
use mpc_builder::planner::ScriptedPlanner;
use mpc_builder::sim::{EgoState, Road, Vehicle, VehicleGeometry, WorldState};

pub fn empty_road(lane: usize, speed: f64) -> WorldState {
    let road = Road::default();
    WorldState {
        time: 0.0,
        ego: EgoState::new(0.0, road.center(lane), 0.0, speed),
        vehicles: Vec::new(),
        road,
        geometry: VehicleGeometry::default(),
    }
}

/// Ego in the rightmost lane with a car driving alongside in the lane to
/// its left, at the same speed, so a left lane change runs into it.
pub fn occupied_left() -> WorldState {
    let mut w = empty_road(0, 22.0);
    let road = w.road;
    w.vehicles.push(Vehicle { id: 1, lane: 1, x: 2.0, y: road.center(1), v: 22.0, v_desired: 22.0 });
    w
}

pub fn scripted(kind: PipelineKind, cfg: &Config, world: WorldState, script: Vec<TaskCommand>) -> EpisodeOutcome {
    run_episode_from(kind, cfg, 0, world, Box::new(ScriptedPlanner::new(script))).unwrap()
}
