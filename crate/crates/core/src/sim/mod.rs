//! Deterministic highway world: ego integration, IDM traffic, collisions,
//! the PID baseline controller and seeded episode spawning.

mod collision;
mod idm;
mod pid;
mod spawn;
mod world;

pub use collision::{detect_collision, overlaps, Footprint};
pub use idm::IdmParams;
pub use pid::{PidConfig, PidController};
pub use spawn::{spawn_episode, EpisodeConfig};
pub use world::{EgoState, Road, Vehicle, VehicleGeometry, WorldState};

use crate::ocp::ControlInput;

/// Bumper-to-bumper gap between a follower at `x_back` and a leader at
/// `x_front`, both of length `length`.
fn bumper_gap(x_front: f64, x_back: f64, length: f64) -> f64 {
    x_front - x_back - length
}

/// Whether the ego footprint reaches into `lane` far enough to be followed.
fn ego_occupies(world: &WorldState, lane: usize) -> bool {
    let reach = (world.road.lane_width + world.geometry.width) / 2.0;
    (world.ego.y - world.road.center(lane)).abs() < reach
}

/// Advances the world by `dt`: the ego by a kinematic-bicycle Euler step under
/// `ego_input`, every other vehicle by IDM along its lane.
pub fn step_world(world: &WorldState, ego_input: ControlInput, wheelbase: f64, idm: &IdmParams, dt: f64) -> WorldState {
    let len = world.geometry.length;
    let vehicles = world
        .vehicles
        .iter()
        .map(|v| {
            let mut leader: Option<(f64, f64)> = None;
            let mut consider = |x: f64, speed: f64| {
                if x > v.x && leader.is_none_or(|(lx, _)| x < lx) {
                    leader = Some((x, speed));
                }
            };
            for o in &world.vehicles {
                if o.id != v.id && o.lane == v.lane {
                    consider(o.x, o.v);
                }
            }
            if ego_occupies(world, v.lane) {
                consider(world.ego.x, world.ego.v * world.ego.theta.cos());
            }
            let a = idm.accel(v.v, v.v_desired, leader.map(|(x, s)| (bumper_gap(x, v.x, len), s)));
            Vehicle { x: v.x + v.v * dt, v: (v.v + a * dt).max(0.0), ..*v }
        })
        .collect();
    WorldState {
        time: world.time + dt,
        ego: world.ego.step(ego_input, wheelbase, dt),
        vehicles,
        road: world.road,
        geometry: world.geometry,
    }
}
