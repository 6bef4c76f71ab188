use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::{EgoState, Road, Vehicle, VehicleGeometry, WorldState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub seed: u64,
    pub vehicle_count: usize,
    /// Longitudinal spawn window relative to the ego [m].
    pub spawn_x: (f64, f64),
    /// Minimum center distance between vehicles sharing a lane [m].
    pub min_gap: f64,
    /// Initial (and desired) speed range of surrounding vehicles [m/s].
    pub speed: (f64, f64),
    pub ego_speed: f64,
    pub duration: f64,
    pub dt: f64,
    pub road: Road,
    pub geometry: VehicleGeometry,
    pub max_attempts: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            vehicle_count: 12,
            spawn_x: (-40.0, 160.0),
            min_gap: 15.0,
            speed: (18.0, 24.0),
            ego_speed: 22.0,
            duration: 50.0,
            dt: 0.05,
            road: Road::default(),
            geometry: VehicleGeometry::default(),
            max_attempts: 10_000,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration > 0.0
            && self.dt > 0.0
            && self.min_gap >= self.geometry.length
            && self.geometry.length > 0.0
            && self.geometry.width > 0.0
            && self.road.lane_count >= 1
            && self.road.lane_width > 0.0
            && self.spawn_x.0 < self.spawn_x.1
            && 0.0 < self.speed.0
            && self.speed.0 <= self.speed.1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("episode config {self:?}")))
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Seeded initial world: ego at `x = 0` in a random lane, surrounding
/// vehicles at random lanes and positions with no two in the same lane
/// closer than `min_gap`.
pub fn spawn_episode(cfg: &EpisodeConfig) -> Result<WorldState> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lanes = cfg.road.lane_count;
    let ego_lane = rng.random_range(0..lanes);
    // Occupied (lane, x) slots, ego first.
    let mut slots: Vec<(usize, f64)> = vec![(ego_lane, 0.0)];
    let mut vehicles = Vec::with_capacity(cfg.vehicle_count);
    let mut attempts = 0;
    while vehicles.len() < cfg.vehicle_count {
        attempts += 1;
        if attempts > cfg.max_attempts {
            return Err(Error::SpawnFailure(cfg.max_attempts));
        }
        let lane = rng.random_range(0..lanes);
        let x = rng.random_range(cfg.spawn_x.0..cfg.spawn_x.1);
        let speed = rng.random_range(cfg.speed.0..=cfg.speed.1);
        if slots.iter().any(|&(l, sx)| l == lane && (sx - x).abs() < cfg.min_gap) {
            continue;
        }
        slots.push((lane, x));
        vehicles.push(Vehicle {
            id: vehicles.len() + 1,
            lane,
            x,
            y: cfg.road.center(lane),
            v: speed,
            v_desired: speed,
        });
    }
    Ok(WorldState {
        time: 0.0,
        ego: EgoState::new(0.0, cfg.road.center(ego_lane), 0.0, cfg.ego_speed),
        vehicles,
        road: cfg.road,
        geometry: cfg.geometry,
    })
}
