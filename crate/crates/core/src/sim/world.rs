use serde::{Deserialize, Serialize};

use crate::ocp::{ControlInput, StateSource};
use crate::primitives::{kbm_yaw_rate, pv_prefix, Observed, PvState};

/// Straight multi-lane road. Lane 0 is the rightmost lane, centered at
/// `y = 0`; lane `i` is centered at `i·lane_width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Road {
    pub lane_count: usize,
    pub lane_width: f64,
}

impl Default for Road {
    fn default() -> Self {
        Self { lane_count: 3, lane_width: 4.0 }
    }
}

impl Road {
    pub fn center(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.lane_count).map(|l| self.center(l)).collect()
    }

    /// Lane whose center is closest to `y`.
    pub fn lane_of(&self, y: f64) -> usize {
        let l = (y / self.lane_width).round();
        l.clamp(0.0, (self.lane_count - 1) as f64) as usize
    }

    /// Road edges `(y_min, y_max)`.
    pub fn edges(&self) -> (f64, f64) {
        let half = self.lane_width / 2.0;
        (-half, self.center(self.lane_count - 1) + half)
    }

    pub fn left_of(&self, lane: usize) -> Option<usize> {
        (lane + 1 < self.lane_count).then_some(lane + 1)
    }

    pub fn right_of(&self, lane: usize) -> Option<usize> {
        lane.checked_sub(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleGeometry {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self { length: 5.0, width: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl EgoState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta, v }
    }

    /// Explicit-Euler kinematic bicycle step; speed never goes negative.
    pub fn step(&self, u: ControlInput, wheelbase: f64, dt: f64) -> Self {
        Self {
            x: self.x + self.v * self.theta.cos() * dt,
            y: self.y + self.v * self.theta.sin() * dt,
            theta: self.theta + kbm_yaw_rate(self.v, u.delta, wheelbase) * dt,
            v: (self.v + u.a * dt).max(0.0),
        }
    }
}

/// A surrounding vehicle. It keeps its lane and moves along `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    pub lane: usize,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    /// IDM desired speed.
    pub v_desired: f64,
}

impl Vehicle {
    pub fn pv_state(&self) -> PvState {
        PvState::new(self.x, self.y, self.v, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    pub ego: EgoState,
    pub vehicles: Vec<Vehicle>,
    pub road: Road,
    pub geometry: VehicleGeometry,
}

impl WorldState {
    pub fn ego_lane(&self) -> usize {
        self.road.lane_of(self.ego.y)
    }

    pub fn vehicle(&self, id: usize) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn observe(&self, v: &Vehicle) -> Observed {
        Observed::new(v.pv_state(), self.time)
    }

    /// Nearest vehicle in `lane` strictly ahead of the ego.
    pub fn lead_in_lane(&self, lane: usize) -> Option<&Vehicle> {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane && v.x > self.ego.x)
            .min_by(|a, b| a.x.total_cmp(&b.x).then(a.id.cmp(&b.id)))
    }

    /// Nearest vehicle in `lane` at or behind the ego.
    pub fn follower_in_lane(&self, lane: usize) -> Option<&Vehicle> {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane && v.x <= self.ego.x)
            .max_by(|a, b| a.x.total_cmp(&b.x).then(b.id.cmp(&a.id)))
    }
}

/// Measurements by state name: ego `x, y, theta, v` and `pv{id}.x/.y/.vx/.vy`.
impl StateSource for WorldState {
    fn value(&self, name: &str) -> Option<f64> {
        match name {
            "x" => return Some(self.ego.x),
            "y" => return Some(self.ego.y),
            "theta" => return Some(self.ego.theta),
            "v" => return Some(self.ego.v),
            _ => {}
        }
        let (prefix, field) = name.split_once('.')?;
        let id: usize = prefix.strip_prefix("pv")?.parse().ok()?;
        if pv_prefix(id) != prefix {
            return None;
        }
        let s = self.vehicle(id)?.pv_state();
        match field {
            "x" => Some(s.x),
            "y" => Some(s.y),
            "vx" => Some(s.vx),
            "vy" => Some(s.vy),
            _ => None,
        }
    }
}
