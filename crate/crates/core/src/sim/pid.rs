//! Lane- and speed-tracking baseline controller driven by the extended
//! command set. It enforces no safety constraint.

use serde::{Deserialize, Serialize};

use super::world::WorldState;
use crate::assigner::TaskCommand;
use crate::ocp::{ControlInput, InputBox};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidConfig {
    /// Natural frequency of the closed lateral loop [rad/s].
    pub omega_n: f64,
    pub zeta: f64,
    pub speed_kp: f64,
    pub speed_ki: f64,
    /// Setpoint change of FASTER / SLOWER [m/s].
    pub speed_step: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self {
            omega_n: 3.0,
            zeta: 1.0,
            speed_kp: 1.0,
            speed_ki: 0.1,
            speed_step: 5.0,
            speed_min: 15.0,
            speed_max: 30.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PidController {
    pub cfg: PidConfig,
    pub wheelbase: f64,
    pub limits: InputBox,
    pub target_lane: usize,
    pub speed_setpoint: f64,
    integral: f64,
}

impl PidController {
    pub fn new(cfg: PidConfig, wheelbase: f64, limits: InputBox, lane: usize, speed: f64) -> Self {
        Self { cfg, wheelbase, limits, target_lane: lane, speed_setpoint: speed, integral: 0.0 }
    }

    /// Applies a new command: lane commands move the target lane by one,
    /// speed commands step the setpoint.
    pub fn command(&mut self, cmd: TaskCommand, world: &WorldState) {
        let road = &world.road;
        match cmd {
            TaskCommand::LaneLeft => self.target_lane = road.left_of(self.target_lane).unwrap_or(self.target_lane),
            TaskCommand::LaneRight => self.target_lane = road.right_of(self.target_lane).unwrap_or(self.target_lane),
            TaskCommand::Faster => {
                self.speed_setpoint = (self.speed_setpoint + self.cfg.speed_step).min(self.cfg.speed_max)
            }
            TaskCommand::Slower => {
                self.speed_setpoint = (self.speed_setpoint - self.cfg.speed_step).max(self.cfg.speed_min)
            }
            TaskCommand::Idle => {}
        }
    }

    pub fn target_y(&self, world: &WorldState) -> f64 {
        world.road.center(self.target_lane)
    }

    /// Control input for the current world state.
    pub fn control(&mut self, world: &WorldState, dt: f64) -> ControlInput {
        let ego = &world.ego;
        let v = ego.v.max(1.0);
        let (wn, l) = (self.cfg.omega_n, self.wheelbase);
        let k_y = wn * wn * l / (v * v);
        let k_theta = 2.0 * self.cfg.zeta * wn * l / v;
        let e_y = self.target_y(world) - ego.y;
        let delta = k_y * e_y - k_theta * ego.theta;

        let e_v = self.speed_setpoint - ego.v;
        let a_raw = self.cfg.speed_kp * e_v + self.cfg.speed_ki * self.integral;
        let u = self.limits.clamp(ControlInput::new(a_raw, delta));
        // Integrate only while unsaturated.
        if (u.a - a_raw).abs() < 1e-12 {
            self.integral += e_v * dt;
        }
        u
    }
}
