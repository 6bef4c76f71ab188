//! Intelligent Driver Model car following.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    /// Maximum acceleration [m/s²].
    pub a_max: f64,
    /// Comfortable deceleration [m/s²].
    pub b: f64,
    /// Minimum bumper-to-bumper gap [m].
    pub s0: f64,
    /// Desired time headway [s].
    pub headway: f64,
    pub delta: f64,
    /// Hard braking limit [m/s²], negative.
    pub a_min: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { a_max: 3.0, b: 5.0, s0: 5.0, headway: 1.5, delta: 4.0, a_min: -9.0 }
    }
}

impl IdmParams {
    /// Acceleration for speed `v` with desired speed `v0`, optionally behind a
    /// leader at bumper gap `gap` moving at `v_lead`.
    pub fn accel(&self, v: f64, v0: f64, leader: Option<(f64, f64)>) -> f64 {
        let free = 1.0 - (v / v0.max(0.1)).powf(self.delta);
        let interaction = match leader {
            Some((gap, v_lead)) => {
                let dv = v - v_lead;
                let s_star = self.s0 + (v * self.headway + v * dv / (2.0 * (self.a_max * self.b).sqrt())).max(0.0);
                (s_star / gap.max(0.1)).powi(2)
            }
            None => 0.0,
        };
        (self.a_max * (free - interaction)).clamp(self.a_min, self.a_max)
    }
}
