//! The primitive pool for highway driving: ego kinematics, lane keep / lane
//! change, constant speed / adaptive cruise, and parallel-vehicle safety.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{
    ControlInput, Derivative, InputBox, MpcPrimitive, PrimitiveKind, PrimitiveModel, Slots, Stage, StateComponent,
};

/// Ego vehicle limits. `y_min`/`y_max` are the road edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoParams {
    pub wheelbase: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for EgoParams {
    fn default() -> Self {
        Self { wheelbase: 2.5, a_min: -5.0, a_max: 5.0, delta_min: -0.4, delta_max: 0.4, y_min: -2.0, y_max: 10.0 }
    }
}

impl EgoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.wheelbase > 0.0
            && self.a_min < self.a_max
            && self.delta_min < self.delta_max
            && self.y_min < self.y_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("ego params {self:?}")))
        }
    }

    pub fn input_space(&self) -> InputBox {
        InputBox { a_min: self.a_min, a_max: self.a_max, delta_min: self.delta_min, delta_max: self.delta_max }
    }
}

/// Lateral weights, in term order `[y, θ, θ̇, δ, δ̇]`.
pub type LateralWeights = [f64; 5];
/// Longitudinal weights, in term order `[speed or gap, a, ȧ]`.
pub type LongitudinalWeights = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskParams {
    pub v_ref: f64,
    /// Lane-center ordinate the lateral primitive tracks.
    pub y_ref: f64,
    pub d_acc: f64,
    pub d_safe_lc: f64,
    pub d_safe_acc: f64,
    pub d_safe_pv: f64,
    pub q_lk: LateralWeights,
    pub q_lc: LateralWeights,
    pub q_cs: LongitudinalWeights,
    pub q_acc: LongitudinalWeights,
}

impl Default for TaskParams {
    fn default() -> Self {
        let lateral = [1.0, 50.0, 0.1, 0.1, 0.1];
        Self {
            v_ref: 25.0,
            y_ref: 0.0,
            d_acc: 20.0,
            d_safe_lc: 10.0,
            d_safe_acc: 10.0,
            d_safe_pv: 6.0,
            q_lk: lateral,
            q_lc: lateral,
            q_cs: [1.0, 0.1, 0.1],
            q_acc: [0.1, 1.0, 0.1],
        }
    }
}

impl TaskParams {
    pub fn validate(&self) -> Result<()> {
        let weights = self.q_lk.iter().chain(&self.q_lc).chain(&self.q_cs).chain(&self.q_acc);
        let ok = [self.d_acc, self.d_safe_lc, self.d_safe_acc, self.d_safe_pv].iter().all(|d| *d > 0.0)
            && weights.clone().all(|w| *w >= 0.0)
            && self.v_ref.is_finite()
            && self.y_ref.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("task params {self:?}")))
        }
    }
}

/// Position and velocity of a surrounding vehicle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PvState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl PvState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self { x, y, vx, vy }
    }

    /// Constant-velocity extrapolation by `dt` seconds.
    pub fn predict(&self, dt: f64) -> Self {
        Self { x: self.x + self.vx * dt, y: self.y + self.vy * dt, ..*self }
    }
}

/// A surrounding vehicle observed at a known time, predicted with constant
/// velocity at any later stage time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observed {
    pub state: PvState,
    pub at: f64,
}

impl Observed {
    pub fn new(state: PvState, at: f64) -> Self {
        Self { state, at }
    }

    #[inline]
    fn x_at(&self, t: f64) -> f64 {
        self.state.x + self.state.vx * (t - self.at)
    }
}

#[inline]
fn sq(v: f64) -> f64 {
    v * v
}

#[derive(Debug)]
struct Kbm {
    wheelbase: f64,
}

impl PrimitiveModel for Kbm {
    fn states(&self) -> Vec<StateComponent> {
        vec![
            StateComponent::new("x", "m"),
            StateComponent::new("y", "m"),
            StateComponent::new("theta", "rad"),
            StateComponent::new("v", "m/s"),
        ]
    }

    fn derivative(&self, s: &Slots, u: ControlInput, dx: &mut Derivative) {
        let (theta, v) = (s.own(2), s.own(3));
        dx.set(0, v * theta.cos());
        dx.set(1, v * theta.sin());
        dx.set(2, v / self.wheelbase * u.delta.tan());
        dx.set(3, u.a);
    }
}

/// Yaw rate of the kinematic bicycle, `(v / L)·tan δ`.
pub fn kbm_yaw_rate(v: f64, delta: f64, wheelbase: f64) -> f64 {
    v / wheelbase * delta.tan()
}

pub fn make_kbm(ego: &EgoParams) -> Result<MpcPrimitive> {
    ego.validate()?;
    MpcPrimitive::new("KBM", PrimitiveKind::EgoDynamics, ego.input_space(), Kbm { wheelbase: ego.wheelbase })
}

/// Longitudinal keep-away constraint of the lane-change primitive.
#[derive(Clone, Debug, Default)]
pub enum LcGap {
    /// No target-lane neighbor to guard; the gap component is omitted.
    #[default]
    Disabled,
    /// `d_safe_lc − min_j |x − x_j|` over the listed target-lane neighbors.
    Vehicles(Vec<Observed>),
}

#[derive(Debug)]
struct Lateral {
    y_ref: f64,
    wheelbase: f64,
    q: LateralWeights,
    y_bounds: (f64, f64),
    delta_bounds: (f64, f64),
    gap: Option<(f64, Vec<Observed>)>,
}

const LATERAL_READS: [&str; 3] = ["y", "theta", "v"];
const LATERAL_GAP_READS: [&str; 4] = ["y", "theta", "v", "x"];

impl PrimitiveModel for Lateral {
    fn reads(&self) -> &[&'static str] {
        if self.gap.is_some() {
            &LATERAL_GAP_READS
        } else {
            &LATERAL_READS
        }
    }

    fn cost_terms(&self) -> usize {
        5
    }

    fn ineq_labels(&self) -> Vec<String> {
        let mut l: Vec<String> = ["y_min", "y_max", "delta_min", "delta_max"].iter().map(|s| s.to_string()).collect();
        if self.gap.is_some() {
            l.push("gap".into());
        }
        l
    }

    fn stage_cost(&self, s: &Slots, stage: &Stage) -> f64 {
        let (y, theta, v) = (s.read(0), s.read(1), s.read(2));
        let delta = stage.input.delta;
        let yaw_rate = kbm_yaw_rate(v, delta, self.wheelbase);
        let delta_rate = stage.input_rate().delta;
        let q = &self.q;
        q[0] * sq(y - self.y_ref) + q[1] * sq(theta) + q[2] * sq(yaw_rate) + q[3] * sq(delta) + q[4] * sq(delta_rate)
    }

    fn ineq(&self, s: &Slots, stage: &Stage, out: &mut [f64]) {
        let y = s.read(0);
        let delta = stage.input.delta;
        out[0] = self.y_bounds.0 - y;
        out[1] = y - self.y_bounds.1;
        out[2] = self.delta_bounds.0 - delta;
        out[3] = delta - self.delta_bounds.1;
        if let Some((d_safe, vehicles)) = &self.gap {
            let x = s.read(3);
            let nearest = vehicles.iter().map(|o| (x - o.x_at(stage.time)).abs()).fold(f64::INFINITY, f64::min);
            out[4] = d_safe - nearest;
        }
    }
}

/// Lane keep around the lane center `task.y_ref`.
pub fn make_lane_keep(task: &TaskParams, ego: &EgoParams) -> Result<MpcPrimitive> {
    task.validate()?;
    ego.validate()?;
    MpcPrimitive::new(
        "LK",
        PrimitiveKind::LateralTask,
        ego.input_space(),
        Lateral {
            y_ref: task.y_ref,
            wheelbase: ego.wheelbase,
            q: task.q_lk,
            y_bounds: (ego.y_min, ego.y_max),
            delta_bounds: (ego.delta_min, ego.delta_max),
            gap: None,
        },
    )
}

/// Lane change toward the lane center `task.y_ref`.
pub fn make_lane_change(task: &TaskParams, ego: &EgoParams, gap: LcGap) -> Result<MpcPrimitive> {
    task.validate()?;
    ego.validate()?;
    let gap = match gap {
        LcGap::Disabled => None,
        LcGap::Vehicles(v) if v.is_empty() => return Err(Error::MissingTarget("LC")),
        LcGap::Vehicles(v) => Some((task.d_safe_lc, v)),
    };
    MpcPrimitive::new(
        "LC",
        PrimitiveKind::LateralTask,
        ego.input_space(),
        Lateral {
            y_ref: task.y_ref,
            wheelbase: ego.wheelbase,
            q: task.q_lc,
            y_bounds: (ego.y_min, ego.y_max),
            delta_bounds: (ego.delta_min, ego.delta_max),
            gap,
        },
    )
}

#[derive(Debug)]
struct ConstantSpeed {
    v_ref: f64,
    q: LongitudinalWeights,
    a_bounds: (f64, f64),
}

impl PrimitiveModel for ConstantSpeed {
    fn reads(&self) -> &[&'static str] {
        &["v"]
    }

    fn cost_terms(&self) -> usize {
        3
    }

    fn ineq_labels(&self) -> Vec<String> {
        vec!["a_min".into(), "a_max".into()]
    }

    fn stage_cost(&self, s: &Slots, stage: &Stage) -> f64 {
        let a = stage.input.a;
        self.q[0] * sq(s.read(0) - self.v_ref) + self.q[1] * sq(a) + self.q[2] * sq(stage.input_rate().a)
    }

    fn ineq(&self, _s: &Slots, stage: &Stage, out: &mut [f64]) {
        out[0] = self.a_bounds.0 - stage.input.a;
        out[1] = stage.input.a - self.a_bounds.1;
    }
}

pub fn make_constant_speed(task: &TaskParams, ego: &EgoParams) -> Result<MpcPrimitive> {
    task.validate()?;
    ego.validate()?;
    MpcPrimitive::new(
        "CS",
        PrimitiveKind::LongitudinalTask,
        ego.input_space(),
        ConstantSpeed { v_ref: task.v_ref, q: task.q_cs, a_bounds: (ego.a_min, ego.a_max) },
    )
}

#[derive(Debug)]
struct AdaptiveCruise {
    lead: Observed,
    d_acc: f64,
    d_safe: f64,
    q: LongitudinalWeights,
    a_bounds: (f64, f64),
}

impl PrimitiveModel for AdaptiveCruise {
    fn reads(&self) -> &[&'static str] {
        &["x"]
    }

    fn cost_terms(&self) -> usize {
        3
    }

    fn ineq_labels(&self) -> Vec<String> {
        vec!["a_min".into(), "a_max".into(), "gap".into()]
    }

    fn stage_cost(&self, s: &Slots, stage: &Stage) -> f64 {
        let x_pv = self.lead.x_at(stage.time);
        let a = stage.input.a;
        self.q[0] * sq(x_pv - s.read(0) - self.d_acc) + self.q[1] * sq(a) + self.q[2] * sq(stage.input_rate().a)
    }

    fn ineq(&self, s: &Slots, stage: &Stage, out: &mut [f64]) {
        out[0] = self.a_bounds.0 - stage.input.a;
        out[1] = stage.input.a - self.a_bounds.1;
        out[2] = self.d_safe - (s.read(0) - self.lead.x_at(stage.time)).abs();
    }
}

/// Adaptive cruise behind `lead`, which is predicted with constant velocity.
pub fn make_acc(task: &TaskParams, ego: &EgoParams, lead: Option<Observed>) -> Result<MpcPrimitive> {
    task.validate()?;
    ego.validate()?;
    let lead = lead.ok_or(Error::MissingTarget("ACC"))?;
    MpcPrimitive::new(
        "ACC",
        PrimitiveKind::LongitudinalTask,
        ego.input_space(),
        AdaptiveCruise {
            lead,
            d_acc: task.d_acc,
            d_safe: task.d_safe_acc,
            q: task.q_acc,
            a_bounds: (ego.a_min, ego.a_max),
        },
    )
}

#[derive(Debug)]
struct ParallelVehicle {
    prefix: String,
    initial: PvState,
    d_safe: f64,
}

impl PrimitiveModel for ParallelVehicle {
    fn states(&self) -> Vec<StateComponent> {
        vec![
            StateComponent::new(format!("{}.x", self.prefix), "m"),
            StateComponent::new(format!("{}.y", self.prefix), "m"),
            StateComponent::new(format!("{}.vx", self.prefix), "m/s"),
            StateComponent::new(format!("{}.vy", self.prefix), "m/s"),
        ]
    }

    fn default_state(&self) -> Vec<f64> {
        let p = self.initial;
        vec![p.x, p.y, p.vx, p.vy]
    }

    fn reads(&self) -> &[&'static str] {
        &["x", "y"]
    }

    fn ineq_labels(&self) -> Vec<String> {
        vec!["keep_out".into()]
    }

    fn derivative(&self, s: &Slots, _u: ControlInput, dx: &mut Derivative) {
        dx.set(0, s.own(2));
        dx.set(1, s.own(3));
        dx.set(2, 0.0);
        dx.set(3, 0.0);
    }

    fn ineq(&self, s: &Slots, _stage: &Stage, out: &mut [f64]) {
        let dx = s.read(0) - s.own(0);
        let dy = s.read(1) - s.own(1);
        out[0] = self.d_safe - (dx * dx + dy * dy).sqrt();
    }
}

/// State-name prefix of the PV primitive for vehicle `id` (`pv7`).
pub fn pv_prefix(id: usize) -> String {
    format!("pv{id}")
}

/// Safety primitive for surrounding vehicle `id`, carrying its own
/// constant-velocity state and a circular keep-out constraint.
pub fn make_pv_safety(task: &TaskParams, ego: &EgoParams, id: usize, pv0: PvState) -> Result<MpcPrimitive> {
    task.validate()?;
    if ![pv0.x, pv0.y, pv0.vx, pv0.vy].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(format!("pv state {pv0:?}")));
    }
    MpcPrimitive::new(
        format!("PV{id}"),
        PrimitiveKind::Safety,
        ego.input_space(),
        ParallelVehicle { prefix: pv_prefix(id), initial: pv0, d_safe: task.d_safe_pv },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::{build_ocp, StateVector};

    fn stage(u: ControlInput, prev: ControlInput) -> Stage {
        Stage::new(0, 0.0, 0.05, u, prev)
    }

    fn ego_state(x: f64, y: f64, theta: f64, v: f64) -> StateVector {
        StateVector::from_pairs(&[("x", x), ("y", y), ("theta", theta), ("v", v)])
    }

    #[test]
    fn kbm_has_zero_cost_everywhere() {
        let kbm = make_kbm(&EgoParams::default()).unwrap();
        let x = ego_state(3.0, -1.0, 0.2, 17.0);
        let u = ControlInput::new(2.0, 0.3);
        assert_eq!(kbm.stage_cost(&x, &stage(u, ControlInput::ZERO)).unwrap(), 0.0);
        assert_eq!(kbm.n_g(), 0);
    }

    #[test]
    fn kbm_yaw_rate_value() {
        let rate = kbm_yaw_rate(10.0, 0.1, 2.5);
        assert!((rate - 4.0 * 0.1f64.tan()).abs() < 1e-15);
        assert!((rate - 0.4013).abs() < 5e-5);
        let kbm = make_kbm(&EgoParams::default()).unwrap();
        let d = kbm.derivative(&ego_state(0.0, 0.0, 0.0, 10.0), ControlInput::new(0.0, 0.1)).unwrap();
        assert_eq!(d[2], rate);
    }

    #[test]
    fn lane_keep_zero_at_center() {
        let lk = make_lane_keep(&TaskParams::default(), &EgoParams::default()).unwrap();
        let x = ego_state(0.0, 0.0, 0.0, 25.0);
        assert_eq!(lk.stage_cost(&x, &stage(ControlInput::ZERO, ControlInput::ZERO)).unwrap(), 0.0);
    }

    #[test]
    fn lane_keep_measures_from_current_lane_center() {
        let task = TaskParams { y_ref: 4.0, ..Default::default() };
        let lk = make_lane_keep(&task, &EgoParams::default()).unwrap();
        let c = lk.stage_cost(&ego_state(0.0, 4.0, 0.0, 25.0), &stage(ControlInput::ZERO, ControlInput::ZERO));
        assert_eq!(c.unwrap(), 0.0);
        let off = lk.stage_cost(&ego_state(0.0, 5.0, 0.0, 25.0), &stage(ControlInput::ZERO, ControlInput::ZERO));
        assert_eq!(off.unwrap(), 1.0);
    }

    #[test]
    fn lane_change_zero_at_target() {
        let task = TaskParams { y_ref: 8.0, ..Default::default() };
        let lc = make_lane_change(&task, &EgoParams::default(), LcGap::Disabled).unwrap();
        let c = lc.stage_cost(&ego_state(0.0, 8.0, 0.0, 20.0), &stage(ControlInput::ZERO, ControlInput::ZERO));
        assert_eq!(c.unwrap(), 0.0);
    }

    #[test]
    fn lane_change_gap_violated_at_half_distance() {
        let task = TaskParams::default();
        let lead = Observed::new(PvState::new(task.d_safe_lc / 2.0, 4.0, 0.0, 0.0), 0.0);
        let lc = make_lane_change(&task, &EgoParams::default(), LcGap::Vehicles(vec![lead])).unwrap();
        let g = lc.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::ZERO, ControlInput::ZERO)).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], task.d_safe_lc / 2.0);
    }

    #[test]
    fn lane_change_with_empty_gap_list_is_missing_target() {
        let err = make_lane_change(&TaskParams::default(), &EgoParams::default(), LcGap::Vehicles(vec![]));
        assert!(matches!(err, Err(Error::MissingTarget("LC"))));
    }

    #[test]
    fn lc_gap_uses_nearest_neighbor_on_either_side() {
        let task = TaskParams::default();
        let ahead = Observed::new(PvState::new(30.0, 4.0, 0.0, 0.0), 0.0);
        let behind = Observed::new(PvState::new(-7.0, 4.0, 0.0, 0.0), 0.0);
        let lc = make_lane_change(&task, &EgoParams::default(), LcGap::Vehicles(vec![ahead, behind])).unwrap();
        let g = lc.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::ZERO, ControlInput::ZERO)).unwrap();
        assert_eq!(g[4], 3.0);
    }

    #[test]
    fn constant_speed_zero_at_reference() {
        let task = TaskParams::default();
        let cs = make_constant_speed(&task, &EgoParams::default()).unwrap();
        let c = cs.stage_cost(&ego_state(0.0, 0.0, 0.0, task.v_ref), &stage(ControlInput::ZERO, ControlInput::ZERO));
        assert_eq!(c.unwrap(), 0.0);
    }

    #[test]
    fn acc_position_term_zero_at_target_gap_and_boundary_constraint() {
        let task = TaskParams::default();
        let lead = Observed::new(PvState::new(task.d_acc, 0.0, 0.0, 0.0), 0.0);
        let acc = make_acc(&task, &EgoParams::default(), Some(lead)).unwrap();
        let s = stage(ControlInput::ZERO, ControlInput::ZERO);
        assert_eq!(acc.stage_cost(&ego_state(0.0, 0.0, 0.0, 20.0), &s).unwrap(), 0.0);

        let lead = Observed::new(PvState::new(task.d_safe_acc, 0.0, 0.0, 0.0), 0.0);
        let acc = make_acc(&task, &EgoParams::default(), Some(lead)).unwrap();
        assert_eq!(acc.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &s).unwrap()[2], 0.0);
    }

    #[test]
    fn acc_without_lead_is_missing_target() {
        let err = make_acc(&TaskParams::default(), &EgoParams::default(), None);
        assert!(matches!(err, Err(Error::MissingTarget("ACC"))));
    }

    #[test]
    fn acc_lead_is_predicted_at_stage_time() {
        let task = TaskParams::default();
        let lead = Observed::new(PvState::new(30.0, 0.0, 10.0, 0.0), 2.0);
        let acc = make_acc(&task, &EgoParams::default(), Some(lead)).unwrap();
        // at t = 3 the lead sits at 40
        let s = Stage::new(0, 3.0, 0.05, ControlInput::ZERO, ControlInput::ZERO);
        assert_eq!(acc.ineq(&ego_state(35.0, 0.0, 0.0, 20.0), &s).unwrap()[2], 5.0);
    }

    #[test]
    fn pv_constant_velocity_rollout() {
        let task = TaskParams::default();
        let ego = EgoParams::default();
        let pv = make_pv_safety(&task, &ego, 0, PvState::new(20.0, 0.0, 10.0, 0.0)).unwrap();
        let ocp = build_ocp(&[make_kbm(&ego).unwrap(), pv], 20, 0.05, ego.input_space()).unwrap();
        let traj = ocp.rollout(&ocp.default_state(), &[ControlInput::ZERO; 20]).unwrap();
        let last = traj.final_state();
        assert!((last.get("pv0.x").unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(last.get("pv0.y").unwrap(), 0.0);
        assert_eq!(last.get("pv0.vx").unwrap(), 10.0);
    }

    #[test]
    fn pv_constraint_boundary() {
        let task = TaskParams::default();
        let pv = make_pv_safety(&task, &EgoParams::default(), 2, PvState::default()).unwrap();
        let x = StateVector::from_pairs(&[
            ("x", 0.0),
            ("y", 0.0),
            ("pv2.x", 0.0),
            ("pv2.y", task.d_safe_pv),
            ("pv2.vx", 0.0),
            ("pv2.vy", 0.0),
        ]);
        let g = pv.ineq(&x, &stage(ControlInput::ZERO, ControlInput::ZERO)).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn invalid_params_rejected() {
        let ego = EgoParams { wheelbase: 0.0, ..Default::default() };
        assert!(make_kbm(&ego).is_err());
        let task = TaskParams { d_safe_pv: -1.0, ..Default::default() };
        assert!(make_lane_keep(&task, &EgoParams::default()).is_err());
    }
}
