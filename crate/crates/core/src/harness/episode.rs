//! Closed-loop episodes of the three pipelines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Config;
use crate::assigner::{goal_ocp, resolve, LateralGoal, TaskCommand};
use crate::error::{Error, Result};
use crate::iocp::{is_iocp, ocp_label};
use crate::mppi;
use crate::ocp::{ControlInput, Ocp, Origin};
use crate::planner::{AsyncPlanner, PlanOutput, Planner, PlannerFeedback};
use crate::sim::{detect_collision, spawn_episode, step_world, PidController, WorldState};
use crate::switcher::{check_feasibility, switch, SwitchMode, SwitcherState};
use crate::trace::{
    EpisodeHeader, EventRecord, Margin, Payload, PlanRecord, SolveRecord, SwitchRecord, TraceRecord, WorldRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    /// Planner, assigner, feasibility-aware switcher with iOCPs, MPPI.
    Proposed,
    /// Planner straight into the assigned OCP, no feedback.
    Lvlm2mpc,
    /// Planner driving a PID lane/speed controller.
    Lvlm2pid,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 3] = [PipelineKind::Proposed, PipelineKind::Lvlm2mpc, PipelineKind::Lvlm2pid];

    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineKind::Proposed => "proposed",
            PipelineKind::Lvlm2mpc => "lvlm2mpc",
            PipelineKind::Lvlm2pid => "lvlm2pid",
        }
    }

    /// Commands the pipeline's planner may issue.
    pub fn commands(&self) -> Vec<TaskCommand> {
        match self {
            PipelineKind::Lvlm2pid => TaskCommand::EXTENDED_SET.to_vec(),
            _ => TaskCommand::MPC_SET.to_vec(),
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PipelineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown pipeline `{s}`")))
    }
}

/// Run label: the pipeline name plus ablation suffixes.
pub fn pipeline_label(kind: PipelineKind, cfg: &Config) -> String {
    let mut s = kind.as_str().to_string();
    if kind == PipelineKind::Proposed && !cfg.switcher.use_iocp {
        s.push_str("-no-iocp");
    }
    if !cfg.planner.safety_instructions {
        s.push_str("-no-safety");
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub label: String,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub success: bool,
    pub collision: Option<usize>,
    pub travel: f64,
    pub steps: usize,
}

/// Seed of the MPPI noise stream for one control step.
fn step_seed(base: u64, episode: u64, step: usize) -> u64 {
    let mut z = base ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (step as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of the current planner decision, accumulated over its steps.
#[derive(Clone, Copy, Debug)]
struct Decision {
    command: TaskCommand,
    unresolved: bool,
    intermediate: bool,
    reverted: bool,
}

impl Decision {
    fn feedback(&self) -> PlannerFeedback {
        if self.unresolved || self.reverted {
            PlannerFeedback::rejected(self.command)
        } else if self.intermediate {
            PlannerFeedback::accepted(self.command, SwitchMode::Intermediate)
        } else {
            PlannerFeedback::accepted(self.command, SwitchMode::Direct)
        }
    }
}

enum PlannerSlot {
    Sync(Box<dyn Planner>),
    Async(AsyncPlanner),
}

struct MpcState {
    active: LateralGoal,
    prev_goal: LateralGoal,
    switcher: SwitcherState,
}

enum Control {
    Mpc(Box<MpcState>),
    Pid { pid: PidController, goal: LateralGoal },
}

struct Episode<'a> {
    kind: PipelineKind,
    cfg: &'a Config,
    seed: u64,
    world: WorldState,
    records: Vec<TraceRecord>,
    control: Control,
    decision: Option<Decision>,
    prev_input: ControlInput,
}

impl<'a> Episode<'a> {
    fn push(&mut self, step: usize, payload: Payload) {
        self.records.push(TraceRecord::new(step, self.world.time, payload));
    }

    fn goal_ocp(&self, goal: LateralGoal) -> Result<Ocp> {
        let c = self.cfg;
        goal_ocp(goal, &self.world, &c.task, &c.ego, &c.assigner, c.mppi.horizon, c.mppi.dt)
    }

    fn feedback(&self) -> Option<PlannerFeedback> {
        match self.kind {
            PipelineKind::Proposed => self.decision.map(|d| d.feedback()),
            _ => None,
        }
    }

    fn apply_plan(&mut self, step: usize, out: PlanOutput, feedback: Option<PlannerFeedback>) {
        let cmd = out.command;
        let world = &self.world;
        let (goal, error) = match &mut self.control {
            Control::Mpc(m) => match resolve(cmd, world) {
                Ok(g) => {
                    m.active = g;
                    (Some(g), None)
                }
                Err(e) => {
                    m.active = LateralGoal::Keep { lane: world.ego_lane() };
                    (None, Some(e.to_string()))
                }
            },
            Control::Pid { pid, goal } => {
                let before = pid.target_lane;
                pid.command(cmd, world);
                if pid.target_lane != before {
                    *goal = LateralGoal::Change { from: before, to: pid.target_lane };
                }
                let err = (cmd.is_lane_change() && pid.target_lane == before)
                    .then(|| format!("no lane for {cmd} from lane {before}"));
                (Some(*goal), err)
            }
        };
        self.decision = Some(Decision {
            command: cmd,
            unresolved: goal.is_none() || error.is_some(),
            intermediate: false,
            reverted: false,
        });
        self.push(step, Payload::Plan(PlanRecord { command: cmd, goal, feedback, output: out, error }));
    }

    /// One control step; returns the applied input and the goal it pursues.
    fn control(&mut self, step: usize) -> Result<(ControlInput, Option<LateralGoal>, bool)> {
        let tol = self.cfg.cadence.lane_tolerance;
        let road = self.world.road;
        let done = |g: LateralGoal, y: f64| match g {
            LateralGoal::Change { to, .. } if (y - road.center(to)).abs() <= tol => LateralGoal::Keep { lane: to },
            other => other,
        };
        let y = self.world.ego.y;
        match &mut self.control {
            Control::Pid { pid, goal } => {
                *goal = done(*goal, y);
                let g = *goal;
                let u = pid.control(&self.world, self.cfg.episode.dt);
                Ok((u, Some(g), true))
            }
            Control::Mpc(m) => {
                m.active = done(m.active, y);
                m.prev_goal = done(m.prev_goal, y);
                let (active, prev_goal) = (m.active, m.prev_goal);
                let target = self.goal_ocp(active)?;
                let mut refreshed = self.goal_ocp(prev_goal)?;
                let origin = Origin::new(self.world.time, self.prev_input);
                let Control::Mpc(m) = &mut self.control else { unreachable!() };
                if self.kind == PipelineKind::Proposed
                    && self.cfg.switcher.abandon_blocked_changes
                    && prev_goal.is_change()
                {
                    let tol = self.cfg.switcher_config().tolerances;
                    let report = check_feasibility(&refreshed, &self.world, &m.switcher.last_warm_start, origin, &tol)?;
                    if !report.feasible {
                        let keep = LateralGoal::Keep { lane: self.world.ego_lane() };
                        m.prev_goal = keep;
                        if m.active == prev_goal {
                            m.active = keep;
                        }
                        refreshed = self.goal_ocp(keep)?;
                    }
                }
                let Control::Mpc(m) = &mut self.control else { unreachable!() };
                let (active, prev_goal) = (m.active, m.prev_goal);
                let target = if active == prev_goal { refreshed.clone() } else { target };
                let (ocp, executing, counts) = if self.kind == PipelineKind::Proposed {
                    let sw_cfg = self.cfg.switcher_config();
                    // The previous task keeps its primitives but sees the
                    // current observations.
                    m.switcher.prev_ocp = refreshed;
                    let (dec, next) = switch(&m.switcher, &target, &self.world, origin, &sw_cfg)?;
                    m.switcher = next;
                    let executing = match dec.mode {
                        SwitchMode::Direct => {
                            m.prev_goal = active;
                            active
                        }
                        SwitchMode::Intermediate => m.prev_goal,
                        SwitchMode::Reverted => {
                            m.active = m.prev_goal;
                            m.prev_goal
                        }
                    };
                    if let Some(d) = &mut self.decision {
                        d.intermediate |= dec.mode == SwitchMode::Intermediate;
                        d.reverted |= dec.mode == SwitchMode::Reverted;
                    }
                    let rec = SwitchRecord {
                        mode: dec.mode,
                        is_rejected: dec.is_rejected,
                        feasible: dec.report.feasible,
                        violated: dec.report.violated_labels(),
                        target: ocp_label(&target),
                        solved: ocp_label(&dec.solve_ocp),
                        n_iocp: m.switcher.n_iocp,
                    };
                    let counts = dec.mode != SwitchMode::Intermediate;
                    let ocp = dec.solve_ocp;
                    self.records.push(TraceRecord::new(step, self.world.time, Payload::Switch(rec)));
                    (ocp, active_or(executing), counts)
                } else {
                    (target, active_or(active), true)
                };
                let Control::Mpc(m) = &mut self.control else { unreachable!() };
                let x0 = ocp.measure(&self.world)?;
                let mcfg = self.cfg.mppi.with_seed(step_seed(self.cfg.mppi.seed, self.seed, step));
                let res = mppi::solve(&ocp, &x0, &m.switcher.last_warm_start, origin, &mcfg)?;
                m.switcher.last_warm_start = res.nominal_inputs.clone();
                let margins = margins(&ocp, &res.planned)?;
                let rec = SolveRecord {
                    ocp: ocp_label(&ocp),
                    provenance: ocp.provenance().to_vec(),
                    is_iocp: is_iocp(&ocp),
                    input: res.first_input,
                    cost: res.cost,
                    warm_start_cost: res.warm_start_cost,
                    margins,
                };
                self.push(step, Payload::Solve(rec));
                Ok((res.first_input, executing, counts))
            }
        }
    }
}

fn active_or(g: LateralGoal) -> Option<LateralGoal> {
    Some(g)
}

fn margins(ocp: &Ocp, traj: &crate::ocp::Trajectory) -> Result<Vec<Margin>> {
    let cons = ocp.eval_constraints(traj)?;
    Ok(ocp
        .ineq_labels()
        .into_iter()
        .enumerate()
        .map(|(i, label)| Margin { label, max_g: cons.iter().map(|c| c.g[i]).fold(f64::NEG_INFINITY, f64::max) })
        .collect())
}

/// Runs one episode from the seeded spawn.
pub fn run_episode(kind: PipelineKind, cfg: &Config, seed: u64, planner: Box<dyn Planner>) -> Result<EpisodeOutcome> {
    let episode = crate::sim::EpisodeConfig { seed, ..cfg.episode };
    let world = spawn_episode(&episode)?;
    run_episode_from(kind, cfg, seed, world, planner)
}

/// Runs one episode from a given initial world.
pub fn run_episode_from(
    kind: PipelineKind,
    cfg: &Config,
    seed: u64,
    world: WorldState,
    planner: Box<dyn Planner>,
) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let label = pipeline_label(kind, cfg);
    let x_start = world.ego.x;
    let lane = world.ego_lane();
    let keep = LateralGoal::Keep { lane };
    let mut ep = Episode {
        kind,
        cfg,
        seed,
        world,
        records: Vec::new(),
        control: Control::Pid {
            pid: PidController::new(cfg.pid, cfg.ego.wheelbase, cfg.ego.input_space(), lane, cfg.task.v_ref),
            goal: keep,
        },
        decision: None,
        prev_input: ControlInput::ZERO,
    };
    if kind != PipelineKind::Lvlm2pid {
        let ocp = ep.goal_ocp(keep)?;
        ep.control = Control::Mpc(Box::new(MpcState {
            active: keep,
            prev_goal: keep,
            switcher: SwitcherState::new(ocp, cfg.switcher.n_max),
        }));
    }
    let header = EpisodeHeader {
        pipeline: label.clone(),
        seed,
        road: ep.world.road,
        geometry: ep.world.geometry,
        d_safe_acc: cfg.task.d_safe_acc,
        lane_tolerance: cfg.cadence.lane_tolerance,
        ego: ep.world.ego,
        vehicles: ep.world.vehicles.clone(),
    };
    ep.push(0, Payload::Event(EventRecord::EpisodeStart(header)));

    let mut slot = if cfg.planner.asynchronous {
        PlannerSlot::Async(AsyncPlanner::spawn(planner))
    } else {
        PlannerSlot::Sync(planner)
    };
    let steps = cfg.episode.steps();
    let plan_every = match kind {
        PipelineKind::Lvlm2pid => cfg.pid_plan_steps(),
        _ => cfg.cadence.control_steps_per_plan,
    };
    let mut since_plan = plan_every;
    let mut pending_feedback: Option<PlannerFeedback> = None;
    let mut collision = None;
    let mut executed = 0;
    for step in 0..steps {
        if since_plan >= plan_every {
            let feedback = ep.feedback();
            match &mut slot {
                PlannerSlot::Sync(p) => {
                    let out = p.plan(&ep.world, feedback.as_ref())?;
                    ep.apply_plan(step, out, feedback);
                    since_plan = 0;
                }
                PlannerSlot::Async(p) => {
                    if p.request(&ep.world, feedback.as_ref())? {
                        pending_feedback = feedback;
                        since_plan = 0;
                    }
                }
            }
        }
        if let PlannerSlot::Async(p) = &mut slot {
            if let Some(out) = p.try_take() {
                ep.apply_plan(step, out?, pending_feedback.take());
            }
        }

        let (u, executing, counts) = ep.control(step)?;
        if counts {
            since_plan += 1;
        }
        ep.world = step_world(&ep.world, u, cfg.ego.wheelbase, &cfg.idm, cfg.episode.dt);
        ep.prev_input = u;
        let world_rec = WorldRecord { ego: ep.world.ego, vehicles: ep.world.vehicles.clone(), executing, input: u };
        ep.push(step, Payload::World(world_rec));
        executed = step + 1;
        if let Some(id) = detect_collision(&ep.world) {
            collision = Some(id);
            ep.push(step, Payload::Event(EventRecord::Collision { vehicle: id }));
            break;
        }
    }
    let travel = ep.world.ego.x - x_start;
    let success = collision.is_none();
    ep.push(executed, Payload::Event(EventRecord::EpisodeEnd { success, travel }));
    Ok(EpisodeOutcome { label, seed, records: ep.records, success, collision, travel, steps: executed })
}
