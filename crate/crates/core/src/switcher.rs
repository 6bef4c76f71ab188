//! Warm-start feasibility check and the MPC switcher state machine.
//!
//! Each control step the switcher receives the target OCP of the active task.
//! If the target is feasible under the previous step's time-shifted inputs it
//! becomes the OCP to solve. Otherwise an intermediate OCP leads from the last
//! accepted OCP towards the target, for at most `n_max` consecutive steps,
//! after which the task is rejected and the previous OCP is kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iocp::{make_iocp, IocpParams};
use crate::ocp::{ControlInput, Ocp, Origin, StateSource};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// An inequality component is violated when `g > eps_g`.
    pub eps_g: f64,
    /// An equality component is violated when `|h| > eps_h`.
    pub eps_h: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eps_g: 0.0, eps_h: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub stage: usize,
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible() -> Self {
        Self { feasible: true, violations: Vec::new() }
    }

    /// Distinct violated component labels in order of first appearance.
    pub fn violated_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for v in &self.violations {
            if !out.contains(&v.label) {
                out.push(v.label.clone());
            }
        }
        out
    }
}

/// Rolls `ocp` from the measured state under the previous step's shifted
/// inputs and checks every constraint on stages `0..=N-2`.
///
/// `shifted` holds `û(k+1|t-1)`; at least `N-1` entries are needed and only
/// the first `N-1` are used.
pub fn check_feasibility(
    ocp: &Ocp,
    x_t: &(impl StateSource + ?Sized),
    shifted: &[ControlInput],
    origin: Origin,
    tol: &Tolerances,
) -> Result<FeasibilityReport> {
    let n = ocp.horizon();
    let last_stage = n.saturating_sub(2);
    let usable = n.saturating_sub(1).max(1);
    if shifted.len() < usable {
        return Err(Error::SchemaMismatch(format!("{} shifted inputs, need {usable}", shifted.len())));
    }
    let x0 = ocp.measure(x_t)?;
    // Stages past N-2 are never inspected, so the padding value is irrelevant.
    let mut inputs = shifted[..usable].to_vec();
    inputs.resize(n, inputs[usable - 1]);
    let traj = ocp.rollout_from(&x0, &inputs, origin)?;
    let cons = ocp.eval_constraints(&traj)?;
    let g_labels = ocp.ineq_labels();
    let h_labels = ocp.eq_labels();
    let mut violations = Vec::new();
    // Written as negations so that NaN counts as a violation.
    for (k, c) in cons.iter().enumerate().take(last_stage + 1) {
        for (i, &g) in c.g.iter().enumerate() {
            if !g.le(&tol.eps_g) {
                violations.push(Violation { stage: k, label: g_labels[i].clone(), value: g });
            }
        }
        for (i, &h) in c.h.iter().enumerate() {
            if !h.abs().le(&tol.eps_h) {
                violations.push(Violation { stage: k, label: h_labels[i].clone(), value: h });
            }
        }
    }
    Ok(FeasibilityReport { feasible: violations.is_empty(), violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchMode {
    Direct,
    Intermediate,
    Reverted,
}

impl SwitchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SwitchMode::Direct => "direct",
            SwitchMode::Intermediate => "intermediate",
            SwitchMode::Reverted => "reverted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitcherConfig {
    pub n_max: usize,
    /// With `false` an infeasible target is rejected immediately.
    pub use_iocp: bool,
    pub iocp: IocpParams,
    pub tolerances: Tolerances,
}

impl Default for SwitcherConfig {
    fn default() -> Self {
        Self { n_max: 50, use_iocp: true, iocp: IocpParams::default(), tolerances: Tolerances::default() }
    }
}

/// Mode and next iOCP count for one decision; the whole state machine.
pub fn decide(feasible: bool, n_iocp: usize, n_max: usize, use_iocp: bool) -> (SwitchMode, usize) {
    if feasible {
        (SwitchMode::Direct, 0)
    } else if use_iocp && n_iocp < n_max {
        (SwitchMode::Intermediate, n_iocp + 1)
    } else {
        (SwitchMode::Reverted, 0)
    }
}

#[derive(Clone, Debug)]
pub struct SwitcherState {
    /// Last accepted OCP.
    pub prev_ocp: Ocp,
    /// Consecutive intermediate steps so far.
    pub n_iocp: usize,
    pub n_max: usize,
    /// Shifted input sequence of the last solve.
    pub last_warm_start: Vec<ControlInput>,
}

impl SwitcherState {
    pub fn new(prev_ocp: Ocp, n_max: usize) -> Self {
        let last_warm_start = vec![ControlInput::ZERO; prev_ocp.horizon()];
        Self { prev_ocp, n_iocp: 0, n_max, last_warm_start }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iocp > self.n_max {
            return Err(Error::InvalidParameter(format!("n_iocp {} exceeds n_max {}", self.n_iocp, self.n_max)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SwitchDecision {
    pub solve_ocp: Ocp,
    pub is_rejected: bool,
    pub mode: SwitchMode,
    /// Feasibility of the target that led to this decision.
    pub report: FeasibilityReport,
}

/// Applies the state machine given an already computed feasibility report.
pub fn apply(
    state: &SwitcherState,
    target: &Ocp,
    report: FeasibilityReport,
    cfg: &SwitcherConfig,
) -> Result<(SwitchDecision, SwitcherState)> {
    state.validate()?;
    let (mode, n_iocp) = decide(report.feasible, state.n_iocp, state.n_max, cfg.use_iocp);
    let mut next = state.clone();
    next.n_iocp = n_iocp;
    let solve_ocp = match mode {
        SwitchMode::Direct => {
            next.prev_ocp = target.clone();
            target.clone()
        }
        SwitchMode::Intermediate => make_iocp(&state.prev_ocp, target, &cfg.iocp)?,
        SwitchMode::Reverted => state.prev_ocp.clone(),
    };
    let decision = SwitchDecision { solve_ocp, is_rejected: mode == SwitchMode::Reverted, mode, report };
    Ok((decision, next))
}

/// One switcher step: feasibility check of `target` at the measured state,
/// then [`apply`].
pub fn switch(
    state: &SwitcherState,
    target: &Ocp,
    x_t: &(impl StateSource + ?Sized),
    origin: Origin,
    cfg: &SwitcherConfig,
) -> Result<(SwitchDecision, SwitcherState)> {
    let report = check_feasibility(target, x_t, &state.last_warm_start, origin, &cfg.tolerances)?;
    apply(state, target, report, cfg)
}
