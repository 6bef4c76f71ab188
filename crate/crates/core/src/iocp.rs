//! Intermediate OCPs bridging a previous task and an infeasible target task.
//!
//! The intermediate problem runs both state spaces side by side under the
//! same inputs. It keeps the previous task's cost and hard constraints and
//! adds a squared penalty on the target task's constraint violations, so the
//! solver steers the state towards the target's feasible set without giving
//! up the guarantees of the task it is leaving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{Ocp, Role};

pub const PREV_NAMESPACE: &str = "prev/";
pub const TARGET_NAMESPACE: &str = "target/";

const TAG_PREFIX: &str = "iocp(";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IocpParams {
    /// Weight of squared inequality violations of the target.
    pub rho_g: f64,
    /// Weight of squared equality residuals of the target.
    pub rho_h: f64,
    /// Also add the target's own stage cost.
    pub include_target_cost: bool,
}

impl Default for IocpParams {
    fn default() -> Self {
        Self { rho_g: 1.0, rho_h: 1.0, include_target_cost: false }
    }
}

impl IocpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho_g.is_finite() && self.rho_h.is_finite() && self.rho_g >= 0.0 && self.rho_h >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("iOCP weights {self:?}")))
        }
    }
}

/// Short human-readable name of an OCP, `KBM+LK+CS`.
pub fn ocp_label(ocp: &Ocp) -> String {
    match ocp.provenance().first() {
        Some(tag) if tag.starts_with(TAG_PREFIX) => tag.clone(),
        _ => ocp.provenance().join("+"),
    }
}

/// Builds the intermediate OCP from `prev` to `target`.
///
/// State is `prev/… × target/…`; cost is the previous cost plus
/// `ρ_g·Σ max(0, g_target)² + ρ_h·Σ h_target²` on stages `0..N`; the hard
/// constraints are exactly those of `prev`.
pub fn make_iocp(prev: &Ocp, target: &Ocp, params: &IocpParams) -> Result<Ocp> {
    params.validate()?;
    if prev.horizon() != target.horizon() || prev.dt() != target.dt() {
        return Err(Error::HorizonMismatch);
    }
    if prev.input_space() != target.input_space() {
        return Err(Error::IncompatibleInputSpace);
    }
    let (mut schema, mut atoms, mut roles) = prev.namespaced_parts(PREV_NAMESPACE);
    let (t_schema, t_atoms, t_roles) = target.namespaced_parts(TARGET_NAMESPACE);
    schema.extend(t_schema);
    atoms.extend(t_atoms);
    roles.extend(t_roles.into_iter().map(|r| match r {
        Role::Constrained => {
            Role::Penalized { rho_g: params.rho_g, rho_h: params.rho_h, keep_cost: params.include_target_cost }
        }
        // A target that is itself intermediate only contributes its state.
        Role::Penalized { .. } | Role::Passive => Role::Passive,
    }));

    let mut provenance = vec![format!("{TAG_PREFIX}{}→{})", ocp_label(prev), ocp_label(target))];
    provenance.extend(prev.provenance().iter().map(|p| format!("{PREV_NAMESPACE}{p}")));
    provenance.extend(target.provenance().iter().map(|p| format!("{TARGET_NAMESPACE}{p}")));
    Ocp::assemble(*prev.input_space(), schema, atoms, roles, prev.horizon(), prev.dt(), provenance)
}

pub fn is_iocp(ocp: &Ocp) -> bool {
    ocp.provenance().first().is_some_and(|t| t.starts_with(TAG_PREFIX))
}
