use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assigner::AssignerConfig;
use crate::error::{Error, Result};
use crate::iocp::IocpParams;
use crate::mppi::MppiConfig;
use crate::planner::{BevConfig, RecklessConfig, RetryPolicy};
use crate::primitives::{EgoParams, TaskParams};
use crate::sim::{EpisodeConfig, IdmParams, PidConfig};
use crate::switcher::{SwitcherConfig, Tolerances};

pub const DEFAULT_CONFIG: &str = include_str!("../../assets/default_config.toml");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CadenceConfig {
    /// Control steps outside intermediate OCPs between two plans.
    pub control_steps_per_plan: usize,
    /// Planning interval of the PID pipeline [s].
    pub pid_plan_period: f64,
    /// A lane change is complete once the ego is this close to the target
    /// lane center [m].
    pub lane_tolerance: f64,
}

impl Default for CadenceConfig {
    fn default() -> Self {
        Self { control_steps_per_plan: 30, pid_plan_period: 1.0, lane_tolerance: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitcherSection {
    pub n_max: usize,
    pub use_iocp: bool,
    pub eps_g: f64,
    pub eps_h: f64,
    /// Drop a previously accepted lane change for keeping the current lane
    /// once its rebuilt OCP turns infeasible.
    pub abandon_blocked_changes: bool,
}

impl Default for SwitcherSection {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { n_max: 50, use_iocp: true, eps_g: t.eps_g, eps_h: t.eps_h, abandon_blocked_changes: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    /// Chat-completions API.
    Api,
    /// Commands from a script file.
    Scripted,
    /// Canned model responses from `replay_dir`.
    Replay,
    /// Built-in rule planner that cuts into occupied lanes.
    #[default]
    Reckless,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerSection {
    pub kind: PlannerKind,
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_s: f64,
    pub memory_capacity: usize,
    pub safety_instructions: bool,
    pub replay_dir: Option<PathBuf>,
    pub script: Option<PathBuf>,
    /// Prompt template file; the bundled template when unset.
    pub template: Option<PathBuf>,
    /// Keep controlling while a plan request is in flight.
    pub asynchronous: bool,
    pub retry: RetryPolicy,
    pub reckless: RecklessConfig,
    pub bev: BevConfig,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            kind: PlannerKind::default(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_s: 60.0,
            memory_capacity: 5,
            safety_instructions: true,
            replay_dir: None,
            script: None,
            template: None,
            asynchronous: false,
            retry: RetryPolicy::default(),
            reckless: RecklessConfig::default(),
            bev: BevConfig::default(),
        }
    }
}

/// Everything an experiment run needs, loadable from one TOML document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub episode: EpisodeConfig,
    pub ego: EgoParams,
    pub task: TaskParams,
    pub assigner: AssignerConfig,
    pub mppi: MppiConfig,
    pub iocp: IocpParams,
    pub switcher: SwitcherSection,
    pub cadence: CadenceConfig,
    pub idm: IdmParams,
    pub pid: PidConfig,
    pub planner: PlannerSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative planner paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.planner.replay_dir, &mut cfg.planner.script, &mut cfg.planner.template].into_iter().flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        self.ego.validate()?;
        self.task.validate()?;
        self.mppi.validate()?;
        self.iocp.validate()?;
        if (self.mppi.dt - self.episode.dt).abs() > 1e-12 {
            return Err(Error::Config("mppi.dt must equal episode.dt".into()));
        }
        let c = &self.cadence;
        if c.control_steps_per_plan == 0 || c.pid_plan_period <= 0.0 || c.lane_tolerance <= 0.0 {
            return Err(Error::Config(format!("cadence {c:?}")));
        }
        Ok(())
    }

    pub fn switcher_config(&self) -> SwitcherConfig {
        SwitcherConfig {
            n_max: self.switcher.n_max,
            use_iocp: self.switcher.use_iocp,
            iocp: self.iocp,
            tolerances: Tolerances { eps_g: self.switcher.eps_g, eps_h: self.switcher.eps_h },
        }
    }

    /// Control steps between two PID plans.
    pub fn pid_plan_steps(&self) -> usize {
        ((self.cadence.pid_plan_period / self.episode.dt).round() as usize).max(1)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
