//! High-level task planners behind one interface: a language-model planner
//! (chat-completions API or canned replies), a scripted planner and a
//! deliberately reckless rule planner.

mod bev;
mod language;
mod mailbox;
mod memory;
mod parse;
mod prompt;
mod reckless;
mod scripted;
mod transport;

pub use bev::{render_bev, BevConfig, BevFrame};
pub use language::{LanguagePlanner, RetryPolicy};
pub use mailbox::AsyncPlanner;
pub use memory::{ContextMemory, MemoryEntry};
pub use parse::parse_command;
pub use prompt::{render_prompt, PromptBundle, PromptOptions, PromptTemplate};
pub use reckless::{RecklessConfig, RecklessPlanner};
pub use scripted::ScriptedPlanner;
pub use transport::{ChatRequest, HttpTransport, ReplayTransport, Transport};

use serde::{Deserialize, Serialize};

use crate::assigner::TaskCommand;
use crate::error::Result;
use crate::sim::WorldState;
use crate::switcher::SwitchMode;

/// Outcome of the previous command, reported with the next plan request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerFeedback {
    pub last_command: TaskCommand,
    pub feasible: bool,
    pub rejected: bool,
    pub assist_mode: SwitchMode,
}

impl PlannerFeedback {
    pub fn accepted(last_command: TaskCommand, assist_mode: SwitchMode) -> Self {
        Self { last_command, feasible: assist_mode == SwitchMode::Direct, rejected: false, assist_mode }
    }

    pub fn rejected(last_command: TaskCommand) -> Self {
        Self { last_command, feasible: false, rejected: true, assist_mode: SwitchMode::Reverted }
    }
}

/// A planner decision and what produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    pub command: TaskCommand,
    pub reasoning: String,
    /// Prompt text sent to a language model, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// Raw model responses, in request order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    /// Errors that forced a fallback.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl PlanOutput {
    pub fn simple(command: TaskCommand, reasoning: impl Into<String>) -> Self {
        Self { command, reasoning: reasoning.into(), prompt: None, responses: Vec::new(), errors: Vec::new() }
    }
}

pub trait Planner: Send {
    /// Chooses the next task command.
    fn plan(&mut self, world: &WorldState, feedback: Option<&PlannerFeedback>) -> Result<PlanOutput>;
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn plan(&mut self, world: &WorldState, feedback: Option<&PlannerFeedback>) -> Result<PlanOutput> {
        (**self).plan(world, feedback)
    }
}
