use std::path::Path;

use super::{PlanOutput, Planner, PlannerFeedback};
use crate::assigner::TaskCommand;
use crate::error::Result;
use crate::sim::WorldState;

/// Returns a fixed command sequence, then repeats the last command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScriptedPlanner {
    script: Vec<TaskCommand>,
    next: usize,
}

impl ScriptedPlanner {
    pub fn new(script: Vec<TaskCommand>) -> Self {
        Self { script, next: 0 }
    }

    /// Parses one command token per line; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let script = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<TaskCommand>>>()?;
        Ok(Self::new(script))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn next_command(&mut self) -> TaskCommand {
        let cmd = match self.script.get(self.next) {
            Some(c) => *c,
            None => self.script.last().copied().unwrap_or(TaskCommand::Idle),
        };
        self.next += 1;
        cmd
    }
}

impl Planner for ScriptedPlanner {
    fn plan(&mut self, _world: &WorldState, _feedback: Option<&PlannerFeedback>) -> Result<PlanOutput> {
        let step = self.next;
        let cmd = self.next_command();
        Ok(PlanOutput::simple(cmd, format!("scripted command #{step}")))
    }
}
