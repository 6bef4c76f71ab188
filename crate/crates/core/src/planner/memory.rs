use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::PlannerFeedback;
use crate::assigner::TaskCommand;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub observation: String,
    pub reasoning: String,
    pub command: TaskCommand,
    /// Filled in once the outcome of the command is known.
    pub feedback: Option<PlannerFeedback>,
}

/// Bounded FIFO of past planning rounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextMemory {
    capacity: usize,
    entries: VecDeque<MemoryEntry>,
}

impl ContextMemory {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        if self.capacity == 0 {
            return;
        }
        while self.entries.len() >= self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    /// Attaches feedback to the newest entry.
    pub fn record_feedback(&mut self, feedback: PlannerFeedback) {
        if let Some(last) = self.entries.back_mut() {
            last.feedback = Some(feedback);
        }
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }
}
