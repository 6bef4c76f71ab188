use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::memory::{ContextMemory, MemoryEntry};
use super::parse::parse_command;
use super::prompt::{render_prompt, summarize, PromptOptions, PromptTemplate};
use super::transport::{ChatRequest, Transport};
use super::{PlanOutput, Planner, PlannerFeedback};
use crate::assigner::TaskCommand;
use crate::error::Result;
use crate::sim::WorldState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first failed request.
    pub max_retries: u32,
    /// Delay before the first retry, doubled on every further retry [s].
    pub backoff_s: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, backoff_s: 1.0 }
    }
}

/// Planner that asks a vision-language model through `T`.
pub struct LanguagePlanner<T: Transport> {
    transport: T,
    pub model: String,
    pub template: PromptTemplate,
    pub options: PromptOptions,
    pub memory: ContextMemory,
    pub retry: RetryPolicy,
}

const REPROMPT: &str = "Your previous answer did not contain a valid command. \
Answer again and end with \"Decision: <COMMAND>\" using one of: ";

impl<T: Transport> LanguagePlanner<T> {
    pub fn new(transport: T, model: impl Into<String>, options: PromptOptions, memory_capacity: usize) -> Self {
        Self {
            transport,
            model: model.into(),
            template: PromptTemplate::default(),
            options,
            memory: ContextMemory::new(memory_capacity),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request(&mut self, req: &ChatRequest, errors: &mut Vec<String>) -> Option<String> {
        let mut delay = self.retry.backoff_s;
        for attempt in 0..=self.retry.max_retries {
            match self.transport.complete(req) {
                Ok(text) => return Some(text),
                Err(e) => {
                    log::warn!("planner request attempt {} failed: {e}", attempt + 1);
                    errors.push(e.to_string());
                    if attempt < self.retry.max_retries && delay > 0.0 {
                        std::thread::sleep(Duration::from_secs_f64(delay));
                        delay *= 2.0;
                    }
                }
            }
        }
        None
    }
}

impl<T: Transport> Planner for LanguagePlanner<T> {
    fn plan(&mut self, world: &WorldState, feedback: Option<&PlannerFeedback>) -> Result<PlanOutput> {
        if let Some(fb) = feedback {
            self.memory.record_feedback(*fb);
        }
        let bundle = render_prompt(world, feedback, &self.memory, &self.options, &self.template);
        let mut req = ChatRequest {
            model: self.model.clone(),
            text: bundle.text.clone(),
            image_png_base64: Some(bundle.png_base64()?),
        };
        let mut out = PlanOutput::simple(TaskCommand::Idle, String::new());
        out.prompt = Some(bundle.text.clone());

        let mut command = None;
        for round in 0..2 {
            let Some(text) = self.request(&req, &mut out.errors) else { break };
            out.responses.push(text.clone());
            match parse_command(&text, &self.options.commands) {
                Ok(c) => {
                    command = Some(c);
                    out.reasoning = text;
                    break;
                }
                Err(e) => {
                    out.errors.push(e.to_string());
                    if round == 0 {
                        let list: Vec<&str> = self.options.commands.iter().map(|c| c.as_str()).collect();
                        req.text = format!("{}\n{REPROMPT}{}.\n", bundle.text, list.join(", "));
                    }
                }
            }
        }
        match command {
            Some(c) => out.command = c,
            None => {
                let why = out.errors.last().map_or("no response", String::as_str);
                out.reasoning = format!("fallback to IDLE: {why}");
            }
        }
        self.memory.push(MemoryEntry {
            observation: summarize(world),
            reasoning: out.reasoning.clone(),
            command: out.command,
            feedback: None,
        });
        Ok(out)
    }
}
