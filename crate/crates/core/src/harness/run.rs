//! Multi-seed runs of one pipeline.

use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;

use super::config::{Config, PlannerKind};
use super::episode::{pipeline_label, run_episode, EpisodeOutcome, PipelineKind};
use super::metrics::{episode_metrics, EpisodeMetrics};
use crate::error::{Error, Result};
use crate::planner::{
    HttpTransport, LanguagePlanner, Planner, PromptOptions, PromptTemplate, RecklessPlanner, ReplayTransport,
    ScriptedPlanner,
};
use crate::trace::write_trace;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub kind: PipelineKind,
    pub episodes: usize,
    /// Seed of the first episode; episode `i` uses `seed + i`.
    pub seed: u64,
    /// Traces go to `<out>/<label>/<seed>.trace` when set.
    pub out: Option<PathBuf>,
    /// Run episodes on the rayon pool.
    pub parallel: bool,
}

impl RunOptions {
    pub fn new(kind: PipelineKind, episodes: usize, seed: u64) -> Self {
        Self { kind, episodes, seed, out: None, parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub metrics: Vec<EpisodeMetrics>,
    pub traces: Vec<PathBuf>,
}

/// Builds a fresh planner for one episode from the planner config.
pub fn make_planner(cfg: &Config, kind: PipelineKind) -> Result<Box<dyn Planner>> {
    let p = &cfg.planner;
    let options = PromptOptions {
        safety_instructions: p.safety_instructions,
        d_safe: cfg.task.d_acc,
        commands: kind.commands(),
        bev: p.bev,
    };
    let template = match &p.template {
        Some(path) => PromptTemplate::from_file(path)?,
        None => PromptTemplate::default(),
    };
    Ok(match p.kind {
        PlannerKind::Reckless => Box::new(RecklessPlanner::new(p.reckless)),
        PlannerKind::Scripted => {
            let path = p.script.as_ref().ok_or_else(|| Error::Config("scripted planner needs `script`".into()))?;
            Box::new(ScriptedPlanner::from_file(path)?)
        }
        PlannerKind::Replay => {
            let dir = p.replay_dir.as_ref().ok_or_else(|| Error::Config("replay planner needs `replay_dir`".into()))?;
            let t = ReplayTransport::from_dir(dir)?;
            Box::new(
                LanguagePlanner::new(t, &p.model, options, p.memory_capacity)
                    .with_template(template)
                    .with_retry(p.retry),
            )
        }
        PlannerKind::Api => {
            let key = std::env::var(&p.api_key_env).ok();
            if key.is_none() {
                log::warn!("{} is not set; requests go out without a key", p.api_key_env);
            }
            let t = HttpTransport::new(&p.endpoint, key, Duration::from_secs_f64(p.timeout_s));
            Box::new(
                LanguagePlanner::new(t, &p.model, options, p.memory_capacity)
                    .with_template(template)
                    .with_retry(p.retry),
            )
        }
    })
}

fn one(cfg: &Config, opts: &RunOptions, seed: u64) -> Result<(EpisodeOutcome, Option<PathBuf>)> {
    let planner = make_planner(cfg, opts.kind)?;
    let outcome = run_episode(opts.kind, cfg, seed, planner)?;
    let path = match &opts.out {
        Some(dir) => {
            let path = dir.join(&outcome.label).join(format!("{seed}.trace"));
            write_trace(&path, &outcome.records)?;
            Some(path)
        }
        None => None,
    };
    Ok((outcome, path))
}

/// Runs `opts.episodes` seeds of one pipeline; results are in seed order.
pub fn run_pipeline(cfg: &Config, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..opts.episodes as u64).map(|i| opts.seed + i).collect();
    let results: Vec<Result<(EpisodeOutcome, Option<PathBuf>)>> = if opts.parallel {
        seeds.par_iter().map(|&s| one(cfg, opts, s)).collect()
    } else {
        seeds.iter().map(|&s| one(cfg, opts, s)).collect()
    };
    let mut summary = RunSummary { label: pipeline_label(opts.kind, cfg), metrics: Vec::new(), traces: Vec::new() };
    for r in results {
        let (outcome, path) = r?;
        log::info!(
            "{} seed {}: success={} travel={:.1} m",
            outcome.label,
            outcome.seed,
            outcome.success,
            outcome.travel
        );
        summary.metrics.push(episode_metrics(&outcome.records)?);
        summary.traces.extend(path);
    }
    Ok(summary)
}
