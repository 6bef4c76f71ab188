//! Experiment harness: configuration, closed-loop episodes, trace audits,
//! metrics and reports.

mod audit;
mod config;
mod episode;
mod metrics;
mod report;
mod run;

pub use audit::{lane_change_spans, LaneChangeSpan};
pub use config::{CadenceConfig, Config, PlannerKind, PlannerSection, SwitcherSection, DEFAULT_CONFIG};
pub use episode::{pipeline_label, run_episode, run_episode_from, EpisodeOutcome, PipelineKind};
pub use metrics::{aggregate, episode_metrics, EpisodeMetrics, PipelineMetrics};
pub use report::{load_metrics, render_table, render_travel_svg, write_report, Report};
pub use run::{make_planner, run_pipeline, RunOptions, RunSummary};
