use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mpc_builder::harness::{
    lane_change_spans, load_metrics, render_table, run_pipeline, write_report, Config, PipelineKind, PlannerKind,
    Report, RunOptions,
};
use mpc_builder::trace::{read_trace, validate};
use mpc_builder::Result;

#[derive(Parser)]
#[command(name = "mpcb", version, about = "Run, report on and audit closed-loop driving experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pipeline {
    Proposed,
    Lvlm2mpc,
    Lvlm2pid,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Api,
    Scripted,
    Replay,
    Reckless,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run episodes of one pipeline and write traces plus a report.
    Run {
        #[arg(long, value_enum)]
        pipeline: Pipeline,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        no_safety_instructions: bool,
        #[arg(long)]
        no_iocp: bool,
        #[arg(long, value_enum)]
        planner: Option<PlannerArg>,
        /// Command script for the scripted planner.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Re-aggregate every trace under a run directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Validate a trace and label its lane changes.
    Audit {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { pipeline, episodes, seed, config, no_safety_instructions, no_iocp, planner, script, out } => {
            let mut cfg = match &config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            if no_safety_instructions {
                cfg.planner.safety_instructions = false;
            }
            if no_iocp {
                cfg.switcher.use_iocp = false;
            }
            if let Some(p) = planner {
                cfg.planner.kind = match p {
                    PlannerArg::Api => PlannerKind::Api,
                    PlannerArg::Scripted => PlannerKind::Scripted,
                    PlannerArg::Replay => PlannerKind::Replay,
                    PlannerArg::Reckless => PlannerKind::Reckless,
                };
            }
            if script.is_some() {
                cfg.planner.script = script;
            }
            let kind = match pipeline {
                Pipeline::Proposed => PipelineKind::Proposed,
                Pipeline::Lvlm2mpc => PipelineKind::Lvlm2mpc,
                Pipeline::Lvlm2pid => PipelineKind::Lvlm2pid,
            };
            let opts = RunOptions { out: Some(out.clone()), ..RunOptions::new(kind, episodes, seed) };
            let summary = run_pipeline(&cfg, &opts)?;
            for m in &summary.metrics {
                println!(
                    "{} seed {}: {} travel {:.1} m, {} lane changes ({} safe), {} assisted, {} rejected",
                    m.pipeline,
                    m.seed,
                    if m.success { "ok" } else { "COLLISION" },
                    m.travel,
                    m.lane_changes,
                    m.safe_lane_changes,
                    m.assisted,
                    m.rejected
                );
            }
            report(&out)
        }
        Cmd::Report { input } => report(&input),
        Cmd::Audit { trace } => {
            let v = validate(&trace)?;
            for w in &v.warnings {
                eprintln!("warning: {w}");
            }
            let spans = lane_change_spans(&read_trace(&trace)?.records)?;
            println!("{} records, {} lane changes", v.records, spans.len());
            for s in &spans {
                let gap = |g: Option<f64>| g.map_or("-".to_string(), |g| format!("{g:.2}"));
                println!(
                    "steps {}..={} lane {}->{} {} {} (min gap ahead {}, behind {})",
                    s.start_step,
                    s.end_step,
                    s.from,
                    s.to,
                    if s.completed { "completed" } else { "dropped" },
                    if s.safe { "SAFE" } else { "UNSAFE" },
                    gap(s.min_gap_ahead),
                    gap(s.min_gap_behind)
                );
            }
            Ok(())
        }
    }
}

fn report(dir: &std::path::Path) -> Result<()> {
    let report = Report::new(load_metrics(dir)?);
    write_report(dir, &report)?;
    print!("{}", render_table(&report.pipelines));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
