//! Runs the proposed pipeline with the language planner fed from canned
//! model responses, so no network access is needed. Every `*.txt` file in
//! the directory is one response, served in name order.
//! Usage: replay_planner [responses_dir] [seed]

use std::path::PathBuf;

use mpc_builder::harness::{run_episode, Config, PipelineKind};
use mpc_builder::planner::{LanguagePlanner, PromptOptions, ReplayTransport};
use mpc_builder::trace::Payload;

fn main() -> mpc_builder::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = Config::default();
    let planner = LanguagePlanner::new(ReplayTransport::from_dir(&dir)?, "replay", PromptOptions::default(), 5);
    let out = run_episode(PipelineKind::Proposed, &cfg, seed, Box::new(planner))?;

    for r in &out.records {
        let Payload::Plan(p) = &r.payload else { continue };
        let fb = p.feedback.map(|f| {
            if f.rejected {
                format!("{} rejected", f.last_command)
            } else {
                format!("{} {}", f.last_command, f.assist_mode.as_str())
            }
        });
        println!(
            "t={:>5.2} s {:<10} previous: {:<22} {}",
            r.time,
            p.command.as_str(),
            fb.unwrap_or_else(|| "-".into()),
            p.error.as_deref().unwrap_or("")
        );
    }
    println!("{}: travel {:.1} m, success {}", out.label, out.travel, out.success);
    Ok(())
}
