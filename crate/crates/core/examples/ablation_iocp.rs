//! With and without intermediate OCPs on the same seeds.
//! Usage: ablation_iocp [episodes]

use mpc_builder::harness::{aggregate, render_table, run_pipeline, Config, PipelineKind, RunOptions};

fn main() -> mpc_builder::Result<()> {
    let episodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let with = Config::default();
    let mut without = with.clone();
    without.switcher.use_iocp = false;

    let mut metrics = Vec::new();
    for cfg in [&with, &without] {
        let s = run_pipeline(cfg, &RunOptions::new(PipelineKind::Proposed, episodes, 0))?;
        metrics.extend(s.metrics);
    }
    let pipelines = aggregate(&metrics);
    print!("{}", render_table(&pipelines));
    for p in &pipelines {
        let travel: Vec<String> = p.travel.iter().map(|(seed, d)| format!("{seed}:{d:.0}")).collect();
        println!("{:<18} {}", p.pipeline, travel.join(" "));
    }
    Ok(())
}
