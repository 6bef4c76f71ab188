//! One closed-loop episode in dense traffic with the built-in reckless
//! planner. Usage: closed_loop_episode [proposed|lvlm2mpc|lvlm2pid] [seed]

use mpc_builder::harness::{episode_metrics, lane_change_spans, make_planner, run_episode, Config, PipelineKind};
use mpc_builder::trace::{EventRecord, Payload};

fn main() -> mpc_builder::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: PipelineKind = args.next().as_deref().unwrap_or("proposed").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = Config::default();
    let out = run_episode(kind, &cfg, seed, make_planner(&cfg, kind)?)?;
    let m = episode_metrics(&out.records)?;
    println!(
        "{} seed {seed}: {} after {} steps",
        out.label,
        if out.success { "success" } else { "failure" },
        out.steps
    );
    println!("travel {:.1} m", out.travel);
    if let Some(id) = out.collision {
        println!("collided with vehicle {id}");
    }
    println!(
        "{} plans, {} lane-change commands, {} assisted, {} rejected",
        m.planning_steps, m.lane_change_decisions, m.assisted, m.rejected
    );
    for s in lane_change_spans(&out.records)? {
        println!(
            "  lane {} -> {} at steps {}..={}: {}{}",
            s.from,
            s.to,
            s.start_step,
            s.end_step,
            if s.safe { "safe" } else { "UNSAFE" },
            if s.completed { "" } else { " (dropped)" }
        );
    }
    let errors = out.records.iter().filter(|r| matches!(r.payload, Payload::Event(EventRecord::Error { .. }))).count();
    if errors > 0 {
        println!("{errors} error events in the trace");
    }
    Ok(())
}
