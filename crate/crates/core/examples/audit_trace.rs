//! Writes an episode trace to disk, reads it back, validates it and audits
//! every lane change against the safety distance.
//! Usage: audit_trace [trace_path]

use std::path::PathBuf;

use mpc_builder::harness::{lane_change_spans, make_planner, run_episode, Config, PipelineKind};
use mpc_builder::trace::{read_trace, validate, write_trace};

fn main() -> mpc_builder::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let mut cfg = Config::default();
            cfg.episode.duration = 20.0;
            let out = run_episode(PipelineKind::Lvlm2mpc, &cfg, 2, make_planner(&cfg, PipelineKind::Lvlm2mpc)?)?;
            let path = std::env::temp_dir().join("mpcb_audit_example.trace");
            write_trace(&path, &out.records)?;
            path
        }
    };

    let report = validate(&path)?;
    println!("{}: {} records, {} warnings", path.display(), report.records, report.warnings.len());
    let records = read_trace(&path)?.records;
    let spans = lane_change_spans(&records)?;
    if spans.is_empty() {
        println!("no lane changes");
    }
    for s in spans {
        let gap = |g: Option<f64>| g.map_or("-".to_string(), |g| format!("{g:.1} m"));
        println!(
            "lane {} -> {} steps {}..={}: {} (closest ahead {}, behind {})",
            s.from,
            s.to,
            s.start_step,
            s.end_step,
            if s.safe { "safe" } else { "UNSAFE" },
            gap(s.min_gap_ahead),
            gap(s.min_gap_behind)
        );
    }
    Ok(())
}
