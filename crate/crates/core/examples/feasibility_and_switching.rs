//! Feasibility check of a lane-change target with a car alongside, and the
//! switcher's response over consecutive control steps.

use mpc_builder::ocp::{build_ocp, ControlInput, Ocp, Origin};
use mpc_builder::primitives::*;
use mpc_builder::switcher::{check_feasibility, decide, switch, SwitcherConfig, SwitcherState};

fn lane_change(lead_x: f64) -> mpc_builder::Result<Ocp> {
    let ego = EgoParams::default();
    let task = TaskParams { y_ref: 4.0, ..TaskParams::default() };
    let lead = Observed::new(PvState::new(lead_x, 4.0, 22.0, 0.0), 0.0);
    let prims = [
        make_kbm(&ego)?,
        make_lane_change(&task, &ego, LcGap::Vehicles(vec![lead]))?,
        make_constant_speed(&task, &ego)?,
    ];
    build_ocp(&prims, 20, 0.05, ego.input_space())
}

fn main() -> mpc_builder::Result<()> {
    let ego = EgoParams::default();
    let keep = build_ocp(
        &[
            make_kbm(&ego)?,
            make_lane_keep(&TaskParams::default(), &ego)?,
            make_constant_speed(&TaskParams::default(), &ego)?,
        ],
        20,
        0.05,
        ego.input_space(),
    )?;
    let x = [("x", 0.0), ("y", 0.0), ("theta", 0.0), ("v", 22.0)];
    let warm = vec![ControlInput::ZERO; 20];

    for lead_x in [30.0, 5.0] {
        let target = lane_change(lead_x)?;
        let cfg = SwitcherConfig::default();
        let r = check_feasibility(&target, &x, &warm, Origin::default(), &cfg.tolerances)?;
        println!("lead {lead_x:>4} m ahead in the target lane: feasible = {}", r.feasible);
        for v in r.violations.iter().take(3) {
            println!("    stage {} {} = {:+.3}", v.stage, v.label, v.value);
        }
        if r.violations.len() > 3 {
            println!("    ... {} violations in total", r.violations.len());
        }
    }

    // The same blocked target on repeated steps: intermediate OCPs until
    // n_max, then a rejection that falls back to lane keeping.
    let cfg = SwitcherConfig { n_max: 3, ..SwitcherConfig::default() };
    let mut state = SwitcherState::new(keep, cfg.n_max);
    let target = lane_change(5.0)?;
    for step in 0..5 {
        let (d, next) = switch(&state, &target, &x, Origin::default(), &cfg)?;
        println!(
            "step {step}: {:<12} solve {:<28} rejected={} n_iocp={}",
            d.mode.as_str(),
            mpc_builder::iocp::ocp_label(&d.solve_ocp),
            d.is_rejected,
            next.n_iocp
        );
        state = next;
    }

    println!("\ndecision table with n_max = 2:");
    for feasible in [true, false] {
        for n in 0..=2 {
            let (mode, n_next) = decide(feasible, n, 2, true);
            println!("  feasible={feasible:<5} n={n} -> {:<12} n'={n_next}", mode.as_str());
        }
    }
    Ok(())
}
