//! Builds a lane-change OCP from primitives and inspects what the fold
//! produced: state layout, constraint labels and the cost of a rollout.

use mpc_builder::ocp::{build_ocp, compose, ControlInput};
use mpc_builder::primitives::*;

fn main() -> mpc_builder::Result<()> {
    let ego = EgoParams::default();
    let task = TaskParams { y_ref: 4.0, ..TaskParams::default() };

    // A lead in the target lane, 25 m ahead and slightly slower.
    let lead = Observed::new(PvState::new(25.0, 4.0, 20.0, 0.0), 0.0);
    let prims = vec![
        make_kbm(&ego)?,
        make_lane_change(&task, &ego, LcGap::Vehicles(vec![lead]))?,
        make_constant_speed(&task, &ego)?,
        make_pv_safety(&task, &ego, 7, PvState::new(-12.0, 4.0, 24.0, 0.0))?,
    ];
    for p in &prims {
        println!("{:<4} n={} n_g={} n_h={} cost_terms={}", p.name(), p.n(), p.n_g(), p.n_h(), p.cost_terms());
    }

    // compose is associative; build_ocp is just a left fold plus a horizon.
    let pair = compose(&prims[0], &prims[1])?;
    println!("KBM ⊕ LC has {} states and {} inequalities", pair.n(), pair.n_g());

    let ocp = build_ocp(&prims, 20, 0.05, ego.input_space())?;
    println!("\nOCP {}: N={}, dt={}", ocp.provenance().join("+"), ocp.horizon(), ocp.dt());
    println!("states: {:?}", ocp.schema().iter().map(|c| c.name.as_str()).collect::<Vec<_>>());
    println!("inequalities: {:?}", ocp.ineq_labels());

    let x0 = ocp.measure(&[
        ("x", 0.0),
        ("y", 0.0),
        ("theta", 0.0),
        ("v", 22.0),
        ("pv7.x", -12.0),
        ("pv7.y", 4.0),
        ("pv7.vx", 24.0),
        ("pv7.vy", 0.0),
    ])?;
    for (name, u) in [("coast", ControlInput::ZERO), ("steer left", ControlInput::new(0.0, 0.05))] {
        let traj = ocp.rollout(&x0, &vec![u; ocp.horizon()])?;
        let worst =
            ocp.eval_constraints(&traj)?.iter().flat_map(|s| s.g.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
        let end = traj.final_state();
        println!(
            "{name:>10}: cost {:>9.2}, end y {:.2} m, worst g {:+.2}",
            ocp.trajectory_cost(&traj)?,
            end.get("y").unwrap_or(f64::NAN),
            worst
        );
    }
    Ok(())
}
