//! Intermediate OCP in closed loop. The target lane-change OCP requires the
//! ego to be at least 0.5 m left of the current lane center, so it starts
//! out infeasible; the iOCP keeps the lane-keep constraints while its
//! penalty pulls the ego towards the target's feasible region.

use mpc_builder::iocp::{make_iocp, ocp_label, IocpParams};
use mpc_builder::mppi::{solve, MppiConfig};
use mpc_builder::ocp::{build_ocp, ControlInput, Origin};
use mpc_builder::primitives::*;
use mpc_builder::sim::EgoState;
use mpc_builder::switcher::{switch, SwitchMode, SwitcherConfig, SwitcherState};

fn main() -> mpc_builder::Result<()> {
    let ego = EgoParams::default();
    let task = TaskParams::default();
    let keep = build_ocp(
        &[make_kbm(&ego)?, make_lane_keep(&task, &ego)?, make_constant_speed(&task, &ego)?],
        20,
        0.05,
        ego.input_space(),
    )?;
    let narrow = EgoParams { y_min: 0.5, ..ego };
    let lc_task = TaskParams { y_ref: 4.0, ..task };
    let target = build_ocp(
        &[make_kbm(&ego)?, make_lane_change(&lc_task, &narrow, LcGap::Disabled)?, make_constant_speed(&task, &ego)?],
        20,
        0.05,
        ego.input_space(),
    )?;

    // A stiffer penalty than the default so it beats the lane-keep cost.
    let iocp = IocpParams { rho_g: 50.0, ..IocpParams::default() };
    let i = make_iocp(&keep, &target, &iocp)?;
    println!("{}", ocp_label(&i));
    println!("  states: {} (prev {} + target {})", i.n(), keep.n(), target.n());
    println!("  hard constraints: {:?}", i.ineq_labels());
    println!("  same constraints as prev: {}\n", i.same_constraints(&keep));

    let cfg = SwitcherConfig { iocp, ..SwitcherConfig::default() };
    let mppi = MppiConfig::default();
    let mut state = SwitcherState::new(keep, cfg.n_max);
    let mut car = EgoState::new(0.0, 0.0, 0.0, 22.0);
    let mut prev_input = ControlInput::ZERO;
    let mut last_mode = None;
    for step in 0..120u64 {
        let t = step as f64 * 0.05;
        let x = [("x", car.x), ("y", car.y), ("theta", car.theta), ("v", car.v)];
        let origin = Origin::new(t, prev_input);
        let (d, mut next) = switch(&state, &target, &x, origin, &cfg)?;
        if last_mode != Some(d.mode) {
            println!("t={t:>4.2} s y={:>5.2} m -> {} ({})", car.y, d.mode.as_str(), ocp_label(&d.solve_ocp));
            last_mode = Some(d.mode);
        }
        let x0 = d.solve_ocp.measure(&x)?;
        let r = solve(&d.solve_ocp, &x0, &state.last_warm_start, origin, &mppi.with_seed(step))?;
        next.last_warm_start = r.nominal_inputs;
        car = car.step(r.first_input, ego.wheelbase, 0.05);
        prev_input = r.first_input;
        state = next;
        if d.mode == SwitchMode::Direct && (car.y - 4.0).abs() < 0.2 {
            println!("t={:>4.2} s reached the target lane, y={:.2} m", t + 0.05, car.y);
            break;
        }
    }
    Ok(())
}
