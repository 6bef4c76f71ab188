//! Checks shared by the topical test files and the acceptance target. Each
//! returns a short summary on success and the first discrepancy otherwise.

use std::time::Instant;

use mpc_builder::assigner::TaskCommand;
use mpc_builder::iocp::{is_iocp, make_iocp, IocpParams};
use mpc_builder::mppi::{penalized_cost, solve, MppiConfig};
use mpc_builder::ocp::{
    base_name, build_ocp, ControlInput, Derivative, InputBox, MpcPrimitive, Ocp, Origin, PrimitiveKind, PrimitiveModel,
    Slots, Stage, StateComponent, StateVector,
};
use mpc_builder::planner::parse_command;
use mpc_builder::primitives::*;
use mpc_builder::switcher::{
    apply, check_feasibility, FeasibilityReport, SwitchMode, SwitcherConfig, SwitcherState, Tolerances,
};
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::algebra;
use super::oracle::{brute_force_violations, Lateral, Scene, DT, N};

pub type Check = Result<String, String>;

// ---------------------------------------------------------------- algebra

pub fn composition_suite(cases: u32) -> Check {
    let start = Instant::now();
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    runner.run(&algebra::case(), |c| algebra::check_laws(&c)).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "{cases} cases took {secs:.2} s");
    Ok(format!("{cases} cases in {secs:.2} s"))
}

// ---------------------------------------------------------------- Table I

fn stage(u: ControlInput) -> Stage {
    Stage::new(0, 0.0, DT, u, u)
}

fn ego_state(x: f64, y: f64, theta: f64, v: f64) -> StateVector {
    StateVector::from_pairs(&[("x", x), ("y", y), ("theta", theta), ("v", v)])
}

fn zero(v: f64, what: &str) -> Result<(), String> {
    if v.abs() <= 1e-12 {
        Ok(())
    } else {
        Err(format!("{what}: expected 0 at the boundary, got {v:e}"))
    }
}

pub fn table_one() -> Check {
    let ego = EgoParams::default();
    let task = TaskParams::default();
    let lead = Observed::new(PvState::new(30.0, 0.0, 20.0, 0.0), 0.0);
    let rows: Vec<(&str, MpcPrimitive, usize, usize, usize, usize)> = vec![
        ("KBM", make_kbm(&ego).unwrap(), 4, 0, 0, 0),
        ("LK", make_lane_keep(&task, &ego).unwrap(), 0, 5, 4, 0),
        ("LC", make_lane_change(&task, &ego, LcGap::Vehicles(vec![lead])).unwrap(), 0, 5, 5, 0),
        ("CS", make_constant_speed(&task, &ego).unwrap(), 0, 3, 2, 0),
        ("ACC", make_acc(&task, &ego, Some(lead)).unwrap(), 0, 3, 3, 0),
        ("PV", make_pv_safety(&task, &ego, 1, PvState::new(0.0, 4.0, 20.0, 0.0)).unwrap(), 4, 0, 1, 0),
    ];
    for (name, p, n, terms, n_g, n_h) in &rows {
        ensure!(
            (p.n(), p.cost_terms(), p.n_g(), p.n_h()) == (*n, *terms, *n_g, *n_h),
            "{name}: (n, terms, n_g, n_h) = {:?}, expected {:?}",
            (p.n(), p.cost_terms(), p.n_g(), p.n_h()),
            (n, terms, n_g, n_h)
        );
    }

    let u0 = ControlInput::ZERO;
    // KBM: zero cost, Euler rollout, yaw rate.
    let kbm = &rows[0].1;
    ensure!(
        kbm.stage_cost(&ego_state(3.0, 1.0, 0.2, 17.0), &stage(ControlInput::new(2.0, 0.3))).unwrap() == 0.0,
        "KBM cost"
    );
    let kbm_ocp = build_ocp(std::slice::from_ref(kbm), 20, 0.05, ego.input_space()).unwrap();
    let t = kbm_ocp.rollout(&ego_state(0.0, 0.0, 0.0, 10.0), &[u0; 20]).unwrap();
    let end = t.final_state();
    ensure!(
        (end.get("x").unwrap() - 10.0).abs() < 1e-12 && end.get("y").unwrap() == 0.0 && end.get("v").unwrap() == 10.0,
        "KBM rollout ended at {:?}",
        end.values()
    );
    let yaw = kbm_yaw_rate(10.0, 0.1, 2.5);
    ensure!((yaw - 4.0 * 0.1f64.tan()).abs() < 1e-15 && (yaw - 0.4013).abs() < 5e-5, "yaw rate {yaw}");

    // LK: bounds are zero exactly at the boundary, zero cost at the center.
    let lk = &rows[1].1;
    zero(lk.ineq(&ego_state(0.0, ego.y_min, 0.0, 20.0), &stage(u0)).unwrap()[0], "LK y_min")?;
    zero(lk.ineq(&ego_state(0.0, ego.y_max, 0.0, 20.0), &stage(u0)).unwrap()[1], "LK y_max")?;
    zero(
        lk.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::new(0.0, ego.delta_min))).unwrap()[2],
        "LK delta_min",
    )?;
    zero(
        lk.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::new(0.0, ego.delta_max))).unwrap()[3],
        "LK delta_max",
    )?;
    ensure!(lk.stage_cost(&ego_state(5.0, 0.0, 0.0, 20.0), &stage(u0)).unwrap() == 0.0, "LK cost at the lane center");

    // LC: gap boundary and the half-distance example.
    let lc_task = TaskParams { y_ref: 4.0, ..task };
    for (dx, expect) in [(task.d_safe_lc, 0.0), (-task.d_safe_lc, 0.0), (task.d_safe_lc / 2.0, task.d_safe_lc / 2.0)] {
        let n = Observed::new(PvState::new(dx, 4.0, 0.0, 0.0), 0.0);
        let lc = make_lane_change(&lc_task, &ego, LcGap::Vehicles(vec![n])).unwrap();
        let g = lc.ineq(&ego_state(0.0, 2.0, 0.0, 20.0), &stage(u0)).unwrap()[4];
        zero(g - expect, &format!("LC gap at dx = {dx}"))?;
    }
    let lc = make_lane_change(&lc_task, &ego, LcGap::Disabled).unwrap();
    ensure!(lc.stage_cost(&ego_state(0.0, 4.0, 0.0, 20.0), &stage(u0)).unwrap() == 0.0, "LC cost at y_ref");

    // CS: input bounds and zero cost at v_ref.
    let cs = &rows[3].1;
    zero(cs.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::new(ego.a_min, 0.0))).unwrap()[0], "CS a_min")?;
    zero(cs.ineq(&ego_state(0.0, 0.0, 0.0, 20.0), &stage(ControlInput::new(ego.a_max, 0.0))).unwrap()[1], "CS a_max")?;
    ensure!(cs.stage_cost(&ego_state(0.0, 0.0, 0.0, task.v_ref), &stage(u0)).unwrap() == 0.0, "CS cost at v_ref");

    // ACC: gap boundary on either side, zero position cost at d_acc.
    let acc = &rows[4].1;
    zero(acc.ineq(&ego_state(30.0 - task.d_safe_acc, 0.0, 0.0, 20.0), &stage(u0)).unwrap()[2], "ACC gap ahead")?;
    zero(acc.ineq(&ego_state(30.0 + task.d_safe_acc, 0.0, 0.0, 20.0), &stage(u0)).unwrap()[2], "ACC gap behind")?;
    ensure!(
        acc.stage_cost(&ego_state(30.0 - task.d_acc, 0.0, 0.0, 20.0), &stage(u0)).unwrap() == 0.0,
        "ACC cost at d_acc"
    );

    // PV: boundary, constant-velocity rollout, brute-force sign, rotations.
    let pv_eval = |ex: f64, ey: f64, p: PvState| {
        let prim = make_pv_safety(&task, &ego, 1, p).unwrap();
        let x = StateVector::from_pairs(&[
            ("x", ex),
            ("y", ey),
            ("theta", 0.0),
            ("v", 0.0),
            ("pv1.x", p.x),
            ("pv1.y", p.y),
            ("pv1.vx", p.vx),
            ("pv1.vy", p.vy),
        ]);
        prim.ineq(&x, &stage(u0)).unwrap()[0]
    };
    zero(pv_eval(0.0, 0.0, PvState::new(0.0, task.d_safe_pv, 0.0, 0.0)), "PV keep-out")?;
    let pv_ocp = build_ocp(
        &[kbm.clone(), make_pv_safety(&task, &ego, 1, PvState::new(20.0, 0.0, 10.0, 0.0)).unwrap()],
        20,
        0.05,
        ego.input_space(),
    )
    .unwrap();
    let t = pv_ocp.rollout(&pv_ocp.default_state(), &[u0; 20]).unwrap();
    let e = t.final_state();
    ensure!(
        (e.get("pv1.x").unwrap() - 30.0).abs() < 1e-12 && e.get("pv1.vx").unwrap() == 10.0,
        "PV rollout ended at {:?}",
        e.values()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (ex, ey) = (rng.random_range(-20.0..20.0), rng.random_range(-10.0..10.0));
        let p = PvState::new(rng.random_range(-20.0..20.0), rng.random_range(-10.0..10.0), 0.0, 0.0);
        let inside = (ex - p.x).hypot(ey - p.y) < task.d_safe_pv;
        ensure!((pv_eval(ex, ey, p) > 0.0) == inside, "PV sign at ego ({ex}, {ey}), pv {p:?}");
        let base = pv_eval(ex, ey, p);
        for r in 0..8 {
            let a = r as f64 * std::f64::consts::FRAC_PI_4;
            let (s, c) = a.sin_cos();
            let (dx, dy) = (p.x - ex, p.y - ey);
            let q = PvState::new(ex + c * dx - s * dy, ey + s * dx + c * dy, 0.0, 0.0);
            ensure!((pv_eval(ex, ey, q) - base).abs() < 1e-12, "PV rotation {r} changed the constraint");
        }
    }
    Ok("6 rows, boundaries at 1e-12".into())
}

// ---------------------------------------------------------------- feasibility

pub fn pairs(m: &[(String, f64)]) -> Vec<(&str, f64)> {
    m.iter().map(|(n, v)| (n.as_str(), *v)).collect()
}

pub fn feasibility_agreement(scenes: u64) -> Check {
    let mut feasible = 0;
    for seed in 0..scenes {
        let s = Scene::random(seed);
        let ocp = s.ocp();
        let m = s.measurements();
        let report = check_feasibility(&ocp, pairs(&m).as_slice(), &s.shifted, s.origin(), &Tolerances::default())
            .map_err(|e| e.to_string())?;
        let mut got: Vec<(usize, String)> = report.violations.iter().map(|v| (v.stage, v.label.clone())).collect();
        got.sort();
        let expected = brute_force_violations(&s);
        ensure!(
            report.feasible == expected.is_empty(),
            "scene {seed}: feasible {} vs oracle {}",
            report.feasible,
            expected.is_empty()
        );
        ensure!(got == expected, "scene {seed}: violations {got:?} vs oracle {expected:?}");
        feasible += report.feasible as usize;
    }
    let infeasible = scenes as usize - feasible;
    ensure!(feasible >= 20 && infeasible >= 20, "unbalanced scenes: {feasible} feasible, {infeasible} infeasible");
    Ok(format!("{scenes}/{scenes} agree ({feasible} feasible, {infeasible} infeasible)"))
}

// ---------------------------------------------------------------- switcher

fn switch_ocps() -> (Ocp, Ocp) {
    let s = Scene::random(11);
    let keep = Scene { lateral: Lateral::Keep, ..s.clone() };
    let n = Observed::new(PvState::new(s.ego[0] + 3.0, 4.0, 20.0, 0.0), s.t0);
    let change = Scene { lateral: Lateral::Change(vec![n]), ..s };
    (keep.ocp(), change.ocp())
}

/// The decision table of the switcher, written out independently: mode,
/// next count, whether the accepted OCP moves to the target, rejection.
fn reference(feasible: bool, n: usize, n_max: usize, use_iocp: bool) -> (SwitchMode, usize, bool, bool) {
    match (feasible, use_iocp && n < n_max) {
        (true, _) => (SwitchMode::Direct, 0, true, false),
        (false, true) => (SwitchMode::Intermediate, n + 1, false, false),
        (false, false) => (SwitchMode::Reverted, 0, false, true),
    }
}

pub fn switcher_table() -> Check {
    let (prev, target) = switch_ocps();
    let n_max = 50;
    let mut rows = 0;
    for use_iocp in [true, false] {
        let cfg = SwitcherConfig { n_max, use_iocp, ..SwitcherConfig::default() };
        for feasible in [true, false] {
            for n in 0..=n_max {
                let mut state = SwitcherState::new(prev.clone(), n_max);
                state.n_iocp = n;
                let report = if feasible { FeasibilityReport::feasible() } else { FeasibilityReport::default() };
                let (d, next) = apply(&state, &target, report, &cfg).map_err(|e| e.to_string())?;
                let (mode, count, moves, rejected) = reference(feasible, n, n_max, use_iocp);
                ensure!(
                    d.mode == mode,
                    "feasible={feasible} n={n} iocp={use_iocp}: mode {:?}, expected {mode:?}",
                    d.mode
                );
                ensure!(next.n_iocp == count, "feasible={feasible} n={n}: count {} expected {count}", next.n_iocp);
                ensure!(d.is_rejected == rejected, "feasible={feasible} n={n}: is_rejected {}", d.is_rejected);
                let expected_prev = if moves { &target } else { &prev };
                ensure!(
                    next.prev_ocp.provenance() == expected_prev.provenance(),
                    "feasible={feasible} n={n}: prev OCP"
                );
                let solved = match mode {
                    SwitchMode::Direct => target.provenance().to_vec(),
                    SwitchMode::Reverted => prev.provenance().to_vec(),
                    SwitchMode::Intermediate => {
                        ensure!(is_iocp(&d.solve_ocp), "n={n}: intermediate mode without an iOCP");
                        make_iocp(&prev, &target, &cfg.iocp).unwrap().provenance().to_vec()
                    }
                };
                ensure!(d.solve_ocp.provenance() == solved.as_slice(), "feasible={feasible} n={n}: solved OCP");
                rows += 1;
            }
        }
    }
    // A run of infeasible steps: n_max intermediates, one reversion, then the
    // count starts over.
    let cfg = SwitcherConfig::default();
    let mut state = SwitcherState::new(prev.clone(), n_max);
    let mut modes = Vec::new();
    for _ in 0..n_max + 2 {
        let (d, next) = apply(&state, &target, FeasibilityReport::default(), &cfg).map_err(|e| e.to_string())?;
        modes.push(d.mode);
        state = next;
    }
    ensure!(modes[..n_max].iter().all(|m| *m == SwitchMode::Intermediate), "first {n_max} steps not intermediate");
    ensure!(
        modes[n_max] == SwitchMode::Reverted && modes[n_max + 1] == SwitchMode::Intermediate,
        "no reset after reversion"
    );
    Ok(format!("{rows} table rows and a {}-step run", n_max + 2))
}

// ---------------------------------------------------------------- iOCP

fn direct_penalty(g: &[f64], h: &[f64], rho_g: f64, rho_h: f64) -> f64 {
    let mut s = 0.0;
    for v in g {
        if *v > 0.0 {
            s += rho_g * v * v;
        }
    }
    for v in h {
        s += rho_h * v * v;
    }
    s
}

fn random_inputs(rng: &mut ChaCha8Rng, scale: f64) -> Vec<ControlInput> {
    let (a0, d0) = (rng.random_range(-3.0..3.0) * scale, rng.random_range(-0.05..0.05) * scale);
    (0..N)
        .map(|_| {
            ControlInput::new(a0 + rng.random_range(-1.0..1.0) * scale, d0 + rng.random_range(-0.02..0.02) * scale)
        })
        .collect()
}

/// Previous and target OCPs of a scene: keep the current lane with all PVs,
/// change lanes with only the first PV.
fn iocp_pair(seed: u64) -> (Scene, Ocp, Ocp) {
    let s = Scene::random(seed);
    let lane = (s.ego[1] / 4.0).round() * 4.0;
    let keep = Scene { lateral: Lateral::Keep, task: TaskParams { y_ref: lane, ..s.task }, ..s.clone() };
    let target_lane = if lane > 0.0 { lane - 4.0 } else { 4.0 };
    let n = Observed::new(PvState::new(s.ego[0] + 8.0, target_lane, 22.0, 0.0), s.t0);
    let change = Scene {
        lateral: Lateral::Change(vec![n]),
        task: TaskParams { y_ref: target_lane, ..s.task },
        pvs: s.pvs.iter().take(1).copied().collect(),
        ..s.clone()
    };
    (s, keep.ocp(), change.ocp())
}

#[allow(clippy::needless_range_loop)]
pub fn iocp_conformance(trajectories: usize, prev_feasible: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let strip = |v: Vec<String>| v.iter().map(|l| base_name(l).to_string()).collect::<Vec<_>>();
    let mut checked = 0;
    let mut feasible_seen = 0;
    let mut seed = 1000;
    while checked < trajectories || feasible_seen < prev_feasible {
        seed += 1;
        ensure!(
            seed < 1000 + 20 * (trajectories + prev_feasible) as u64,
            "not enough prev-feasible cases ({feasible_seen})"
        );
        let (s, prev, target) = iocp_pair(seed);
        let params = IocpParams {
            rho_g: rng.random_range(0.1..20.0),
            rho_h: rng.random_range(0.1..20.0),
            include_target_cost: false,
        };
        let i = make_iocp(&prev, &target, &params).map_err(|e| e.to_string())?;
        ensure!(i.n() == prev.n() + target.n(), "seed {seed}: state dimension {}", i.n());
        ensure!(i.n_g() == prev.n_g() && i.n_h() == prev.n_h(), "seed {seed}: constraint counts");
        ensure!(strip(i.ineq_labels()) == strip(prev.ineq_labels()), "seed {seed}: inequality labels differ");
        ensure!(strip(i.eq_labels()) == strip(prev.eq_labels()), "seed {seed}: equality labels differ");
        ensure!(i.same_constraints(&prev), "seed {seed}: same_constraints is false");

        let m = s.measurements();
        let p = pairs(&m);
        let inputs = random_inputs(&mut rng, if checked % 2 == 0 { 1.0 } else { 0.3 });
        let origin = s.origin();
        let tp = prev.rollout_from(&prev.measure(p.as_slice()).unwrap(), &inputs, origin).unwrap();
        let tt = target.rollout_from(&target.measure(p.as_slice()).unwrap(), &inputs, origin).unwrap();
        let ti = i.rollout_from(&i.measure(p.as_slice()).unwrap(), &inputs, origin).unwrap();
        let (cp, ct, ci) = (
            prev.eval_constraints(&tp).unwrap(),
            target.eval_constraints(&tt).unwrap(),
            i.eval_constraints(&ti).unwrap(),
        );
        ensure!(ci == cp, "seed {seed}: iOCP constraint values differ from prev");
        for k in 0..=N {
            let expected = prev.stage_cost(&tp.states[k], &prev.stage_of(&tp, k))
                + if k < N { direct_penalty(&ct[k].g, &ct[k].h, params.rho_g, params.rho_h) } else { 0.0 };
            let got = i.stage_cost(&ti.states[k], &i.stage_of(&ti, k));
            ensure!(
                (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "seed {seed} stage {k}: iOCP cost {got} vs {expected}"
            );
        }
        checked += 1;

        let prev_ok = cp.iter().all(|c| c.g.iter().all(|g| *g <= 0.0) && c.h.iter().all(|h| h.abs() <= 1e-6));
        if prev_ok {
            let i_ok = ci.iter().all(|c| c.g.iter().all(|g| *g <= 0.0) && c.h.iter().all(|h| h.abs() <= 1e-6));
            ensure!(i_ok, "seed {seed}: prev-feasible trajectory is iOCP-infeasible");
            let tol = Tolerances::default();
            let rp = check_feasibility(&prev, p.as_slice(), &inputs, origin, &tol).unwrap();
            let ri = check_feasibility(&i, p.as_slice(), &inputs, origin, &tol).unwrap();
            ensure!(rp.feasible && ri.feasible, "seed {seed}: warm-start check disagrees");
            feasible_seen += 1;
        }
    }
    Ok(format!("{checked} trajectories, {feasible_seen} prev-feasible"))
}

// ---------------------------------------------------------------- MPPI

/// 1-D double integrator `ṗ = w, ẇ = a` with quadratic cost to the origin
/// and a speed limit `|w| ≤ 2`.
#[derive(Debug)]
struct DoubleIntegrator;

impl PrimitiveModel for DoubleIntegrator {
    fn states(&self) -> Vec<StateComponent> {
        vec![StateComponent::new("p", "m"), StateComponent::new("w", "m/s")]
    }
    fn cost_terms(&self) -> usize {
        3
    }
    fn ineq_labels(&self) -> Vec<String> {
        vec!["w_max".into(), "w_min".into()]
    }
    fn derivative(&self, s: &Slots, u: ControlInput, dx: &mut Derivative) {
        dx.set(0, s.own(1));
        dx.set(1, u.a);
    }
    fn stage_cost(&self, s: &Slots, stage: &Stage) -> f64 {
        s.own(0).powi(2) + 0.1 * s.own(1).powi(2) + 0.01 * stage.input.a.powi(2)
    }
    fn ineq(&self, s: &Slots, _stage: &Stage, out: &mut [f64]) {
        out[0] = s.own(1) - 2.0;
        out[1] = -2.0 - s.own(1);
    }
}

pub fn double_integrator() -> Ocp {
    let bounds = InputBox::new(-5.0, 5.0, -0.4, 0.4).unwrap();
    let p = MpcPrimitive::new("DI", PrimitiveKind::EgoDynamics, bounds, DoubleIntegrator).unwrap();
    build_ocp(&[p], N, DT, bounds).unwrap()
}

pub fn di_state(ocp: &Ocp, p: f64, w: f64) -> StateVector {
    ocp.measure(&[("p", p), ("w", w)]).unwrap()
}

fn same_bits(a: &[ControlInput], b: &[ControlInput]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| x.a.to_bits() == y.a.to_bits() && x.delta.to_bits() == y.delta.to_bits())
}

pub fn mppi_properties(seeds: u64) -> Check {
    let ocp = double_integrator();
    let origin = Origin::default();
    let base = MppiConfig { samples: 256, ..MppiConfig::default() };
    let mut strictly = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = di_state(&ocp, rng.random_range(-6.0..6.0), rng.random_range(-3.0..3.0));
        let warm: Vec<ControlInput> = (0..N).map(|_| ControlInput::new(rng.random_range(-2.0..2.0), 0.0)).collect();
        let cfg = base.with_seed(seed);
        let r = solve(&ocp, &x0, &warm, origin, &cfg).map_err(|e| e.to_string())?;
        let warm_cost = penalized_cost(&ocp, &ocp.rollout(&x0, &warm).unwrap(), cfg.mu, cfg.eps_h).unwrap();
        let got = penalized_cost(&ocp, &ocp.rollout(&x0, &r.inputs).unwrap(), cfg.mu, cfg.eps_h).unwrap();
        ensure!(got <= warm_cost, "seed {seed}: cost {got} above the warm start {warm_cost}");
        ensure!((got - r.cost).abs() <= 1e-9 * got.abs().max(1.0), "seed {seed}: reported cost {} vs {got}", r.cost);
        ensure!(r.warm_start_cost == warm_cost, "seed {seed}: warm-start cost {} vs {warm_cost}", r.warm_start_cost);
        ensure!(r.inputs.iter().all(|u| ocp.input_space().contains(*u)), "seed {seed}: input outside U");
        strictly += (got < warm_cost) as usize;

        let again = solve(&ocp, &x0, &warm, origin, &cfg).unwrap();
        let serial = solve(&ocp, &x0, &warm, origin, &MppiConfig { parallel: false, ..cfg.clone() }).unwrap();
        for other in [&again, &serial] {
            ensure!(same_bits(&r.inputs, &other.inputs), "seed {seed}: inputs not bitwise identical");
            ensure!(r.cost.to_bits() == other.cost.to_bits(), "seed {seed}: cost not bitwise identical");
        }
    }

    // Zero warm start from p = 5: one iteration with K = 256 must improve.
    let x0 = di_state(&ocp, 5.0, 0.0);
    let r = solve(&ocp, &x0, &[ControlInput::ZERO; N], origin, &base).unwrap();
    ensure!(r.cost < r.warm_start_cost, "no improvement over zero inputs: {} vs {}", r.cost, r.warm_start_cost);

    // A single sample is the warm start itself.
    let warm: Vec<ControlInput> = (0..N).map(|k| ControlInput::new(0.1 * k as f64 - 1.0, 0.01)).collect();
    let one = solve(&ocp, &x0, &warm, origin, &MppiConfig { samples: 1, ..base.clone() }).unwrap();
    ensure!(same_bits(&one.inputs, &warm), "K = 1 changed the warm start");

    // Penalized cost of a fixed infeasible trajectory grows with μ.
    let t = ocp.rollout(&di_state(&ocp, 0.0, 1.5), &[ControlInput::new(5.0, 0.0); N]).unwrap();
    let mut last = f64::NEG_INFINITY;
    for mu in [0.0, 0.5, 1.0, 10.0, 100.0, 1e3, 1e4] {
        let c = penalized_cost(&ocp, &t, mu, 1e-6).unwrap();
        ensure!(c > last, "penalized cost {c} at mu = {mu} not above {last}");
        last = c;
    }
    Ok(format!("{seeds}/{seeds} seeds non-worsening ({strictly} strictly), bitwise deterministic, mu-monotone"))
}

// ---------------------------------------------------------------- parser

/// Parses every fixture response and compares with `expected.txt`.
pub fn parse_corpus() -> Check {
    let dir = super::fixtures().join("responses");
    let expected = std::fs::read_to_string(dir.join("expected.txt")).map_err(|e| e.to_string())?;
    let (mut total, mut correct) = (0, 0);
    let mut misses = Vec::new();
    for line in expected.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let allowed: &[TaskCommand] = match f[1] {
            "mpc" => &TaskCommand::MPC_SET,
            _ => &TaskCommand::EXTENDED_SET,
        };
        let want: TaskCommand = f[2].parse().map_err(|e| format!("{e}"))?;
        let text = std::fs::read_to_string(dir.join(f[0])).map_err(|e| e.to_string())?;
        total += 1;
        match parse_command(&text, allowed) {
            Ok(c) if c == want => correct += 1,
            other => misses.push(format!("{}: {other:?}", f[0])),
        }
    }
    ensure!(total == 20, "corpus has {total} responses");
    ensure!(correct == total, "parse misses: {misses:?}");
    Ok(format!("{correct}/{total} parsed"))
}
