//! Randomized primitive sets and the composition laws they must satisfy.

use mpc_builder::ocp::{build_ocp, compose, ControlInput, MpcPrimitive, Stage, StateVector};
use mpc_builder::primitives::*;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

#[derive(Clone, Debug)]
pub struct Case {
    pub task: TaskParams,
    pub pvs: Vec<PvState>,
    pub lead: Option<f64>,
    pub lc: bool,
    pub ego: [f64; 4],
    pub u: (f64, f64),
    pub u_prev: (f64, f64),
    pub perm_seed: u64,
}

fn weights<const K: usize>() -> impl Strategy<Value = [f64; K]> {
    proptest::array::uniform(0.0..10.0f64)
}

pub fn case() -> impl Strategy<Value = Case> {
    (
        (5.0..35.0f64, -2.0..10.0f64, 5.0..40.0f64, 1.0..15.0f64, 1.0..15.0f64, 1.0..10.0f64),
        (weights::<5>(), weights::<5>(), weights::<3>(), weights::<3>()),
        prop::collection::vec((-60.0..120.0f64, -2.0..10.0f64, 10.0..30.0f64, -1.0..1.0f64), 0..4),
        prop::option::of(5.0..100.0f64),
        any::<bool>(),
        (-50.0..50.0f64, -3.0..11.0f64, -0.5..0.5f64, 0.0..35.0f64),
        ((-6.0..6.0f64, -0.5..0.5f64), (-6.0..6.0f64, -0.5..0.5f64)),
        any::<u64>(),
    )
        .prop_map(|(t, q, pvs, lead, lc, ego, (u, u_prev), perm_seed)| Case {
            task: TaskParams {
                v_ref: t.0,
                y_ref: t.1,
                d_acc: t.2,
                d_safe_lc: t.3,
                d_safe_acc: t.4,
                d_safe_pv: t.5,
                q_lk: q.0,
                q_lc: q.1,
                q_cs: q.2,
                q_acc: q.3,
            },
            pvs: pvs.into_iter().map(|p| PvState::new(p.0, p.1, p.2, p.3)).collect(),
            lead,
            lc,
            ego: [ego.0, ego.1, ego.2, ego.3],
            u,
            u_prev,
            perm_seed,
        })
}

/// KBM, a lateral task, a longitudinal task and one PV primitive per vehicle.
pub fn primitives(c: &Case) -> Vec<MpcPrimitive> {
    let ego = EgoParams::default();
    let mut out = vec![make_kbm(&ego).unwrap()];
    if c.lc {
        let n = Observed::new(PvState::new(c.ego[0] + 12.0, c.task.y_ref, 20.0, 0.0), 0.0);
        out.push(make_lane_change(&c.task, &ego, LcGap::Vehicles(vec![n])).unwrap());
    } else {
        out.push(make_lane_keep(&c.task, &ego).unwrap());
    }
    match c.lead {
        Some(dx) => {
            let lead = Observed::new(PvState::new(c.ego[0] + dx, c.ego[1], 20.0, 0.0), 0.0);
            out.push(make_acc(&c.task, &ego, Some(lead)).unwrap());
        }
        None => out.push(make_constant_speed(&c.task, &ego).unwrap()),
    }
    for (i, pv) in c.pvs.iter().enumerate() {
        out.push(make_pv_safety(&c.task, &ego, i + 1, *pv).unwrap());
    }
    out
}

/// Measurements of every state name any primitive of the case uses.
pub fn measurements(c: &Case) -> Vec<(String, f64)> {
    let mut pairs: Vec<(String, f64)> =
        ["x", "y", "theta", "v"].iter().zip(c.ego).map(|(n, v)| (n.to_string(), v)).collect();
    for (i, pv) in c.pvs.iter().enumerate() {
        for (s, v) in ["x", "y", "vx", "vy"].iter().zip([pv.x, pv.y, pv.vx, pv.vy]) {
            pairs.push((format!("{}.{s}", pv_prefix(i + 1)), v));
        }
    }
    pairs
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Deterministic Fisher-Yates over a splitmix64 stream.
pub fn shuffle<T>(v: &mut [T], mut seed: u64) {
    for i in (1..v.len()).rev() {
        seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = seed;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        v.swap(i, (z % (i as u64 + 1)) as usize);
    }
}

fn fold(ps: &[MpcPrimitive]) -> MpcPrimitive {
    ps[1..].iter().fold(ps[0].clone(), |a, p| compose(&a, p).unwrap())
}

/// Additivity, bookkeeping, identity and permutation laws for one case.
pub fn check_laws(c: &Case) -> Result<(), TestCaseError> {
    let prims = primitives(c);
    let ego = EgoParams::default();
    let st = Stage::new(3, 0.15, 0.05, ControlInput::new(c.u.0, c.u.1), ControlInput::new(c.u_prev.0, c.u_prev.1));
    let owned = measurements(c);
    let pairs: Vec<(&str, f64)> = owned.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let x = StateVector::from_pairs(&pairs);

    for split in 1..prims.len() {
        let left = fold(&prims[..split]);
        let right = fold(&prims[split..]);
        let both = compose(&left, &right).unwrap();
        let sum = left.stage_cost(&x, &st).unwrap() + right.stage_cost(&x, &st).unwrap();
        let whole = both.stage_cost(&x, &st).unwrap();
        prop_assert!(close(whole, sum), "cost {whole} vs {sum}");
        prop_assert_eq!(both.n(), left.n() + right.n());
        prop_assert_eq!(both.n_g(), left.n_g() + right.n_g());
        prop_assert_eq!(both.n_h(), left.n_h() + right.n_h());
        prop_assert_eq!(both.cost_terms(), left.cost_terms() + right.cost_terms());
        let mut g = left.ineq(&x, &st).unwrap();
        g.extend(right.ineq(&x, &st).unwrap());
        prop_assert_eq!(both.ineq(&x, &st).unwrap(), g);
    }

    let e = MpcPrimitive::empty(ego.input_space());
    for p in &prims {
        for q in [compose(&e, p).unwrap(), compose(p, &e).unwrap()] {
            prop_assert_eq!(q.n(), p.n());
            prop_assert_eq!(q.n_g(), p.n_g());
            prop_assert_eq!(q.n_h(), p.n_h());
            prop_assert_eq!(q.ineq_labels(), p.ineq_labels());
            prop_assert_eq!(q.stage_cost(&x, &st).unwrap(), p.stage_cost(&x, &st).unwrap());
            prop_assert_eq!(q.ineq(&x, &st).unwrap(), p.ineq(&x, &st).unwrap());
            prop_assert_eq!(q.derivative(&x, st.input).unwrap(), p.derivative(&x, st.input).unwrap());
        }
    }

    let mut shuffled = prims.clone();
    shuffle(&mut shuffled, c.perm_seed);
    let a = build_ocp(&prims, 20, 0.05, ego.input_space()).unwrap();
    let b = build_ocp(&shuffled, 20, 0.05, ego.input_space()).unwrap();
    prop_assert_eq!(a.n(), b.n());
    prop_assert_eq!(a.n_g(), b.n_g());
    prop_assert_eq!(a.n_h(), b.n_h());
    let inputs: Vec<ControlInput> =
        (0..20).map(|k| ControlInput::new(c.u.0 * (k as f64 * 0.3).cos(), c.u.1 * (k as f64 * 0.2).sin())).collect();
    let ta = a.rollout(&a.measure(pairs.as_slice()).unwrap(), &inputs).unwrap();
    let tb = b.rollout(&b.measure(pairs.as_slice()).unwrap(), &inputs).unwrap();
    let (ca, cb) = (a.trajectory_cost(&ta).unwrap(), b.trajectory_cost(&tb).unwrap());
    prop_assert!(close(ca, cb), "trajectory cost {ca} vs {cb}");
    Ok(())
}
