//! Randomized driving scenes and a brute-force roll-and-check oracle written
//! directly from the model equations, independent of the OCP machinery.

use mpc_builder::ocp::{build_ocp, ControlInput, Ocp, Origin};
use mpc_builder::primitives::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N: usize = 20;
pub const DT: f64 = 0.05;

#[derive(Clone, Debug)]
pub enum Lateral {
    Keep,
    Change(Vec<Observed>),
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub ego_params: EgoParams,
    pub task: TaskParams,
    pub ego: [f64; 4],
    pub t0: f64,
    pub prev_input: ControlInput,
    pub lateral: Lateral,
    pub lead: Option<Observed>,
    pub pvs: Vec<(usize, PvState)>,
    pub shifted: Vec<ControlInput>,
}

impl Scene {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t0 = rng.random_range(0.0..40.0);
        let lane = rng.random_range(0..3) as f64 * 4.0;
        let ego = [
            rng.random_range(0.0..500.0),
            lane + rng.random_range(-1.0..1.0),
            rng.random_range(-0.08..0.08),
            rng.random_range(10.0..30.0),
        ];
        let ego_params = EgoParams {
            y_min: lane - rng.random_range(1.0..6.0),
            y_max: lane + rng.random_range(1.0..6.0),
            ..EgoParams::default()
        };
        let target = if lane > 0.0 { lane - 4.0 } else { lane + 4.0 };
        let observed = |rng: &mut ChaCha8Rng, y: f64, window: (f64, f64)| {
            let at = t0 - rng.random_range(0.0..1.0);
            Observed::new(
                PvState::new(ego[0] + rng.random_range(window.0..window.1), y, rng.random_range(15.0..28.0), 0.0),
                at,
            )
        };
        let change = rng.random_bool(0.5);
        let task = TaskParams {
            y_ref: if change { target } else { lane },
            d_safe_lc: rng.random_range(5.0..12.0),
            d_safe_acc: rng.random_range(5.0..12.0),
            d_safe_pv: rng.random_range(3.0..7.0),
            ..TaskParams::default()
        };
        let lateral = if change {
            let k = rng.random_range(1..3);
            Lateral::Change((0..k).map(|_| observed(&mut rng, target, (-30.0, 40.0))).collect())
        } else {
            Lateral::Keep
        };
        let lead = rng.random_bool(0.5).then(|| observed(&mut rng, lane, (5.0, 45.0)));
        let pvs = (0..rng.random_range(0..4))
            .map(|i| {
                let y = [lane - 4.0, lane + 4.0][rng.random_range(0..2)];
                (i + 3, PvState::new(ego[0] + rng.random_range(-25.0..25.0), y, rng.random_range(15.0..28.0), 0.0))
            })
            .collect();
        // Mostly in-box inputs; an occasional excursion exercises the input bounds.
        let excursion = rng.random_bool(0.1);
        let (a0, d0) = (rng.random_range(-4.0..4.0), rng.random_range(-0.05..0.05));
        let shifted = (0..N - 1 + rng.random_range(0..2))
            .map(|k| {
                let a = a0 + rng.random_range(-0.5..0.5);
                let d = d0 + rng.random_range(-0.01..0.01);
                if excursion && k == 7 {
                    ControlInput::new(a * 2.0, d + 0.5)
                } else {
                    ControlInput::new(a, d)
                }
            })
            .collect();
        Self {
            ego_params,
            task,
            ego,
            t0,
            prev_input: ControlInput::new(rng.random_range(-3.0..3.0), rng.random_range(-0.05..0.05)),
            lateral,
            lead,
            pvs,
            shifted,
        }
    }

    pub fn ocp(&self) -> Ocp {
        let ego = &self.ego_params;
        let mut prims = vec![make_kbm(ego).unwrap()];
        prims.push(match &self.lateral {
            Lateral::Keep => make_lane_keep(&self.task, ego).unwrap(),
            Lateral::Change(n) => make_lane_change(&self.task, ego, LcGap::Vehicles(n.clone())).unwrap(),
        });
        prims.push(match self.lead {
            Some(l) => make_acc(&self.task, ego, Some(l)).unwrap(),
            None => make_constant_speed(&self.task, ego).unwrap(),
        });
        for (id, pv) in &self.pvs {
            prims.push(make_pv_safety(&self.task, ego, *id, *pv).unwrap());
        }
        build_ocp(&prims, N, DT, ego.input_space()).unwrap()
    }

    pub fn measurements(&self) -> Vec<(String, f64)> {
        let mut m: Vec<(String, f64)> =
            ["x", "y", "theta", "v"].iter().zip(self.ego).map(|(n, v)| (n.to_string(), v)).collect();
        for (id, pv) in &self.pvs {
            for (s, v) in ["x", "y", "vx", "vy"].iter().zip([pv.x, pv.y, pv.vx, pv.vy]) {
                m.push((format!("pv{id}.{s}"), v));
            }
        }
        m
    }

    pub fn origin(&self) -> Origin {
        Origin::new(self.t0, self.prev_input)
    }
}

fn cv(o: &Observed, t: f64) -> f64 {
    o.state.x + o.state.vx * (t - o.at)
}

/// Violated `(stage, label)` pairs when rolling the scene's own dynamics
/// under the first `N-1` shifted inputs and checking stages `0..=N-2`.
pub fn brute_force_violations(s: &Scene) -> Vec<(usize, String)> {
    let ep = &s.ego_params;
    let [mut x, mut y, mut th, mut v] = s.ego;
    let mut pvs: Vec<(usize, [f64; 4])> = s.pvs.iter().map(|(id, p)| (*id, [p.x, p.y, p.vx, p.vy])).collect();
    let mut out = Vec::new();
    for k in 0..=N - 2 {
        let u = s.shifted[k];
        let t = s.t0 + k as f64 * DT;
        let mut bad = |cond: bool, label: String| {
            if cond {
                out.push((k, label));
            }
        };
        let lat = match s.lateral {
            Lateral::Keep => "LK",
            Lateral::Change(_) => "LC",
        };
        bad(y < ep.y_min, format!("{lat}.y_min"));
        bad(y > ep.y_max, format!("{lat}.y_max"));
        bad(u.delta < ep.delta_min, format!("{lat}.delta_min"));
        bad(u.delta > ep.delta_max, format!("{lat}.delta_max"));
        if let Lateral::Change(ns) = &s.lateral {
            let nearest = ns.iter().map(|o| (x - cv(o, t)).abs()).fold(f64::INFINITY, f64::min);
            bad(nearest < s.task.d_safe_lc, "LC.gap".into());
        }
        let lon = if s.lead.is_some() { "ACC" } else { "CS" };
        bad(u.a < ep.a_min, format!("{lon}.a_min"));
        bad(u.a > ep.a_max, format!("{lon}.a_max"));
        if let Some(l) = &s.lead {
            bad((x - cv(l, t)).abs() < s.task.d_safe_acc, "ACC.gap".into());
        }
        for (id, p) in &pvs {
            let d = ((x - p[0]).powi(2) + (y - p[1]).powi(2)).sqrt();
            bad(d < s.task.d_safe_pv, format!("PV{id}.keep_out"));
        }
        // Euler step of the bicycle and of every constant-velocity vehicle.
        let (nx, ny) = (x + v * th.cos() * DT, y + v * th.sin() * DT);
        th += v / ep.wheelbase * u.delta.tan() * DT;
        v += u.a * DT;
        (x, y) = (nx, ny);
        for (_, p) in pvs.iter_mut() {
            p[0] += p[2] * DT;
            p[1] += p[3] * DT;
        }
    }
    out.sort();
    out
}
