//! MPPI on a user-defined primitive: a 1-D double integrator with a speed
//! limit, driven from p = 5 m to the origin in receding horizon.

use mpc_builder::mppi::{solve, MppiConfig};
use mpc_builder::ocp::{
    build_ocp, ControlInput, Derivative, InputBox, MpcPrimitive, Origin, PrimitiveKind, PrimitiveModel, Slots, Stage,
    StateComponent,
};

#[derive(Debug)]
struct DoubleIntegrator {
    w_max: f64,
}

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
        out[0] = s.own(1) - self.w_max;
        out[1] = -self.w_max - s.own(1);
    }
}

fn main() -> mpc_builder::Result<()> {
    let u = InputBox::new(-5.0, 5.0, -0.4, 0.4)?;
    let di = MpcPrimitive::new("DI", PrimitiveKind::EgoDynamics, u, DoubleIntegrator { w_max: 2.0 })?;
    let ocp = build_ocp(&[di], 20, 0.05, u)?;
    let cfg = MppiConfig { samples: 256, ..MppiConfig::default() };

    let (mut p, mut w) = (5.0, 0.0);
    let mut warm = vec![ControlInput::ZERO; ocp.horizon()];
    let mut prev = ControlInput::ZERO;
    println!("{:>5} {:>7} {:>7} {:>7} {:>10} {:>10}", "t", "p", "w", "a", "cost", "warm cost");
    for step in 0..100 {
        let t = step as f64 * ocp.dt();
        let x0 = ocp.measure(&[("p", p), ("w", w)])?;
        let r = solve(&ocp, &x0, &warm, Origin::new(t, prev), &cfg.with_seed(step))?;
        if step % 10 == 0 {
            println!(
                "{t:>5.2} {p:>7.3} {w:>7.3} {:>7.3} {:>10.3} {:>10.3}",
                r.first_input.a, r.cost, r.warm_start_cost
            );
        }
        // Plant: the same Euler step the OCP uses.
        let a = r.first_input.a;
        p += ocp.dt() * w;
        w += ocp.dt() * a;
        prev = r.first_input;
        warm = r.nominal_inputs;
    }
    println!("final p = {p:.3} m, w = {w:.3} m/s (|w| limited to 2)");
    Ok(())
}
