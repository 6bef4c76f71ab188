//! Sampling-based MPC (MPPI) with indicator-penalty constraint handling.
//!
//! Noise is drawn from a ChaCha8 stream seeded by [`MppiConfig::seed`], so a
//! solve is bit-reproducible on a given platform. Sample rollouts may run on
//! the rayon pool; their costs land in an index-ordered buffer and every
//! reduction folds in index order, so parallelism never changes the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{stage_inputs, ControlInput, Ocp, Origin, Stage, StateVector, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiConfig {
    /// Number of sampled input sequences `K` (sample 0 is the warm start).
    pub samples: usize,
    /// Softmin temperature.
    pub lambda: f64,
    /// Sampling variance of the acceleration noise [(m/s²)²].
    pub variance_a: f64,
    /// Sampling variance of the steering noise [rad²].
    pub variance_delta: f64,
    /// Lag-one correlation `[a, δ]` of the noise along the horizon. The
    /// marginal variances stay as configured; 0 gives white noise.
    pub noise_correlation: [f64; 2],
    /// Replace one random sample with full braking along the nominal
    /// steering.
    pub braking_sample: bool,
    /// Penalty per violated constraint component and stage.
    pub mu: f64,
    pub horizon: usize,
    pub dt: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Tolerance below which an equality residual counts as satisfied.
    pub eps_h: f64,
    pub parallel: bool,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            samples: 512,
            lambda: 100.0,
            variance_a: 2.0,
            variance_delta: 0.01,
            noise_correlation: [0.97, 0.5],
            braking_sample: true,
            mu: 100.0,
            horizon: 20,
            dt: 0.05,
            seed: 0,
            iterations: 1,
            eps_h: 1e-6,
            parallel: true,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.samples >= 1
            && self.lambda > 0.0
            && self.mu > 0.0
            && self.variance_a > 0.0
            && self.variance_delta > 0.0
            && self.noise_correlation.iter().all(|b| (0.0..1.0).contains(b))
            && self.horizon >= 1
            && self.dt > 0.0
            && self.iterations >= 1
            && self.eps_h >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("mppi config {self:?}")))
        }
    }

    pub fn std_a(&self) -> f64 {
        self.variance_a.sqrt()
    }

    pub fn std_delta(&self) -> f64 {
        self.variance_delta.sqrt()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub first_input: ControlInput,
    /// Optimized sequence `û(0..N-1|t)`.
    pub inputs: Vec<ControlInput>,
    /// Rollout of `inputs`.
    pub planned: Trajectory,
    /// `inputs` shifted by one step with the last input repeated; the warm
    /// start for the next control step.
    pub nominal_inputs: Vec<ControlInput>,
    /// Penalized cost of `planned`.
    pub cost: f64,
    /// Penalized cost of the (clamped) warm start.
    pub warm_start_cost: f64,
}

fn violations(g: &[f64], h: &[f64], eps_h: f64) -> usize {
    g.iter().filter(|v| **v > 0.0).count() + h.iter().filter(|v| v.abs() > eps_h).count()
}

/// `C_k = J_k + μ·(#violated inequality components + #nonzero equality components)`.
pub fn penalized_stage_cost(ocp: &Ocp, x: &StateVector, stage: &Stage, mu: f64, eps_h: f64) -> Result<f64> {
    ocp.check_state(x)?;
    let mut g = vec![0.0; ocp.n_g()];
    let mut h = vec![0.0; ocp.n_h()];
    Ok(stage_penalized(ocp, x.values(), stage, mu, eps_h, &mut g, &mut h))
}

#[inline]
fn stage_penalized(ocp: &Ocp, x: &[f64], stage: &Stage, mu: f64, eps_h: f64, g: &mut [f64], h: &mut [f64]) -> f64 {
    ocp.ineq(x, stage, g);
    ocp.eq(x, stage, h);
    ocp.stage_cost(x, stage) + mu * violations(g, h, eps_h) as f64
}

/// Total penalized cost `Σ_{k=0}^{N} C_k` of a trajectory.
pub fn penalized_cost(ocp: &Ocp, traj: &Trajectory, mu: f64, eps_h: f64) -> Result<f64> {
    // validates shape
    ocp.trajectory_cost(traj)?;
    let mut g = vec![0.0; ocp.n_g()];
    let mut h = vec![0.0; ocp.n_h()];
    Ok((0..=ocp.horizon())
        .map(|k| {
            let stage = ocp.stage_of(traj, k);
            stage_penalized(ocp, &traj.states[k], &stage, mu, eps_h, &mut g, &mut h)
        })
        .sum())
}

/// Rolls `inputs` out from `x0` and accumulates the penalized cost without
/// storing the trajectory.
fn rollout_cost(ocp: &Ocp, x0: &[f64], inputs: &[ControlInput], origin: Origin, mu: f64, eps_h: f64) -> f64 {
    let n = ocp.horizon();
    let dt = ocp.dt();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x0.len()];
    let mut g = vec![0.0; ocp.n_g()];
    let mut h = vec![0.0; ocp.n_h()];
    let mut total = 0.0;
    for k in 0..=n {
        let (u, prev) = stage_inputs(inputs, k, origin.prev_input);
        let stage = Stage::new(k, origin.t0 + k as f64 * dt, dt, u, prev);
        total += stage_penalized(ocp, &x, &stage, mu, eps_h, &mut g, &mut h);
        if k < n {
            ocp.euler_step(&x, u, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
    }
    total
}

/// Resizes a warm start to `n` inputs (repeating the last, or zeros when
/// empty) and clamps it into the input box.
pub fn fit_warm_start(ocp: &Ocp, warm_start: &[ControlInput], n: usize) -> Vec<ControlInput> {
    let pad = warm_start.last().copied().unwrap_or(ControlInput::ZERO);
    (0..n).map(|k| ocp.input_space().clamp(warm_start.get(k).copied().unwrap_or(pad))).collect()
}

/// Shifts a sequence one step forward, repeating the last input.
pub fn shift_inputs(inputs: &[ControlInput]) -> Vec<ControlInput> {
    let mut out: Vec<ControlInput> = inputs.iter().skip(1).copied().collect();
    if let Some(last) = inputs.last() {
        out.push(*last);
    }
    out
}

/// One MPPI solve: perturb the warm start `K-1` times (one of them may be
/// a full-braking sequence instead), weight every rollout by
/// `exp(-(S - S_min)/λ)` and average. If the weighted average costs more
/// than the sequence it was sampled around, the best sample is kept instead,
/// so the result never costs more than the warm start.
pub fn solve(
    ocp: &Ocp,
    x0: &StateVector,
    warm_start: &[ControlInput],
    origin: Origin,
    cfg: &MppiConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    ocp.check_state(x0)?;
    let n = ocp.horizon();
    let bounds = *ocp.input_space();
    let mut nominal = fit_warm_start(ocp, warm_start, n);
    let cost_of = |seq: &[ControlInput]| rollout_cost(ocp, x0.values(), seq, origin, cfg.mu, cfg.eps_h);
    let warm_start_cost = cost_of(&nominal);
    if !warm_start_cost.is_finite() {
        return Err(Error::NonFiniteCost { sample: 0 });
    }
    let mut nominal_cost = warm_start_cost;
    let (std_a, std_d) = (cfg.std_a(), cfg.std_delta());
    let [beta_a, beta_d] = cfg.noise_correlation;
    let (fresh_a, fresh_d) = ((1.0 - beta_a * beta_a).sqrt(), (1.0 - beta_d * beta_d).sqrt());

    for iter in 0..cfg.iterations {
        let seed = cfg.seed.wrapping_add((iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples: Vec<Vec<ControlInput>> = Vec::with_capacity(cfg.samples);
        samples.push(nominal.clone());
        if cfg.braking_sample && cfg.samples > 1 {
            samples.push(nominal.iter().map(|u| ControlInput::new(bounds.a_min, u.delta)).collect());
        }
        while samples.len() < cfg.samples {
            let (mut ea, mut ed) = (0.0_f64, 0.0_f64);
            let seq = nominal
                .iter()
                .enumerate()
                .map(|(k, u)| {
                    let wa: f64 = rng.sample(StandardNormal);
                    let wd: f64 = rng.sample(StandardNormal);
                    if k == 0 {
                        (ea, ed) = (wa, wd);
                    } else {
                        ea = beta_a * ea + fresh_a * wa;
                        ed = beta_d * ed + fresh_d * wd;
                    }
                    bounds.clamp(ControlInput::new(u.a + std_a * ea, u.delta + std_d * ed))
                })
                .collect();
            samples.push(seq);
        }

        let costs: Vec<f64> = if cfg.parallel {
            samples.par_iter().map(|s| cost_of(s)).collect()
        } else {
            samples.iter().map(|s| cost_of(s)).collect()
        };
        if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCost { sample: i });
        }

        let (best, min_cost) =
            costs
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
        let weights: Vec<f64> = costs.iter().map(|c| (-(c - min_cost) / cfg.lambda).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut averaged = vec![ControlInput::ZERO; n];
        for (w, seq) in weights.iter().zip(&samples) {
            for (acc, u) in averaged.iter_mut().zip(seq) {
                acc.a += w * u.a;
                acc.delta += w * u.delta;
            }
        }
        for u in averaged.iter_mut() {
            *u = bounds.clamp(ControlInput::new(u.a / total, u.delta / total));
        }
        let averaged_cost = cost_of(&averaged);
        if averaged_cost.is_finite() && averaged_cost <= nominal_cost {
            nominal = averaged;
            nominal_cost = averaged_cost;
        } else {
            nominal = samples.swap_remove(best);
            nominal_cost = min_cost;
        }
    }

    let planned = ocp.rollout_from(x0, &nominal, origin)?;
    Ok(SolveResult {
        first_input: nominal[0],
        nominal_inputs: shift_inputs(&nominal),
        inputs: nominal,
        planned,
        cost: nominal_cost,
        warm_start_cost,
    })
}
