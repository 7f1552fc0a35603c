//! Runtime invariant suite: gradient checks, gate identity, plasticity
//! bounds, update convexity and backbone freezing.

use rand::Rng;

use crate::agent::{
    backward_step, encode_raw, film_gate, forward_step, AgentParams, AgentState, AlphaMode, Module, StepMode,
    G_DIM, OPEN_ALPHA, RIGID_ALPHA,
};
use crate::env::PATCH_LEN;
use crate::error::Result;
use crate::neural::{grad_check, GruCell, LayerNorm, Linear, Mlp, MlpSpec, Activation, Parameterized};
use crate::rng::{self, Stream};
use crate::training::{
    compute_losses, stage2_run_observed, Stage2Arm, Stage2Config, StepLossInput, STAGE2_FROZEN, STAGE2_TRAINABLE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

fn random_vec(s: &mut Stream, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| s.random_range(-scale..scale)).collect()
}

/// Scalar test loss `Σ w_i y_i` so every output matters.
fn weighted(y: &[f64], w: &[f64]) -> f64 {
    y.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `(name, max relative error, tolerance)` for each primitive and for the
/// full per-step losses.
pub fn gradient_report(seed: u64) -> Result<Vec<(String, f64, f64)>> {
    let mut s = rng::stream(rng::derive_seed("grad-check", &[seed]));
    let h = 1e-5;
    let mut out = Vec::new();

    let mut lin = Linear::zeros("lin", 6, 4);
    lin.init_uniform(&mut s);
    lin.bias.values = random_vec(&mut s, 4, 0.5);
    let (x, w) = (random_vec(&mut s, 6, 1.0), random_vec(&mut s, 4, 1.0));
    let r = grad_check(
        &mut lin,
        |m| {
            m.zero_grad();
            let y = m.forward(&x).unwrap();
            m.backward(&x, &w, None);
            weighted(&y, &w)
        },
        h,
    );
    out.push(("linear".to_string(), r.max_rel_err, 1e-6));

    for (name, act) in [("mlp-tanh", Activation::Tanh), ("mlp-linear", Activation::Linear)] {
        let mut mlp = Mlp::zeros(name, MlpSpec::new(5, 3, act).with_hidden(7));
        mlp.init_uniform(&mut s);
        let (x, w) = (random_vec(&mut s, 5, 1.0), random_vec(&mut s, 3, 1.0));
        let r = grad_check(
            &mut mlp,
            |m| {
                m.zero_grad();
                let c = m.forward(&x).unwrap();
                m.backward(&c, &w, None);
                weighted(&c.output, &w)
            },
            h,
        );
        out.push((name.to_string(), r.max_rel_err, 1e-4));
    }

    let mut gru = GruCell::zeros("gru", 24, G_DIM);
    gru.init_uniform(&mut s);
    gru.bias.values = random_vec(&mut s, 3 * G_DIM, 0.3);
    let (x, hp, w) = (random_vec(&mut s, 24, 1.0), random_vec(&mut s, G_DIM, 1.0), random_vec(&mut s, G_DIM, 1.0));
    let r = grad_check(
        &mut gru,
        |m| {
            m.zero_grad();
            let c = m.forward(&x, &hp).unwrap();
            m.backward(&c, &w, None, None);
            weighted(&c.output, &w)
        },
        h,
    );
    out.push(("gru".to_string(), r.max_rel_err, 1e-4));

    let mut ln = LayerNorm::new("ln", G_DIM);
    ln.gain.values = random_vec(&mut s, G_DIM, 1.0);
    ln.bias.values = random_vec(&mut s, G_DIM, 1.0);
    let (x, w) = (random_vec(&mut s, G_DIM, 2.0), random_vec(&mut s, G_DIM, 1.0));
    let r = grad_check(
        &mut ln,
        |m| {
            m.zero_grad();
            let c = m.forward(&x).unwrap();
            m.backward(&c, &w, None);
            weighted(&c.output, &w)
        },
        h,
    );
    out.push(("layer-norm".to_string(), r.max_rel_err, 1e-4));

    let mut params = generic_params(seed, &mut s);
    let mut st = AgentState::new();
    st.g = random_vec(&mut s, G_DIM, 1.0);
    st.p_ema = vec![0.1, 0.5, 0.2, 0.0, 0.2];
    st.prev_action = Some(1);
    st.prev_prediction = Some(random_vec(&mut s, PATCH_LEN, 1.0));
    let x = random_vec(&mut s, PATCH_LEN, 1.0);
    let target = random_vec(&mut s, PATCH_LEN, 1.0);
    let cfg2 = Stage2Config::default();
    let w2 = cfg2.loss;
    let w1 = crate::training::Stage1Config::default().loss;

    params.set_trainable(&STAGE2_TRAINABLE);
    let r = grad_check(&mut params, |p| step_loss(p, &st, &x, &target, StepMode::adaptive(), &w2), h);
    out.push(("stage-2 step loss".to_string(), r.max_rel_err, 1e-4));

    params.set_trainable(&Module::ALL);
    let r = grad_check(&mut params, |p| step_loss(p, &st, &x, &target, StepMode::adaptive(), &w1), h);
    out.push(("full step loss, all groups".to_string(), r.max_rel_err, 1e-4));
    let stage1_mode = StepMode {
        alpha: AlphaMode::Fixed(0.1),
        film: false,
    };
    let r = grad_check(&mut params, |p| step_loss(p, &st, &x, &target, stage1_mode, &w1), h);
    out.push(("stage-1 step loss".to_string(), r.max_rel_err, 1e-4));

    // Push the plasticity sigmoid into saturation.
    let last = params.alpha_net.layers.len() - 1;
    params.alpha_net.layers[last].bias.values[0] = 6.0;
    params.set_trainable(&[Module::AlphaNet]);
    let r = grad_check(&mut params, |p| step_loss(p, &st, &x, &target, StepMode::adaptive(), &w2), h);
    out.push(("saturated plasticity sigmoid".to_string(), r.max_rel_err, 1e-3));
    Ok(out)
}

fn generic_params(seed: u64, s: &mut Stream) -> AgentParams {
    let mut p = AgentParams::init(seed);
    for v in p.film.weight.values.iter_mut().chain(p.film.bias.values.iter_mut()) {
        *v = s.random_range(-0.3..0.3);
    }
    p
}

fn step_loss(
    params: &mut AgentParams,
    st: &AgentState,
    x: &[f64],
    target: &[f64],
    mode: StepMode,
    w: &crate::training::LossWeights,
) -> f64 {
    params.zero_grad();
    let trace = forward_step(params, st, x, true, mode, 0.37).unwrap();
    let (loss, grads) = compute_losses(
        StepLossInput {
            predicted: Some(&trace.output.predicted_next),
            target: Some(target),
            g_new: &trace.output.g_new,
            g_prev: &trace.g_prev,
            probs: &trace.probs,
        },
        w,
    );
    backward_step(params, &trace, &grads);
    loss.total
}

/// Number of observations for which a freshly initialized gate changes
/// the raw code.
pub fn film_identity_violations(seed: u64, n: usize) -> Result<usize> {
    let params = AgentParams::init(seed);
    let mut s = rng::stream(rng::derive_seed("film-identity", &[seed]));
    let mut bad = 0;
    for _ in 0..n {
        let x = random_vec(&mut s, PATCH_LEN, 2.0);
        let g = random_vec(&mut s, G_DIM, 3.0);
        let z_raw = encode_raw(&params, &x)?;
        if film_gate(&params, &z_raw, &g)?.z != z_raw {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Per-step facts gathered from one stage-2 run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAudit {
    pub steps: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Steps where some component of `g` left the interval spanned by
    /// `g_prev` and the candidate.
    pub convexity_violations: usize,
    /// Frozen groups whose values changed.
    pub changed_frozen: Vec<String>,
    /// Trainable groups whose values changed.
    pub changed_trainable: usize,
}

pub fn audit_run(cfg: &Stage2Config, arm: Stage2Arm, backbone: &AgentParams, seed: u64) -> Result<RunAudit> {
    let mut audit = RunAudit {
        steps: 0,
        alpha_min: f64::INFINITY,
        alpha_max: f64::NEG_INFINITY,
        convexity_violations: 0,
        changed_frozen: Vec::new(),
        changed_trainable: 0,
    };
    let outcome = stage2_run_observed(
        cfg,
        arm,
        backbone,
        0,
        rng::derive_seed("audit", &[seed]),
        rng::derive_seed("audit-schedule", &[seed]),
        |_, _, trace| {
            let a = trace.output.alpha;
            audit.steps += 1;
            audit.alpha_min = audit.alpha_min.min(a);
            audit.alpha_max = audit.alpha_max.max(a);
            let outside = trace.output.g_new.iter().zip(&trace.g_prev).zip(&trace.candidate).any(|((g, p), c)| {
                let (lo, hi) = if p < c { (p, c) } else { (c, p) };
                g < lo || g > hi
            });
            audit.convexity_violations += usize::from(outside);
        },
    )?;
    for (before, after) in backbone.groups().iter().zip(outcome.params.groups()) {
        let changed = before.values != after.values;
        let module = Module::of_group(&before.name);
        if module.is_some_and(|m| STAGE2_FROZEN.contains(&m)) {
            if changed {
                audit.changed_frozen.push(before.name.clone());
            }
        } else if changed {
            audit.changed_trainable += 1;
        }
    }
    Ok(audit)
}

/// The full suite against `backbone`, using `cfg` for the stage-2 runs.
pub fn run_suite(backbone: &AgentParams, cfg: &Stage2Config) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();

    let grads = gradient_report(7)?;
    let worst = grads.iter().map(|(_, e, t)| e / t).fold(0.0, f64::max);
    let detail = grads
        .iter()
        .map(|(n, e, t)| format!("{n} {e:.2e} (tol {t:.0e})"))
        .collect::<Vec<_>>()
        .join("; ");
    results.push(CheckResult::new("gradient correctness", worst <= 1.0, detail));

    let bad = film_identity_violations(11, 1000)?;
    results.push(CheckResult::new(
        "gate identity at init",
        bad == 0,
        format!("{bad} of 1000 observations changed"),
    ));

    let adaptive = audit_run(
        cfg,
        Stage2Arm {
            schedule: [4, 4, 4],
            alpha_override: None,
        },
        backbone,
        1,
    )?;
    let [lo, hi] = cfg.alpha_bounds;
    let mut alpha_ok = adaptive.alpha_min >= lo && adaptive.alpha_max <= hi;
    let mut detail = format!(
        "adaptive α in [{:.4}, {:.4}] over {} steps",
        adaptive.alpha_min, adaptive.alpha_max, adaptive.steps
    );
    for fixed in [RIGID_ALPHA, OPEN_ALPHA] {
        let a = audit_run(
            &Stage2Config {
                episodes: 3,
                block_len: 1,
                ..cfg.clone()
            },
            Stage2Arm {
                schedule: [4, 4, 4],
                alpha_override: Some(fixed),
            },
            backbone,
            2,
        )?;
        alpha_ok &= a.alpha_min == fixed && a.alpha_max == fixed;
        detail.push_str(&format!("; fixed {fixed}: [{}, {}]", a.alpha_min, a.alpha_max));
    }
    results.push(CheckResult::new("plasticity bounds", alpha_ok, detail));

    results.push(CheckResult::new(
        "perspective-update convexity",
        adaptive.convexity_violations == 0,
        format!("{} violations in {} steps", adaptive.convexity_violations, adaptive.steps),
    ));

    results.push(CheckResult::new(
        "frozen backbone integrity",
        adaptive.changed_frozen.is_empty() && adaptive.changed_trainable > 0,
        format!(
            "frozen groups changed: {:?}; trainable groups changed: {}",
            adaptive.changed_frozen, adaptive.changed_trainable
        ),
    ));
    Ok(results)
}
