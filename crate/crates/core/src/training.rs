//! Two-stage training.
//!
//! Stage 1 trains the whole backbone online on the strong noise gradient
//! with the gate bypassed and a constant perspective rate. Stage 2 loads
//! that backbone frozen and trains only the FiLM gate, the GRU (with its
//! layer norm) and the plasticity network on the weak gradient, under a
//! per-block perturbation schedule, logging one record per episode.
//!
//! Both stages take exactly one optimizer step per environment step. The
//! loss of step `t` uses the prediction made at `t` and the observation
//! drawn after the action of step `t`.

use serde::{Deserialize, Serialize};

use crate::agent::{
    backward_step, forward_step, mse, norm, AgentParams, AgentState, AlphaMode, Module, StepGrads,
    StepMode, StepTrace, Z_DIM,
};
use crate::env::{
    schedule_perturbations, step_action, zone_of, Action, AgentPos, GridWorld, NoiseGradient,
    PerturbationSchedule, N_ZONES, WINDOW_LEN,
};
use crate::error::{Error, Result};
use crate::neural::{AdamConfig, AdamState, Parameterized};
use crate::rng::{self, Stream};
use crate::runlog::{EpisodeRecord, RunLog};
use rand::Rng;

pub const STAGE2_TRAINABLE: [Module; 3] = [Module::Film, Module::Gru, Module::AlphaNet];
pub const STAGE2_FROZEN: [Module; 5] = [
    Module::Encoder,
    Module::Proprio,
    Module::StateHead,
    Module::Policy,
    Module::Decoder,
];
pub const STAGE1_TRAINABLE: [Module; 6] = [
    Module::Encoder,
    Module::Proprio,
    Module::Gru,
    Module::StateHead,
    Module::Policy,
    Module::Decoder,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub pred: f64,
    pub smooth: f64,
    #[serde(default)]
    pub actor: f64,
    #[serde(default)]
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Config {
    pub sigma_left: f64,
    pub sigma_right: f64,
    pub total_steps: usize,
    pub steps_per_episode: usize,
    pub learning_rate: f64,
    pub fixed_alpha: f64,
    pub loss: LossWeights,
    pub actor_period: usize,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            sigma_left: 0.60,
            sigma_right: 0.03,
            total_steps: 36_000,
            steps_per_episode: 240,
            learning_rate: 3e-4,
            fixed_alpha: 0.10,
            loss: LossWeights {
                pred: 1.0,
                smooth: 0.1,
                actor: 0.5,
                entropy: 0.01,
            },
            actor_period: 16,
        }
    }
}

impl Stage1Config {
    pub fn episodes(&self) -> usize {
        self.total_steps / self.steps_per_episode
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.steps_per_episode == 0 || !self.total_steps.is_multiple_of(self.steps_per_episode) {
            return bad(format!(
                "stage1.total_steps ({}) must be a positive multiple of stage1.steps_per_episode ({})",
                self.total_steps, self.steps_per_episode
            ));
        }
        if self.actor_period == 0 {
            return bad("stage1.actor_period must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.fixed_alpha) {
            return bad(format!("stage1.fixed_alpha must lie in [0, 1], got {}", self.fixed_alpha));
        }
        if !(self.learning_rate > 0.0) {
            return bad("stage1.learning_rate must be positive".into());
        }
        if !(self.sigma_left >= 0.0 && self.sigma_right >= 0.0) {
            return bad("stage1 noise std must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage2Config {
    pub sigma_left: f64,
    pub sigma_right: f64,
    pub episodes: usize,
    pub block_len: usize,
    pub steps_per_episode: usize,
    pub alpha_bounds: [f64; 2],
    pub learning_rate: f64,
    pub loss: LossWeights,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Stage2Config {
            sigma_left: 0.20,
            sigma_right: 0.10,
            episodes: 150,
            block_len: 50,
            steps_per_episode: 240,
            alpha_bounds: [0.03, 0.30],
            learning_rate: 3e-4,
            loss: LossWeights {
                pred: 1.0,
                smooth: 0.1,
                actor: 0.0,
                entropy: 0.0,
            },
        }
    }
}

impl Stage2Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.block_len == 0 || self.episodes != 3 * self.block_len {
            return bad(format!(
                "stage2.episodes ({}) must equal three blocks of stage2.block_len ({})",
                self.episodes, self.block_len
            ));
        }
        let [lo, hi] = self.alpha_bounds;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return bad(format!("stage2.alpha_bounds must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"));
        }
        if self.steps_per_episode == 0 {
            return bad("stage2.steps_per_episode must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad("stage2.learning_rate must be positive".into());
        }
        if !(self.sigma_left >= 0.0 && self.sigma_right >= 0.0) {
            return bad("stage2 noise std must be non-negative".into());
        }
        Ok(())
    }

    pub fn block_of(&self, episode: usize) -> usize {
        (episode / self.block_len).min(2)
    }
}

/// What varies between experimental arms of stage 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Arm {
    /// Perturbation windows per episode for each of the three blocks.
    pub schedule: [usize; 3],
    /// Constant perspective rate replacing the plasticity network.
    pub alpha_override: Option<f64>,
}

/// Weighted loss terms of one step. `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub pred: f64,
    pub smooth: f64,
    pub entropy: f64,
    pub actor: f64,
    pub total: f64,
    /// Unweighted mean-squared prediction error.
    pub pred_error: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.pred, self.smooth, self.entropy, self.actor, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Inputs for the per-step loss terms.
#[derive(Debug, Clone, Copy)]
pub struct StepLossInput<'a> {
    pub predicted: Option<&'a [f64]>,
    pub target: Option<&'a [f64]>,
    pub g_new: &'a [f64],
    pub g_prev: &'a [f64],
    pub probs: &'a [f64],
}

/// Per-step loss `λ_pred·MSE + λ_smooth·‖g − g_prev‖² + λ_entropy·(−H(π))`
/// with its upstream gradients. The prediction term is skipped when no
/// prediction/target pair exists.
pub fn compute_losses(input: StepLossInput<'_>, w: &LossWeights) -> (LossBreakdown, StepGrads) {
    let mut out = LossBreakdown::default();
    let mut grads = StepGrads::default();
    if let (Some(pred), Some(target)) = (input.predicted, input.target) {
        let err = mse(pred, target);
        out.pred_error = err;
        out.pred = w.pred * err;
        let n = pred.len() as f64;
        grads.d_prediction = Some(
            pred.iter()
                .zip(target)
                .map(|(p, t)| w.pred * 2.0 * (p - t) / n)
                .collect(),
        );
    }
    let diff: Vec<f64> = input.g_new.iter().zip(input.g_prev).map(|(a, b)| a - b).collect();
    out.smooth = w.smooth * diff.iter().map(|d| d * d).sum::<f64>();
    if w.smooth != 0.0 {
        grads.d_g = Some(diff.iter().map(|d| w.smooth * 2.0 * d).collect());
    }
    if w.entropy != 0.0 {
        // −H = Σ p log p; d/dlogit_j = p_j (log p_j + H).
        let neg_h: f64 = input.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum();
        out.entropy = w.entropy * neg_h;
        grads.d_logits = Some(
            input
                .probs
                .iter()
                .map(|&p| if p > 0.0 { w.entropy * p * (p.ln() - neg_h) } else { 0.0 })
                .collect(),
        );
    }
    out.total = out.pred + out.smooth + out.entropy;
    (out, grads)
}

/// REINFORCE over one window of steps with reward `−prediction error`,
/// reward-to-go returns, and the window-mean return as baseline.
///
/// Returns the actor loss value and `d loss / d logits` for each step.
pub fn actor_window(window: &[(&StepTrace, f64)], weight: f64) -> (f64, Vec<Vec<f64>>) {
    let k = window.len();
    if k == 0 {
        return (0.0, Vec::new());
    }
    let mut returns = vec![0.0; k];
    let mut acc = 0.0;
    for i in (0..k).rev() {
        acc += -window[i].1;
        returns[i] = acc;
    }
    let baseline = returns.iter().sum::<f64>() / k as f64;
    let mut loss = 0.0;
    let grads = window
        .iter()
        .zip(&returns)
        .map(|((trace, _), ret)| {
            let adv = ret - baseline;
            let a = trace.output.action;
            loss -= weight * adv * trace.probs[a].ln() / k as f64;
            trace
                .probs
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    let onehot = if j == a { 1.0 } else { 0.0 };
                    -weight * adv * (onehot - p) / k as f64
                })
                .collect()
        })
        .collect();
    (loss, grads)
}

fn add_into(dst: &mut Option<Vec<f64>>, src: &[f64]) {
    match dst {
        Some(d) => d.iter_mut().zip(src).for_each(|(a, b)| *a += b),
        None => *dst = Some(src.to_vec()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage1EpisodeRecord {
    pub episode: usize,
    pub mean_pred_error: f64,
    pub mean_loss: f64,
    pub mean_actor_loss: f64,
    pub g_norm: f64,
    pub zone_counts: [u32; N_ZONES],
}

#[derive(Debug, Clone)]
pub struct Stage1Outcome {
    /// Trained parameters, rounded to checkpoint precision.
    pub params: AgentParams,
    pub episodes: Vec<Stage1EpisodeRecord>,
    pub env_steps: usize,
    pub adam_steps: u64,
}

struct Streams {
    obs: Stream,
    action: Stream,
}

impl Streams {
    fn new(label: &str, seed: u64) -> Self {
        Streams {
            obs: rng::stream(rng::derive_seed(&format!("{label}-obs"), &[seed])),
            action: rng::stream(rng::derive_seed(&format!("{label}-action"), &[seed])),
        }
    }
}

/// Stage 1: end-to-end backbone training with the gate bypassed.
pub fn stage1_train(cfg: &Stage1Config, world_seed: u64, train_seed: u64) -> Result<Stage1Outcome> {
    cfg.validate()?;
    let world = GridWorld::new(
        NoiseGradient {
            sigma_left: cfg.sigma_left,
            sigma_right: cfg.sigma_right,
        },
        world_seed,
    )?;
    let mut params = AgentParams::init(train_seed);
    params.set_trainable(&STAGE1_TRAINABLE);
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), &params);
    let mut streams = Streams::new("stage1", train_seed);
    let mode = StepMode {
        alpha: AlphaMode::Fixed(cfg.fixed_alpha),
        film: false,
    };
    let steps = cfg.steps_per_episode;
    let mut state = AgentState::new();
    let mut records = Vec::with_capacity(cfg.episodes());
    let mut env_steps = 0;

    for episode in 0..cfg.episodes() {
        let mut pos = AgentPos::CENTER;
        state.begin_episode();
        let mut x = world.observe(pos, false, &mut streams.obs);
        let mut window: Vec<(StepTrace, f64)> = Vec::with_capacity(cfg.actor_period);
        let (mut sum_err, mut sum_loss, mut sum_actor) = (0.0, 0.0, 0.0);
        let mut zones = [0u32; N_ZONES];

        for t in 0..steps {
            zones[zone_of(pos.col)?.0] += 1;
            let u: f64 = streams.action.random();
            let trace = forward_step(&params, &state, &x, false, mode, u)?;
            pos = step_action(pos, Action::from_index(trace.output.action)?);
            let x_next = world.observe(pos, false, &mut streams.obs);

            let (mut loss, grads) = compute_losses(
                StepLossInput {
                    predicted: Some(&trace.output.predicted_next),
                    target: Some(&x_next),
                    g_new: &trace.output.g_new,
                    g_prev: &trace.g_prev,
                    probs: &trace.probs,
                },
                &cfg.loss,
            );
            backward_step(&mut params, &trace, &grads);
            let err = loss.pred_error;
            state = trace.next_state.clone();
            window.push((trace, err));

            if window.len() == cfg.actor_period || t + 1 == steps {
                if cfg.loss.actor != 0.0 {
                    let refs: Vec<(&StepTrace, f64)> = window.iter().map(|(tr, e)| (tr, *e)).collect();
                    let (actor_loss, d_logits) = actor_window(&refs, cfg.loss.actor);
                    for ((tr, _), d) in window.iter().zip(&d_logits) {
                        let mut g = StepGrads::default();
                        add_into(&mut g.d_logits, d);
                        backward_step(&mut params, tr, &g);
                    }
                    loss.actor = actor_loss;
                    loss.total += actor_loss;
                    sum_actor += actor_loss;
                }
                window.clear();
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    episode,
                    step: t,
                    components: format!("{loss:?}"),
                });
            }
            adam.step(&mut params);
            env_steps += 1;
            sum_err += err;
            sum_loss += loss.total;
            x = x_next;
        }
        records.push(Stage1EpisodeRecord {
            episode,
            mean_pred_error: sum_err / steps as f64,
            mean_loss: sum_loss / steps as f64,
            mean_actor_loss: sum_actor / steps as f64,
            g_norm: norm(&state.g),
            zone_counts: zones,
        });
    }
    params.round_to_f32();
    Ok(Stage1Outcome {
        params,
        episodes: records,
        env_steps,
        adam_steps: adam.step_count,
    })
}

/// Mean prediction error of a frozen agent over one episode. Parameters are
/// not updated.
pub fn evaluate_prediction_error(
    params: &AgentParams,
    world: &GridWorld,
    mode: StepMode,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let mut streams = Streams::new("eval", seed);
    let mut state = AgentState::new();
    let mut pos = AgentPos::CENTER;
    let mut x = world.observe(pos, false, &mut streams.obs);
    let mut total = 0.0;
    for _ in 0..steps {
        let u: f64 = streams.action.random();
        let trace = forward_step(params, &state, &x, false, mode, u)?;
        pos = step_action(pos, Action::from_index(trace.output.action)?);
        let x_next = world.observe(pos, false, &mut streams.obs);
        total += mse(&trace.output.predicted_next, &x_next);
        state = trace.next_state;
        x = x_next;
    }
    Ok(total / steps as f64)
}

#[derive(Debug, Clone)]
pub struct Stage2Outcome {
    pub log: RunLog,
    pub params: AgentParams,
    pub schedules: Vec<PerturbationSchedule>,
    pub env_steps: usize,
    pub adam_steps: u64,
}

/// Stage 2 with no per-step observer.
pub fn stage2_run(
    cfg: &Stage2Config,
    arm: Stage2Arm,
    checkpoint: &AgentParams,
    world_seed: u64,
    run_seed: u64,
    schedule_seed: u64,
) -> Result<Stage2Outcome> {
    stage2_run_observed(cfg, arm, checkpoint, world_seed, run_seed, schedule_seed, |_, _, _| {})
}

/// Stage 2: frozen backbone, online training of FiLM + GRU + AlphaNet.
///
/// `observer(episode, step, trace)` sees every step before the update.
pub fn stage2_run_observed(
    cfg: &Stage2Config,
    arm: Stage2Arm,
    checkpoint: &AgentParams,
    world_seed: u64,
    run_seed: u64,
    schedule_seed: u64,
    mut observer: impl FnMut(usize, usize, &StepTrace),
) -> Result<Stage2Outcome> {
    cfg.validate()?;
    let world = GridWorld::new(
        NoiseGradient {
            sigma_left: cfg.sigma_left,
            sigma_right: cfg.sigma_right,
        },
        world_seed,
    )?;
    let mut params = checkpoint.clone();
    params.set_trainable(&STAGE2_TRAINABLE);
    params.zero_grad();
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), &params);
    let mut streams = Streams::new("stage2", run_seed);
    let mut schedule_stream = rng::stream(schedule_seed);
    let mode = StepMode {
        alpha: match arm.alpha_override {
            Some(a) => AlphaMode::Fixed(a),
            None => AlphaMode::Adaptive {
                lo: cfg.alpha_bounds[0],
                hi: cfg.alpha_bounds[1],
            },
        },
        film: true,
    };
    let steps = cfg.steps_per_episode;
    let mut state = AgentState::new();
    let mut records = Vec::with_capacity(cfg.episodes);
    let mut schedules = Vec::with_capacity(cfg.episodes);
    let mut env_steps = 0;

    for episode in 0..cfg.episodes {
        let block = cfg.block_of(episode);
        let n_p = arm.schedule[block];
        let schedule = schedule_perturbations(n_p, steps, WINDOW_LEN, &mut schedule_stream)?;
        let mut pos = AgentPos::CENTER;
        state.begin_episode();
        let mut x = world.observe(pos, schedule.is_perturbed(0), &mut streams.obs);
        let (mut sum_alpha, mut sum_err) = (0.0, 0.0);
        let mut gamma_sum = vec![0.0; Z_DIM];
        let mut zones = [0u32; N_ZONES];

        for t in 0..steps {
            zones[zone_of(pos.col)?.0] += 1;
            let perturbed = schedule.is_perturbed(t);
            let u: f64 = streams.action.random();
            let trace = forward_step(&params, &state, &x, perturbed, mode, u)?;
            observer(episode, t, &trace);
            pos = step_action(pos, Action::from_index(trace.output.action)?);
            let x_next = world.observe(pos, schedule.is_perturbed(t + 1), &mut streams.obs);

            let (loss, grads) = compute_losses(
                StepLossInput {
                    predicted: Some(&trace.output.predicted_next),
                    target: Some(&x_next),
                    g_new: &trace.output.g_new,
                    g_prev: &trace.g_prev,
                    probs: &trace.probs,
                },
                &LossWeights {
                    actor: 0.0,
                    entropy: 0.0,
                    ..cfg.loss
                },
            );
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    episode,
                    step: t,
                    components: format!("{loss:?}"),
                });
            }
            backward_step(&mut params, &trace, &grads);
            adam.step(&mut params);
            env_steps += 1;

            sum_alpha += trace.output.alpha;
            sum_err += loss.pred_error;
            gamma_sum.iter_mut().zip(&trace.output.gamma).for_each(|(a, b)| *a += b);
            state = trace.next_state;
            x = x_next;
        }
        if !state.is_finite() {
            return Err(Error::NonFinite {
                episode,
                step: steps,
                components: "non-finite agent state".into(),
            });
        }
        records.push(EpisodeRecord {
            episode,
            block,
            n_p,
            perturbed_steps: schedule.perturbed_steps(),
            mean_alpha: sum_alpha / steps as f64,
            mean_pred_error: sum_err / steps as f64,
            g_norm: norm(&state.g),
            g: state.g.clone(),
            gamma_mean: gamma_sum.iter().map(|g| g / steps as f64).collect(),
            zone_counts: zones,
        });
        schedules.push(schedule);
    }
    Ok(Stage2Outcome {
        log: RunLog { records },
        params,
        schedules,
        env_steps,
        adam_steps: adam.step_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_components() {
        let g = [0.3; 12];
        let probs = [0.2; 5];
        let w = Stage1Config::default().loss;
        let pred = [0.1; 8];
        let (l, _) = compute_losses(
            StepLossInput {
                predicted: Some(&pred),
                target: Some(&pred),
                g_new: &g,
                g_prev: &g,
                probs: &probs,
            },
            &w,
        );
        assert_eq!(l.pred, 0.0);
        assert_eq!(l.smooth, 0.0);
        assert!((l.entropy + 5f64.ln() * 0.01).abs() < 1e-15);
        assert!((l.total - (l.pred + l.smooth + l.entropy)).abs() < 1e-12);

        let g2 = [0.1; 12];
        let input = StepLossInput {
            predicted: None,
            target: None,
            g_new: &g2,
            g_prev: &g,
            probs: &probs,
        };
        let (a, _) = compute_losses(input, &w);
        let (b, _) = compute_losses(input, &LossWeights { smooth: 0.2, ..w });
        assert_eq!(b.smooth, 2.0 * a.smooth);
        assert_eq!(a.pred, 0.0);
    }

    #[test]
    fn actor_window_advantages_sum_to_zero() {
        let p = AgentParams::init(1);
        let st = AgentState::new();
        let traces: Vec<StepTrace> = (0..4)
            .map(|i| forward_step(&p, &st, &[0.2; 8], false, StepMode::fixed(0.1), i as f64 / 4.0).unwrap())
            .collect();
        let window: Vec<(&StepTrace, f64)> = traces.iter().zip([0.1, 0.4, 0.2, 0.3]).collect();
        let (_, grads) = actor_window(&window, 0.5);
        assert_eq!(grads.len(), 4);
        // Each logit gradient sums to zero over actions (softmax property).
        for g in &grads {
            assert!(g.iter().sum::<f64>().abs() < 1e-12);
        }
        // Constant rewards give equal returns only when all are zero.
        let zero: Vec<(&StepTrace, f64)> = traces.iter().map(|t| (t, 0.0)).collect();
        let (loss, grads) = actor_window(&zero, 0.5);
        assert_eq!(loss, 0.0);
        assert!(grads.iter().flatten().all(|&v| v == 0.0));
    }

    fn small_stage1() -> Stage1Config {
        Stage1Config {
            total_steps: 480,
            ..Default::default()
        }
    }

    fn small_stage2() -> Stage2Config {
        Stage2Config {
            episodes: 6,
            block_len: 2,
            steps_per_episode: 60,
            ..Default::default()
        }
    }

    #[test]
    fn stage1_step_accounting_and_determinism() {
        let a = stage1_train(&small_stage1(), 7, 1).unwrap();
        assert_eq!(a.env_steps, 480);
        assert_eq!(a.adam_steps, 480);
        assert_eq!(a.episodes.len(), 2);
        for r in &a.episodes {
            assert_eq!(r.zone_counts.iter().sum::<u32>(), 240);
        }
        let b = stage1_train(&small_stage1(), 7, 1).unwrap();
        assert_eq!(a.params, b.params);
        assert!(a.params.film.weight.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stage2_freezes_backbone_and_logs_schedule() {
        let ckpt = stage1_train(&small_stage1(), 7, 0).unwrap().params;
        let cfg = small_stage2();
        let arm = Stage2Arm {
            schedule: [0, 2, 0],
            alpha_override: None,
        };
        let out = stage2_run(&cfg, arm, &ckpt, 7, 3, 4).unwrap();
        for m in STAGE2_FROZEN {
            let before: Vec<_> = ckpt.module_groups(m).iter().map(|g| g.values.clone()).collect();
            let after: Vec<_> = out.params.module_groups(m).iter().map(|g| g.values.clone()).collect();
            assert_eq!(before, after, "{m:?}");
        }
        assert_ne!(ckpt.film, out.params.film);
        assert_eq!(out.log.len(), 6);
        assert_eq!(out.env_steps, 360);
        assert_eq!(out.adam_steps, 360);
        for r in &out.log.records {
            let expect = if r.block == 1 { 30 } else { 0 };
            assert_eq!(r.perturbed_steps, expect);
            assert!((0.03..=0.30).contains(&r.mean_alpha));
            assert_eq!(r.zone_counts.iter().sum::<u32>(), 60);
        }
        let again = stage2_run(&cfg, arm, &ckpt, 7, 3, 4).unwrap();
        assert_eq!(out.log, again.log);
        assert_eq!(out.params.param_count(), ckpt.param_count());
    }

    #[test]
    fn fixed_alpha_arm_logs_constant_rate() {
        let ckpt = AgentParams::init(0);
        let out = stage2_run(
            &small_stage2(),
            Stage2Arm {
                schedule: [1, 1, 1],
                alpha_override: Some(0.05),
            },
            &ckpt,
            1,
            2,
            3,
        )
        .unwrap();
        assert!(out.log.records.iter().all(|r| (r.mean_alpha - 0.05).abs() < 1e-12));
        assert_eq!(out.params.alpha_net, ckpt.alpha_net);
    }

    #[test]
    fn configs_validate() {
        assert!(Stage1Config::default().validate().is_ok());
        assert!(Stage2Config::default().validate().is_ok());
        assert_eq!(Stage1Config::default().episodes(), 150);
        let bad = Stage1Config {
            total_steps: 1000,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = Stage2Config {
            episodes: 149,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
