//! The perspectival agent.
//!
//! One step runs
//! `encode → FiLM gate → proprio trace → error features → plasticity →
//! perspective update → policy state → action → next-observation decoder`.
//! [`forward_step`] keeps every intermediate needed by [`backward_step`];
//! the single-purpose functions ([`encode_raw`], [`film_gate`], ...) expose
//! the same pieces without caches.

use rand::Rng;

use crate::env::{Observation, N_ACTIONS, PATCH_LEN};
use crate::error::{Error, Result};
use crate::neural::{
    sigmoid, softmax, Activation, GruCache, GruCell, LayerNorm, LnCache, Linear, Mlp, MlpCache,
    MlpSpec, ParamGroup, Parameterized,
};
use crate::rng::{self, Stream};

pub const Z_DIM: usize = 16;
pub const P_DIM: usize = 8;
pub const G_DIM: usize = 12;
pub const S_DIM: usize = 16;
pub const E_DIM: usize = 6;
pub const ALPHA_IN: usize = Z_DIM + P_DIM + G_DIM + E_DIM;
pub const ALPHA_HIDDEN: usize = 32;

pub const PROPRIO_DECAY: f64 = 0.8;
pub const ERR_SHORT_DECAY: f64 = 0.9;
pub const ERR_LONG_DECAY: f64 = 0.99;
pub const PERTURB_TRACE_DECAY: f64 = 0.9;

pub const ALPHA_BOUNDS: (f64, f64) = (0.03, 0.30);
pub const RIGID_ALPHA: f64 = 0.05;
pub const OPEN_ALPHA: f64 = 0.80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Module {
    Encoder,
    Film,
    Proprio,
    Gru,
    AlphaNet,
    StateHead,
    Policy,
    Decoder,
}

impl Module {
    pub const ALL: [Module; 8] = [
        Module::Encoder,
        Module::Film,
        Module::Proprio,
        Module::Gru,
        Module::AlphaNet,
        Module::StateHead,
        Module::Policy,
        Module::Decoder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Module::Encoder => "encoder",
            Module::Film => "film",
            Module::Proprio => "proprio",
            Module::Gru => "gru",
            Module::AlphaNet => "alpha_net",
            Module::StateHead => "state_head",
            Module::Policy => "policy",
            Module::Decoder => "decoder",
        }
    }

    /// Module owning a parameter group, from the group's name prefix.
    pub fn of_group(name: &str) -> Option<Module> {
        let prefix = name.split('.').next()?;
        Module::ALL.into_iter().find(|m| m.name() == prefix)
    }
}

/// Every parameter group of the agent. The layer norm applied to the GRU
/// candidate belongs to the GRU module.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub encoder: Mlp,
    pub film: Linear,
    pub proprio: Mlp,
    pub gru: GruCell,
    pub ln: LayerNorm,
    pub alpha_net: Mlp,
    pub state_head: Mlp,
    pub policy: Linear,
    pub decoder: Mlp,
}

impl AgentParams {
    /// All-zero weights (layer-norm gain 1). Also the template checkpoints
    /// are loaded into.
    pub fn zeros() -> Self {
        AgentParams {
            encoder: Mlp::zeros("encoder", MlpSpec::new(PATCH_LEN, Z_DIM, Activation::Tanh)),
            film: Linear::zeros("film", G_DIM, 2 * Z_DIM),
            proprio: Mlp::zeros("proprio", MlpSpec::new(N_ACTIONS, P_DIM, Activation::Tanh)),
            gru: GruCell::zeros("gru", Z_DIM + P_DIM, G_DIM),
            ln: LayerNorm::new("gru.ln", G_DIM),
            alpha_net: Mlp::zeros(
                "alpha_net",
                MlpSpec::new(ALPHA_IN, 1, Activation::Linear).with_hidden(ALPHA_HIDDEN),
            ),
            state_head: Mlp::zeros(
                "state_head",
                MlpSpec::new(Z_DIM + P_DIM + G_DIM, S_DIM, Activation::Tanh),
            ),
            policy: Linear::zeros("policy", S_DIM, N_ACTIONS),
            decoder: Mlp::zeros(
                "decoder",
                MlpSpec::new(G_DIM + N_ACTIONS, PATCH_LEN, Activation::Linear),
            ),
        }
    }

    /// Seeded initialization. The FiLM layer stays at zero so the gate
    /// starts as the identity.
    pub fn init(seed: u64) -> Self {
        let mut p = Self::zeros();
        let mut s = rng::stream(rng::derive_seed("agent-init", &[seed]));
        p.encoder.init_uniform(&mut s);
        p.proprio.init_uniform(&mut s);
        p.gru.init_uniform(&mut s);
        p.alpha_net.init_uniform(&mut s);
        p.state_head.init_uniform(&mut s);
        p.policy.init_uniform(&mut s);
        p.decoder.init_uniform(&mut s);
        p
    }

    /// Marks exactly `modules` as trainable.
    pub fn set_trainable(&mut self, modules: &[Module]) {
        for g in self.groups_mut() {
            let m = Module::of_group(&g.name).expect("group names carry a module prefix");
            g.trainable = modules.contains(&m);
        }
    }

    pub fn module_groups(&self, module: Module) -> Vec<&ParamGroup> {
        self.groups()
            .into_iter()
            .filter(|g| Module::of_group(&g.name) == Some(module))
            .collect()
    }

    /// Rounds every value through `f32`, the checkpoint storage precision.
    pub fn round_to_f32(&mut self) {
        for g in self.groups_mut() {
            g.values.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}

impl Parameterized for AgentParams {
    fn groups(&self) -> Vec<&ParamGroup> {
        let mut v = self.encoder.groups();
        v.extend(self.film.groups());
        v.extend(self.proprio.groups());
        v.extend(self.gru.groups());
        v.extend(self.ln.groups());
        v.extend(self.alpha_net.groups());
        v.extend(self.state_head.groups());
        v.extend(self.policy.groups());
        v.extend(self.decoder.groups());
        v
    }

    fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
        let mut v = self.encoder.groups_mut();
        v.extend(self.film.groups_mut());
        v.extend(self.proprio.groups_mut());
        v.extend(self.gru.groups_mut());
        v.extend(self.ln.groups_mut());
        v.extend(self.alpha_net.groups_mut());
        v.extend(self.state_head.groups_mut());
        v.extend(self.policy.groups_mut());
        v.extend(self.decoder.groups_mut());
        v
    }
}

/// State carried from one step to the next (and across episodes).
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub g: Vec<f64>,
    pub p_ema: Vec<f64>,
    pub err_short: f64,
    pub err_long: f64,
    pub perturb_trace: f64,
    pub prev_prediction: Option<Vec<f64>>,
    pub prev_action: Option<usize>,
}

impl Default for AgentState {
    fn default() -> Self {
        Self::new()
    }
}

impl AgentState {
    pub fn new() -> Self {
        AgentState {
            g: vec![0.0; G_DIM],
            p_ema: vec![0.0; N_ACTIONS],
            err_short: 0.0,
            err_long: 0.0,
            perturb_trace: 0.0,
            prev_prediction: None,
            prev_action: None,
        }
    }

    /// Position resets between episodes, so the last prediction and action
    /// no longer refer to the agent's surroundings. Everything else carries.
    pub fn begin_episode(&mut self) {
        self.prev_prediction = None;
        self.prev_action = None;
    }

    pub fn is_finite(&self) -> bool {
        self.g.iter().chain(&self.p_ema).all(|v| v.is_finite())
            && self.err_short.is_finite()
            && self.err_long.is_finite()
            && self.perturb_trace.is_finite()
    }
}

/// `[error, err_short, err_long, err_short − err_long, flag, trace]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFeatures(pub [f64; E_DIM]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Adaptive { lo: f64, hi: f64 },
    Fixed(f64),
}

impl AlphaMode {
    pub const fn adaptive() -> Self {
        AlphaMode::Adaptive {
            lo: ALPHA_BOUNDS.0,
            hi: ALPHA_BOUNDS.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMode {
    pub alpha: AlphaMode,
    /// When false the gate is bypassed (`z = z_raw`).
    pub film: bool,
}

impl StepMode {
    pub const fn adaptive() -> Self {
        StepMode {
            alpha: AlphaMode::adaptive(),
            film: true,
        }
    }

    pub const fn fixed(alpha: f64) -> Self {
        StepMode {
            alpha: AlphaMode::Fixed(alpha),
            film: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub z_raw: Vec<f64>,
    pub z: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub g_new: Vec<f64>,
    pub s: Vec<f64>,
    pub action: usize,
    pub action_logits: Vec<f64>,
    pub predicted_next: Vec<f64>,
}

/// Forward intermediates of one step.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub output: StepOutput,
    pub next_state: AgentState,
    pub mode: StepMode,
    pub g_prev: Vec<f64>,
    pub candidate: Vec<f64>,
    pub probs: Vec<f64>,
    pub errors: ErrorFeatures,
    /// Error of the previous prediction against this step's observation.
    pub current_error: f64,
    alpha_sigmoid: f64,
    enc: MlpCache,
    proprio: MlpCache,
    alpha: Option<MlpCache>,
    gru: GruCache,
    ln: LnCache,
    state: MlpCache,
    decoder: MlpCache,
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

fn one_hot(index: usize) -> [f64; N_ACTIONS] {
    let mut v = [0.0; N_ACTIONS];
    v[index] = 1.0;
    v
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    let mut v = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        v.extend_from_slice(p);
    }
    v
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `z_raw = tanh(MLP(x))`.
pub fn encode_raw(params: &AgentParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(params.encoder.forward(x)?.output)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilmOutput {
    pub z: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `(γ, β) = Linear(g_prev)`, `z = (1 + γ) ⊙ z_raw + β`.
pub fn film_gate(params: &AgentParams, z_raw: &[f64], g_prev: &[f64]) -> Result<FilmOutput> {
    check_len("film z_raw", Z_DIM, z_raw.len())?;
    let gb = params.film.forward(g_prev)?;
    let (gamma, beta) = gb.split_at(Z_DIM);
    let z = z_raw
        .iter()
        .zip(gamma.iter().zip(beta))
        .map(|(zr, (g, b))| (1.0 + g) * zr + b)
        .collect();
    Ok(FilmOutput {
        z,
        gamma: gamma.to_vec(),
        beta: beta.to_vec(),
    })
}

/// Advances the action trace and encodes it. Without a previous action the
/// trace is carried unchanged.
pub fn proprio_update(
    params: &AgentParams,
    p_ema_prev: &[f64],
    action_prev: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p_ema = advance_trace(p_ema_prev, action_prev)?;
    let p = params.proprio.forward(&p_ema)?.output;
    Ok((p_ema, p))
}

fn advance_trace(p_ema_prev: &[f64], action_prev: Option<usize>) -> Result<Vec<f64>> {
    check_len("action trace", N_ACTIONS, p_ema_prev.len())?;
    Ok(match action_prev {
        Some(a) => {
            if a >= N_ACTIONS {
                return Err(Error::Bounds {
                    what: "action index",
                    value: a,
                    limit: N_ACTIONS - 1,
                });
            }
            let oh = one_hot(a);
            p_ema_prev
                .iter()
                .zip(oh)
                .map(|(p, o)| PROPRIO_DECAY * p + (1.0 - PROPRIO_DECAY) * o)
                .collect()
        }
        None => p_ema_prev.to_vec(),
    })
}

/// Updates the error and perturbation traces in `state` and returns the
/// feature vector fed to the plasticity network.
pub fn compute_error_features(state: &mut AgentState, current_error: f64, perturbed: bool) -> ErrorFeatures {
    let flag = if perturbed { 1.0 } else { 0.0 };
    state.err_short = ERR_SHORT_DECAY * state.err_short + (1.0 - ERR_SHORT_DECAY) * current_error;
    state.err_long = ERR_LONG_DECAY * state.err_long + (1.0 - ERR_LONG_DECAY) * current_error;
    state.perturb_trace = PERTURB_TRACE_DECAY * state.perturb_trace + (1.0 - PERTURB_TRACE_DECAY) * flag;
    ErrorFeatures([
        current_error,
        state.err_short,
        state.err_long,
        state.err_short - state.err_long,
        flag,
        state.perturb_trace,
    ])
}

/// `α = lo + (hi − lo) · σ(AlphaNet(z ⊕ p ⊕ g_prev ⊕ e))`.
pub fn compute_alpha(
    params: &AgentParams,
    z: &[f64],
    p: &[f64],
    g_prev: &[f64],
    e: &ErrorFeatures,
    bounds: (f64, f64),
) -> Result<f64> {
    let (alpha, _, _) = alpha_forward(params, z, p, g_prev, e, bounds)?;
    Ok(alpha)
}

fn alpha_forward(
    params: &AgentParams,
    z: &[f64],
    p: &[f64],
    g_prev: &[f64],
    e: &ErrorFeatures,
    (lo, hi): (f64, f64),
) -> Result<(f64, f64, MlpCache)> {
    if !(lo < hi) {
        return Err(Error::InvalidConfig(format!("alpha bounds must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let input = concat(&[z, p, g_prev, &e.0]);
    let cache = params.alpha_net.forward(&input)?;
    let sig = sigmoid(cache.output[0]);
    let alpha = (lo + (hi - lo) * sig).clamp(lo, hi);
    Ok((alpha, sig, cache))
}

/// `g = (1 − α) g_prev + α LN(GRU(z ⊕ p, g_prev))`.
pub fn update_perspective(
    params: &AgentParams,
    z: &[f64],
    p: &[f64],
    g_prev: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    Ok(perspective_forward(params, z, p, g_prev, alpha)?.0)
}

/// Returns `(g, candidate, gru cache, ln cache)`.
fn perspective_forward(
    params: &AgentParams,
    z: &[f64],
    p: &[f64],
    g_prev: &[f64],
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>, GruCache, LnCache)> {
    let gru = params.gru.forward(&concat(&[z, p]), g_prev)?;
    let ln = params.ln.forward(&gru.output)?;
    let candidate = ln.output.clone();
    let g = g_prev
        .iter()
        .zip(&candidate)
        .map(|(gp, c)| (1.0 - alpha) * gp + alpha * c)
        .collect();
    Ok((g, candidate, gru, ln))
}

/// `s = tanh(MLP(z ⊕ p ⊕ g))`.
pub fn policy_state(params: &AgentParams, z: &[f64], p: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    Ok(params.state_head.forward(&concat(&[z, p, g]))?.output)
}

/// Samples an action from `softmax(policy(s))` using one uniform draw.
pub fn select_action(params: &AgentParams, s: &[f64], stream: &mut Stream) -> Result<(usize, Vec<f64>)> {
    let logits = params.policy.forward(s)?;
    let u: f64 = stream.random();
    Ok((sample_index(&softmax(&logits), u), logits))
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Predicts the next patch from `g ⊕ onehot(action)`.
pub fn decode_next(params: &AgentParams, g: &[f64], action: usize) -> Result<Vec<f64>> {
    if action >= N_ACTIONS {
        return Err(Error::Bounds {
            what: "action index",
            value: action,
            limit: N_ACTIONS - 1,
        });
    }
    Ok(params.decoder.forward(&concat(&[g, &one_hot(action)]))?.output)
}

/// One full agent step; draws exactly one uniform from `stream`.
pub fn agent_step(
    params: &AgentParams,
    state: &AgentState,
    x: &Observation,
    perturbed: bool,
    mode: StepMode,
    stream: &mut Stream,
) -> Result<(StepOutput, AgentState)> {
    let u: f64 = stream.random();
    let trace = forward_step(params, state, x, perturbed, mode, u)?;
    Ok((trace.output, trace.next_state))
}

/// Forward pass with caches. `u ∈ [0, 1)` is the uniform draw used for
/// action sampling.
pub fn forward_step(
    params: &AgentParams,
    state: &AgentState,
    x: &[f64],
    perturbed: bool,
    mode: StepMode,
    u: f64,
) -> Result<StepTrace> {
    check_len("observation", PATCH_LEN, x.len())?;
    check_len("perspective", G_DIM, state.g.len())?;
    let g_prev = state.g.clone();

    let enc = params.encoder.forward(x)?;
    let z_raw = enc.output.clone();
    let FilmOutput { z, gamma, beta } = if mode.film {
        film_gate(params, &z_raw, &g_prev)?
    } else {
        FilmOutput {
            z: z_raw.clone(),
            gamma: vec![0.0; Z_DIM],
            beta: vec![0.0; Z_DIM],
        }
    };

    let p_ema = advance_trace(&state.p_ema, state.prev_action)?;
    let proprio = params.proprio.forward(&p_ema)?;
    let p = proprio.output.clone();

    let mut next_state = state.clone();
    next_state.p_ema = p_ema;
    let current_error = state.prev_prediction.as_deref().map_or(0.0, |pred| mse(pred, x));
    let errors = compute_error_features(&mut next_state, current_error, perturbed);

    let (alpha, alpha_sigmoid, alpha_cache) = match mode.alpha {
        AlphaMode::Adaptive { lo, hi } => {
            let (a, s, c) = alpha_forward(params, &z, &p, &g_prev, &errors, (lo, hi))?;
            (a, s, Some(c))
        }
        AlphaMode::Fixed(a) => (a, 0.0, None),
    };

    let (g_new, candidate, gru, ln) = perspective_forward(params, &z, &p, &g_prev, alpha)?;

    let state_cache = params.state_head.forward(&concat(&[&z, &p, &g_new]))?;
    let s = state_cache.output.clone();
    let action_logits = params.policy.forward(&s)?;
    let probs = softmax(&action_logits);
    let action = sample_index(&probs, u);

    let decoder = params.decoder.forward(&concat(&[&g_new, &one_hot(action)]))?;
    let predicted_next = decoder.output.clone();

    next_state.g = g_new.clone();
    next_state.prev_prediction = Some(predicted_next.clone());
    next_state.prev_action = Some(action);

    Ok(StepTrace {
        output: StepOutput {
            z_raw,
            z,
            gamma,
            beta,
            alpha,
            g_new,
            s,
            action,
            action_logits,
            predicted_next,
        },
        next_state,
        mode,
        g_prev,
        candidate,
        probs,
        errors,
        current_error,
        alpha_sigmoid,
        enc,
        proprio,
        alpha: alpha_cache,
        gru,
        ln,
        state: state_cache,
        decoder,
    })
}

/// Upstream gradients for one step's graph. `g_prev` and the error
/// features are treated as constants.
#[derive(Debug, Clone, Default)]
pub struct StepGrads {
    /// d loss / d predicted_next.
    pub d_prediction: Option<Vec<f64>>,
    /// Direct d loss / d g_new (e.g. the smoothness term).
    pub d_g: Option<Vec<f64>>,
    /// d loss / d action logits.
    pub d_logits: Option<Vec<f64>>,
}

/// Accumulates parameter gradients of every trainable group for the step
/// recorded in `trace`.
pub fn backward_step(params: &mut AgentParams, trace: &StepTrace, grads: &StepGrads) {
    let mut dg = grads.d_g.clone().unwrap_or_else(|| vec![0.0; G_DIM]);
    let mut dz = vec![0.0; Z_DIM];
    let mut dp = vec![0.0; P_DIM];

    if let Some(d_pred) = &grads.d_prediction {
        let mut din = vec![0.0; G_DIM + N_ACTIONS];
        params.decoder.backward(&trace.decoder, d_pred, Some(&mut din));
        dg.iter_mut().zip(&din).for_each(|(a, b)| *a += b);
    }

    if let Some(d_logits) = &grads.d_logits {
        let mut ds = vec![0.0; S_DIM];
        params.policy.backward(&trace.output.s, d_logits, Some(&mut ds));
        let mut din = vec![0.0; Z_DIM + P_DIM + G_DIM];
        params.state_head.backward(&trace.state, &ds, Some(&mut din));
        dz.iter_mut().zip(&din[..Z_DIM]).for_each(|(a, b)| *a += b);
        dp.iter_mut().zip(&din[Z_DIM..Z_DIM + P_DIM]).for_each(|(a, b)| *a += b);
        dg.iter_mut().zip(&din[Z_DIM + P_DIM..]).for_each(|(a, b)| *a += b);
    }

    let alpha = trace.output.alpha;
    let d_candidate: Vec<f64> = dg.iter().map(|d| alpha * d).collect();
    let d_alpha: f64 = dg
        .iter()
        .zip(trace.candidate.iter().zip(&trace.g_prev))
        .map(|(d, (c, gp))| d * (c - gp))
        .sum();

    let mut d_gru_out = vec![0.0; G_DIM];
    params.ln.backward(&trace.ln, &d_candidate, Some(&mut d_gru_out));
    let mut dzp = vec![0.0; Z_DIM + P_DIM];
    params.gru.backward(&trace.gru, &d_gru_out, Some(&mut dzp), None);
    dz.iter_mut().zip(&dzp[..Z_DIM]).for_each(|(a, b)| *a += b);
    dp.iter_mut().zip(&dzp[Z_DIM..]).for_each(|(a, b)| *a += b);

    if let (AlphaMode::Adaptive { lo, hi }, Some(cache)) = (trace.mode.alpha, &trace.alpha) {
        let s = trace.alpha_sigmoid;
        let d_out = d_alpha * (hi - lo) * s * (1.0 - s);
        let mut din = vec![0.0; ALPHA_IN];
        params.alpha_net.backward(cache, &[d_out], Some(&mut din));
        dz.iter_mut().zip(&din[..Z_DIM]).for_each(|(a, b)| *a += b);
        dp.iter_mut().zip(&din[Z_DIM..Z_DIM + P_DIM]).for_each(|(a, b)| *a += b);
    }

    let out = &trace.output;
    let dz_raw: Vec<f64> = if trace.mode.film {
        if params.film.weight.trainable || params.film.bias.trainable {
            let d_film: Vec<f64> = dz
                .iter()
                .zip(&out.z_raw)
                .map(|(d, zr)| d * zr)
                .chain(dz.iter().copied())
                .collect();
            params.film.backward(&trace.g_prev, &d_film, None);
        }
        dz.iter().zip(&out.gamma).map(|(d, g)| d * (1.0 + g)).collect()
    } else {
        dz
    };

    if params.encoder.groups().iter().any(|g| g.trainable) {
        params.encoder.backward(&trace.enc, &dz_raw, None);
    }
    if params.proprio.groups().iter().any(|g| g.trainable) {
        params.proprio.backward(&trace.proprio, &dp, None);
    }
}
