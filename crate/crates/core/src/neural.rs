//! Hand-written forward/backward for the few primitives the agent uses.
//!
//! Every layer keeps its parameters in named [`ParamGroup`]s. Forward passes
//! return a cache; backward passes consume it, accumulate parameter
//! gradients into trainable groups, and accumulate (`+=`) input gradients
//! into caller-provided buffers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub trainable: bool,
}

impl ParamGroup {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        ParamGroup {
            name: name.into(),
            shape: shape.to_vec(),
            values: vec![0.0; n],
            grads: vec![0.0; n],
            trainable: true,
        }
    }

    pub fn filled(name: impl Into<String>, shape: &[usize], value: f64) -> Self {
        let mut g = Self::zeros(name, shape);
        g.values.iter_mut().for_each(|v| *v = value);
        g
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Anything that owns an ordered list of parameter groups.
pub trait Parameterized {
    fn groups(&self) -> Vec<&ParamGroup>;
    fn groups_mut(&mut self) -> Vec<&mut ParamGroup>;

    fn zero_grad(&mut self) {
        for g in self.groups_mut() {
            g.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }
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

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// `y = W x + b`, `W` stored row-major as `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamGroup,
    pub bias: ParamGroup,
}

impl Linear {
    pub fn zeros(name: &str, in_dim: usize, out_dim: usize) -> Self {
        Linear {
            weight: ParamGroup::zeros(format!("{name}.weight"), &[out_dim, in_dim]),
            bias: ParamGroup::zeros(format!("{name}.bias"), &[out_dim]),
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init_uniform(&mut self, stream: &mut Stream) {
        let bound = 1.0 / (self.in_dim() as f64).sqrt();
        for w in &mut self.weight.values {
            *w = stream.random_range(-bound..=bound);
        }
        self.bias.values.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("linear input", self.in_dim(), x.len())?;
        let mut y = self.bias.values.clone();
        self.accumulate(x, &mut y);
        Ok(y)
    }

    #[inline]
    fn accumulate(&self, x: &[f64], y: &mut [f64]) {
        let n = self.in_dim();
        for (yo, row) in y.iter_mut().zip(self.weight.values.chunks_exact(n)) {
            *yo += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }

    pub fn backward(&mut self, x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        let n = self.in_dim();
        if let Some(dx) = dx {
            for (row, &d) in self.weight.values.chunks_exact(n).zip(dy) {
                if d != 0.0 {
                    for (dxi, w) in dx.iter_mut().zip(row) {
                        *dxi += w * d;
                    }
                }
            }
        }
        if self.weight.trainable {
            for (grow, &d) in self.weight.grads.chunks_exact_mut(n).zip(dy) {
                for (g, xi) in grow.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        if self.bias.trainable {
            for (g, d) in self.bias.grads.iter_mut().zip(dy) {
                *g += d;
            }
        }
    }
}

impl Parameterized for Linear {
    fn groups(&self) -> Vec<&ParamGroup> {
        vec![&self.weight, &self.bias]
    }

    fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Shape of a two-hidden-layer perceptron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub hidden: usize,
    pub output: Activation,
}

impl MlpSpec {
    pub fn new(in_dim: usize, out_dim: usize, output: Activation) -> Self {
        MlpSpec {
            in_dim,
            out_dim,
            hidden: 64,
            output,
        }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden = hidden;
        self
    }
}

/// in → hidden → hidden → out with Tanh hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: [Linear; 3],
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn zeros(name: &str, spec: MlpSpec) -> Self {
        Mlp {
            spec,
            layers: [
                Linear::zeros(&format!("{name}.l0"), spec.in_dim, spec.hidden),
                Linear::zeros(&format!("{name}.l1"), spec.hidden, spec.hidden),
                Linear::zeros(&format!("{name}.l2"), spec.hidden, spec.out_dim),
            ],
        }
    }

    pub fn init_uniform(&mut self, stream: &mut Stream) {
        for l in &mut self.layers {
            l.init_uniform(stream);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<MlpCache> {
        check_len("mlp input", self.spec.in_dim, x.len())?;
        let mut h1 = self.layers[0].bias.values.clone();
        self.layers[0].accumulate(x, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = self.layers[1].bias.values.clone();
        self.layers[1].accumulate(&h1, &mut h2);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let mut output = self.layers[2].bias.values.clone();
        self.layers[2].accumulate(&h2, &mut output);
        let act = self.spec.output;
        output.iter_mut().for_each(|v| *v = act.apply(*v));
        Ok(MlpCache {
            input: x.to_vec(),
            h1,
            h2,
            output,
        })
    }

    /// `d_output` is the gradient w.r.t. the post-activation output.
    pub fn backward(&mut self, cache: &MlpCache, d_output: &[f64], dx: Option<&mut [f64]>) {
        let act = self.spec.output;
        let d3: Vec<f64> = d_output
            .iter()
            .zip(&cache.output)
            .map(|(d, &y)| d * act.grad_from_output(y))
            .collect();
        let mut d2 = vec![0.0; self.spec.hidden];
        self.layers[2].backward(&cache.h2, &d3, Some(&mut d2));
        d2.iter_mut()
            .zip(&cache.h2)
            .for_each(|(d, &h)| *d *= 1.0 - h * h);
        let mut d1 = vec![0.0; self.spec.hidden];
        self.layers[1].backward(&cache.h1, &d2, Some(&mut d1));
        d1.iter_mut()
            .zip(&cache.h1)
            .for_each(|(d, &h)| *d *= 1.0 - h * h);
        self.layers[0].backward(&cache.input, &d1, dx);
    }
}

impl Parameterized for Mlp {
    fn groups(&self) -> Vec<&ParamGroup> {
        self.layers.iter().flat_map(|l| l.groups()).collect()
    }

    fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
        self.layers.iter_mut().flat_map(|l| l.groups_mut()).collect()
    }
}

/// Gated recurrent unit, reset gate applied to the hidden state before the
/// candidate projection:
///
/// ```text
/// r  = σ(W_ir x + W_hr h + b_r)
/// u  = σ(W_iu x + W_hu h + b_u)
/// n  = tanh(W_in x + W_hn (r ⊙ h) + b_n)
/// h' = (1 − u) ⊙ n + u ⊙ h
/// ```
///
/// Rows of `w_ih`, `w_hh` and `bias` are stacked `[r; u; n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_ih: ParamGroup,
    pub w_hh: ParamGroup,
    pub bias: ParamGroup,
}

#[derive(Debug, Clone)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub n: Vec<f64>,
    pub rh: Vec<f64>,
    pub output: Vec<f64>,
}

impl GruCell {
    pub fn zeros(name: &str, input_dim: usize, hidden_dim: usize) -> Self {
        GruCell {
            w_ih: ParamGroup::zeros(format!("{name}.w_ih"), &[3 * hidden_dim, input_dim]),
            w_hh: ParamGroup::zeros(format!("{name}.w_hh"), &[3 * hidden_dim, hidden_dim]),
            bias: ParamGroup::zeros(format!("{name}.bias"), &[3 * hidden_dim]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.shape[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hh.shape[1]
    }

    pub fn init_uniform(&mut self, stream: &mut Stream) {
        let bound = 1.0 / (self.input_dim() as f64).sqrt();
        for w in self.w_ih.values.iter_mut() {
            *w = stream.random_range(-bound..=bound);
        }
        let bound = 1.0 / (self.hidden_dim() as f64).sqrt();
        for w in self.w_hh.values.iter_mut() {
            *w = stream.random_range(-bound..=bound);
        }
        self.bias.values.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn forward(&self, x: &[f64], h: &[f64]) -> Result<GruCache> {
        let (ni, nh) = (self.input_dim(), self.hidden_dim());
        check_len("gru input", ni, x.len())?;
        check_len("gru hidden", nh, h.len())?;
        let wi = &self.w_ih.values;
        let wh = &self.w_hh.values;
        let b = &self.bias.values;
        let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let mut r = vec![0.0; nh];
        let mut u = vec![0.0; nh];
        for j in 0..nh {
            let rj = j;
            let uj = nh + j;
            r[j] = sigmoid(
                dot(&wi[rj * ni..(rj + 1) * ni], x) + dot(&wh[rj * nh..(rj + 1) * nh], h) + b[rj],
            );
            u[j] = sigmoid(
                dot(&wi[uj * ni..(uj + 1) * ni], x) + dot(&wh[uj * nh..(uj + 1) * nh], h) + b[uj],
            );
        }
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut n = vec![0.0; nh];
        let mut output = vec![0.0; nh];
        for j in 0..nh {
            let nj = 2 * nh + j;
            n[j] = (dot(&wi[nj * ni..(nj + 1) * ni], x) + dot(&wh[nj * nh..(nj + 1) * nh], &rh) + b[nj])
                .tanh();
            output[j] = (1.0 - u[j]) * n[j] + u[j] * h[j];
        }
        Ok(GruCache {
            x: x.to_vec(),
            h: h.to_vec(),
            r,
            u,
            n,
            rh,
            output,
        })
    }

    pub fn backward(
        &mut self,
        cache: &GruCache,
        d_out: &[f64],
        dx: Option<&mut [f64]>,
        dh: Option<&mut [f64]>,
    ) {
        let (ni, nh) = (self.input_dim(), self.hidden_dim());
        let GruCache { x, h, r, u, n, rh, .. } = cache;
        // Pre-activation gradients stacked [r; u; n].
        let mut dpre = vec![0.0; 3 * nh];
        for j in 0..nh {
            let dn = d_out[j] * (1.0 - u[j]);
            let du = d_out[j] * (h[j] - n[j]);
            dpre[nh + j] = du * u[j] * (1.0 - u[j]);
            dpre[2 * nh + j] = dn * (1.0 - n[j] * n[j]);
        }
        let wh = &self.w_hh.values;
        // d(r ⊙ h) through the candidate's hidden projection.
        let mut drh = vec![0.0; nh];
        for j in 0..nh {
            let d = dpre[2 * nh + j];
            let row = &wh[(2 * nh + j) * nh..(2 * nh + j + 1) * nh];
            for (k, w) in row.iter().enumerate() {
                drh[k] += w * d;
            }
        }
        for j in 0..nh {
            let dr = drh[j] * h[j];
            dpre[j] = dr * r[j] * (1.0 - r[j]);
        }
        if let Some(dh) = dh {
            for j in 0..nh {
                dh[j] += d_out[j] * u[j] + drh[j] * r[j];
            }
            for row_idx in 0..2 * nh {
                let d = dpre[row_idx];
                let row = &wh[row_idx * nh..(row_idx + 1) * nh];
                for (k, w) in row.iter().enumerate() {
                    dh[k] += w * d;
                }
            }
        }
        if let Some(dx) = dx {
            let wi = &self.w_ih.values;
            for (row_idx, &d) in dpre.iter().enumerate() {
                let row = &wi[row_idx * ni..(row_idx + 1) * ni];
                for (k, w) in row.iter().enumerate() {
                    dx[k] += w * d;
                }
            }
        }
        if self.w_ih.trainable {
            for (row_idx, &d) in dpre.iter().enumerate() {
                let grow = &mut self.w_ih.grads[row_idx * ni..(row_idx + 1) * ni];
                for (g, xi) in grow.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        if self.w_hh.trainable {
            for (row_idx, &d) in dpre.iter().enumerate() {
                let src: &[f64] = if row_idx < 2 * nh { h } else { rh };
                let grow = &mut self.w_hh.grads[row_idx * nh..(row_idx + 1) * nh];
                for (g, v) in grow.iter_mut().zip(src) {
                    *g += d * v;
                }
            }
        }
        if self.bias.trainable {
            for (g, d) in self.bias.grads.iter_mut().zip(&dpre) {
                *g += d;
            }
        }
    }
}

impl Parameterized for GruCell {
    fn groups(&self) -> Vec<&ParamGroup> {
        vec![&self.w_ih, &self.w_hh, &self.bias]
    }

    fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }
}

/// Layer normalization with learnable gain and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: ParamGroup,
    pub bias: ParamGroup,
}

#[derive(Debug, Clone)]
pub struct LnCache {
    pub xhat: Vec<f64>,
    pub inv_std: f64,
    pub output: Vec<f64>,
}

impl LayerNorm {
    pub fn new(name: &str, dim: usize) -> Self {
        LayerNorm {
            gain: ParamGroup::filled(format!("{name}.gain"), &[dim], 1.0),
            bias: ParamGroup::zeros(format!("{name}.bias"), &[dim]),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<LnCache> {
        check_len("layer norm input", self.gain.len(), x.len())?;
        if x.len() < 2 {
            return Err(Error::Dimension {
                context: "layer norm needs at least two features",
                expected: 2,
                got: x.len(),
            });
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv_std = 1.0 / (var + LN_EPS).sqrt();
        let xhat: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
        let output = xhat
            .iter()
            .zip(self.gain.values.iter().zip(&self.bias.values))
            .map(|(xh, (g, b))| g * xh + b)
            .collect();
        Ok(LnCache {
            xhat,
            inv_std,
            output,
        })
    }

    pub fn backward(&mut self, cache: &LnCache, dy: &[f64], dx: Option<&mut [f64]>) {
        let n = dy.len() as f64;
        if self.gain.trainable {
            for ((g, d), xh) in self.gain.grads.iter_mut().zip(dy).zip(&cache.xhat) {
                *g += d * xh;
            }
        }
        if self.bias.trainable {
            for (g, d) in self.bias.grads.iter_mut().zip(dy) {
                *g += d;
            }
        }
        if let Some(dx) = dx {
            let dxhat: Vec<f64> = dy.iter().zip(&self.gain.values).map(|(d, g)| d * g).collect();
            let mean_d = dxhat.iter().sum::<f64>() / n;
            let mean_dx = dxhat.iter().zip(&cache.xhat).map(|(a, b)| a * b).sum::<f64>() / n;
            for ((o, d), xh) in dx.iter_mut().zip(&dxhat).zip(&cache.xhat) {
                *o += cache.inv_std * (d - mean_d - xh * mean_dx);
            }
        }
    }
}

impl Parameterized for LayerNorm {
    fn groups(&self) -> Vec<&ParamGroup> {
        vec![&self.gain, &self.bias]
    }

    fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
        vec![&mut self.gain, &mut self.bias]
    }
}

/// Functional layer norm over explicit gain and bias vectors.
pub fn layer_norm(input: &[f64], gain: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    check_len("layer norm gain", input.len(), gain.len())?;
    check_len("layer norm bias", input.len(), bias.len())?;
    let mut ln = LayerNorm::new("ln", input.len());
    ln.gain.values.copy_from_slice(gain);
    ln.bias.values.copy_from_slice(bias);
    Ok(ln.forward(input)?.output)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Moments are laid out to match the group order of `model`.
    pub fn new(config: AdamConfig, model: &impl Parameterized) -> Self {
        let lens: Vec<usize> = model.groups().iter().map(|g| g.len()).collect();
        AdamState {
            config,
            step_count: 0,
            first_moment: lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected update of every trainable group. Frozen groups are
    /// left untouched; all gradients are zeroed afterwards.
    pub fn step(&mut self, model: &mut impl Parameterized) {
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((group, m), v) in model
            .groups_mut()
            .into_iter()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            if group.trainable {
                for (((p, g), mi), vi) in group
                    .values
                    .iter_mut()
                    .zip(&group.grads)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *mi = beta1 * *mi + (1.0 - beta1) * g;
                    *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                    let mhat = *mi / c1;
                    let vhat = *vi / c2;
                    *p -= learning_rate * mhat / (vhat.sqrt() + epsilon);
                }
            }
            group.zero_grad();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    /// `(group name, max relative error)` for every trainable group.
    pub groups: Vec<(String, f64)>,
    pub max_rel_err: f64,
}

/// Relative error with an absolute floor so that gradients that are zero
/// up to rounding do not dominate the report.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares analytic gradients against central finite differences.
///
/// `eval` must zero the gradients, return the loss, and leave the analytic
/// gradients accumulated in the model's groups. Only trainable groups are
/// checked.
pub fn grad_check<M: Parameterized>(
    model: &mut M,
    mut eval: impl FnMut(&mut M) -> f64,
    h: f64,
) -> GradReport {
    eval(model);
    let analytic: Vec<Option<Vec<f64>>> = model
        .groups()
        .iter()
        .map(|g| g.trainable.then(|| g.grads.clone()))
        .collect();
    let mut report = GradReport {
        groups: Vec::new(),
        max_rel_err: 0.0,
    };
    for (gi, grads) in analytic.iter().enumerate() {
        let Some(grads) = grads else { continue };
        let mut worst: f64 = 0.0;
        for (k, &a) in grads.iter().enumerate() {
            let orig = model.groups()[gi].values[k];
            model.groups_mut()[gi].values[k] = orig + h;
            let plus = eval(model);
            model.groups_mut()[gi].values[k] = orig - h;
            let minus = eval(model);
            model.groups_mut()[gi].values[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(a, numeric));
        }
        report.max_rel_err = report.max_rel_err.max(worst);
        report.groups.push((model.groups()[gi].name.clone(), worst));
    }
    model.zero_grad();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    struct Wrap<T>(T);

    impl Parameterized for Wrap<Vec<ParamGroup>> {
        fn groups(&self) -> Vec<&ParamGroup> {
            self.0.iter().collect()
        }
        fn groups_mut(&mut self) -> Vec<&mut ParamGroup> {
            self.0.iter_mut().collect()
        }
    }

    fn random_vec(stream: &mut Stream, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| stream.random_range(-scale..scale)).collect()
    }

    fn mse_half(v: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let n = v.len() as f64;
        let loss = v.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        let grad = v.iter().zip(target).map(|(a, b)| 2.0 * (a - b) / n).collect();
        (loss, grad)
    }

    #[test]
    fn zero_mlp_gives_zero() {
        let mlp = Mlp::zeros("m", MlpSpec::new(8, 16, Activation::Tanh));
        let out = mlp.forward(&[0.3; 8]).unwrap();
        assert!(out.output.iter().all(|&v| v == 0.0));
        assert!(mlp.forward(&[0.3; 7]).is_err());
    }

    #[test]
    fn scalar_mlp_hand_expansion() {
        let mut mlp = Mlp::zeros("m", MlpSpec::new(1, 1, Activation::Linear).with_hidden(1));
        for l in &mut mlp.layers {
            l.weight.values[0] = 1.0;
        }
        let out = mlp.forward(&[0.3]).unwrap().output[0];
        assert!((out - 0.3f64.tanh().tanh()).abs() < 1e-15);
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut s = rng::stream(1);
        let mut mlp = Mlp::zeros("m", MlpSpec::new(5, 3, Activation::Tanh).with_hidden(7));
        mlp.init_uniform(&mut s);
        for l in &mut mlp.layers {
            l.bias.values = random_vec(&mut s, l.out_dim(), 0.3);
        }
        let x = random_vec(&mut s, 5, 1.0);
        let target = random_vec(&mut s, 3, 0.5);
        let report = grad_check(
            &mut mlp,
            |m| {
                m.zero_grad();
                let c = m.forward(&x).unwrap();
                let (loss, d) = mse_half(&c.output, &target);
                m.backward(&c, &d, None);
                loss
            },
            1e-5,
        );
        assert!(report.max_rel_err < 1e-4, "{report:?}");
    }

    #[test]
    fn gru_zero_params() {
        let gru = GruCell::zeros("g", 24, 12);
        let h: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.5).collect();
        let c = gru.forward(&[0.7; 24], &h).unwrap();
        assert!(c.u.iter().all(|&u| u == 0.5));
        for (o, hv) in c.output.iter().zip(&h) {
            assert!((o - 0.5 * hv).abs() < 1e-15);
        }
        let c = gru.forward(&[0.7; 24], &[0.0; 12]).unwrap();
        assert!(c.output.iter().all(|&v| v == 0.0));
        assert!(gru.forward(&[0.0; 23], &[0.0; 12]).is_err());
    }

    #[test]
    fn layer_norm_cases() {
        let out = layer_norm(&[0.4; 6], &[1.0; 6], &[0.0; 6]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
        let out = layer_norm(&[1.0, -1.0], &[1.0; 2], &[0.0; 2]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-5 && (out[1] + 1.0).abs() < 1e-5);
        assert!(layer_norm(&[1.0], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut m = Wrap(vec![ParamGroup::zeros("p", &[1])]);
        let mut adam = AdamState::new(AdamConfig::default(), &m);
        m.0[0].grads[0] = 1.0;
        adam.step(&mut m);
        assert!((m.0[0].values[0] + 3e-4).abs() < 1e-9);
        assert_eq!(m.0[0].grads[0], 0.0);
    }

    #[test]
    fn adam_zero_grad_and_frozen_groups_unchanged() {
        let mut a = ParamGroup::filled("a", &[3], 0.5);
        let mut b = ParamGroup::filled("b", &[2], -0.25);
        b.trainable = false;
        b.grads = vec![1.0, -2.0];
        a.grads = vec![0.0; 3];
        let mut m = Wrap(vec![a, b]);
        let before = m.0.clone();
        let mut adam = AdamState::new(AdamConfig::default(), &m);
        for _ in 0..5 {
            m.0[1].grads = vec![3.0, 4.0];
            adam.step(&mut m);
        }
        assert_eq!(m.0[0].values, before[0].values);
        assert_eq!(m.0[1].values, before[1].values);
        assert_eq!(m.0[1].grads, vec![0.0, 0.0]);
    }

    #[test]
    fn grad_check_linear_model_is_exact() {
        let mut s = rng::stream(3);
        let mut lin = Linear::zeros("l", 4, 2);
        lin.init_uniform(&mut s);
        let x = random_vec(&mut s, 4, 1.0);
        let report = grad_check(
            &mut lin,
            |l| {
                l.zero_grad();
                let y = l.forward(&x).unwrap();
                let loss = 0.7 * y[0] - 1.3 * y[1];
                l.backward(&x, &[0.7, -1.3], None);
                loss
            },
            1e-5,
        );
        assert!(report.max_rel_err <= 1e-6, "{report:?}");
    }

    #[test]
    fn grad_check_saturated_sigmoid() {
        let mut lin = Linear::zeros("l", 1, 1);
        lin.weight.values[0] = 9.0;
        lin.bias.values[0] = 3.0;
        let x = [1.1];
        let report = grad_check(
            &mut lin,
            |l| {
                l.zero_grad();
                let pre = l.forward(&x).unwrap()[0];
                let y = sigmoid(pre);
                l.backward(&x, &[y * (1.0 - y)], None);
                y
            },
            1e-5,
        );
        assert!(report.max_rel_err <= 1e-3, "{report:?}");
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1.0, -3.0, 0.2, 8.0, 2.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = softmax(&[0.0; 5]);
        assert!(u.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let build = |seed| {
            let mut m = Mlp::zeros("m", MlpSpec::new(8, 16, Activation::Tanh));
            m.init_uniform(&mut rng::stream(seed));
            m
        };
        assert_eq!(build(4), build(4));
        assert_ne!(build(4), build(5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gru_gradients_match_finite_differences(seed in 0u64..10_000) {
            let mut s = rng::stream(seed);
            let mut gru = GruCell::zeros("g", 5, 4);
            gru.init_uniform(&mut s);
            gru.bias.values = random_vec(&mut s, 12, 0.5);
            let x = random_vec(&mut s, 5, 1.0);
            let h = random_vec(&mut s, 4, 0.9);
            let target = random_vec(&mut s, 4, 0.5);
            let report = grad_check(&mut gru, |g| {
                g.zero_grad();
                let c = g.forward(&x, &h).unwrap();
                let (loss, d) = mse_half(&c.output, &target);
                g.backward(&c, &d, None, None);
                loss
            }, 1e-5);
            prop_assert!(report.max_rel_err < 1e-4, "{:?}", report);

            // Input and hidden gradients.
            let c = gru.forward(&x, &h).unwrap();
            let (_, d) = mse_half(&c.output, &target);
            let mut dx = vec![0.0; 5];
            let mut dh = vec![0.0; 4];
            gru.backward(&c, &d, Some(&mut dx), Some(&mut dh));
            let loss_at = |x: &[f64], h: &[f64]| mse_half(&gru.forward(x, h).unwrap().output, &target).0;
            for k in 0..5 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += 1e-5; xm[k] -= 1e-5;
                let num = (loss_at(&xp, &h) - loss_at(&xm, &h)) / 2e-5;
                prop_assert!(relative_error(dx[k], num) < 1e-4);
            }
            for k in 0..4 {
                let (mut hp, mut hm) = (h.clone(), h.clone());
                hp[k] += 1e-5; hm[k] -= 1e-5;
                let num = (loss_at(&x, &hp) - loss_at(&x, &hm)) / 2e-5;
                prop_assert!(relative_error(dh[k], num) < 1e-4);
            }
        }

        #[test]
        fn layer_norm_gradients_match_finite_differences(seed in 0u64..10_000) {
            let mut s = rng::stream(seed);
            let mut ln = LayerNorm::new("ln", 6);
            ln.gain.values = random_vec(&mut s, 6, 2.0);
            ln.bias.values = random_vec(&mut s, 6, 0.5);
            let x = random_vec(&mut s, 6, 1.5);
            let target = random_vec(&mut s, 6, 1.0);
            let report = grad_check(&mut ln, |l| {
                l.zero_grad();
                let c = l.forward(&x).unwrap();
                let (loss, d) = mse_half(&c.output, &target);
                l.backward(&c, &d, None);
                loss
            }, 1e-5);
            prop_assert!(report.max_rel_err < 1e-4, "{:?}", report);

            let c = ln.forward(&x).unwrap();
            let (_, d) = mse_half(&c.output, &target);
            let mut dx = vec![0.0; 6];
            ln.backward(&c, &d, Some(&mut dx));
            for k in 0..6 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += 1e-5; xm[k] -= 1e-5;
                let lp = mse_half(&ln.forward(&xp).unwrap().output, &target).0;
                let lm = mse_half(&ln.forward(&xm).unwrap().output, &target).0;
                prop_assert!(relative_error(dx[k], (lp - lm) / 2e-5) < 1e-4);
            }
        }

        #[test]
        fn mlp_input_gradients_match_finite_differences(seed in 0u64..10_000) {
            let mut s = rng::stream(seed);
            let mut mlp = Mlp::zeros("m", MlpSpec::new(4, 3, Activation::Sigmoid).with_hidden(6));
            mlp.init_uniform(&mut s);
            let x = random_vec(&mut s, 4, 1.0);
            let target = random_vec(&mut s, 3, 0.5);
            let c = mlp.forward(&x).unwrap();
            let (_, d) = mse_half(&c.output, &target);
            let mut dx = vec![0.0; 4];
            mlp.backward(&c, &d, Some(&mut dx));
            for k in 0..4 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += 1e-5; xm[k] -= 1e-5;
                let lp = mse_half(&mlp.forward(&xp).unwrap().output, &target).0;
                let lm = mse_half(&mlp.forward(&xm).unwrap().output, &target).0;
                prop_assert!(relative_error(dx[k], (lp - lm) / 2e-5) < 1e-4);
            }
        }
    }
}
