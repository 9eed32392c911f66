//! Dense dual-head policy-value network with explicit backpropagation.
//!
//! ```text
//! input -> [dense + ReLU]* -> shared features
//!   policy: dense -> softmax
//!   value:  [dense + ReLU]* -> dense(1) -> tanh
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{ActionIndex, PolicyVector, ACTION_COUNT, PLANE_LEN};

use super::{Evaluation, ModelError};

/// Log clamp applied before taking `ln` of a probability.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub policy: usize,
    /// Hidden widths of the value branch before its single tanh output.
    pub value_hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input: PLANE_LEN,
            hidden: vec![256, 256],
            policy: ACTION_COUNT,
            value_hidden: vec![64, 256],
        }
    }
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn uniform(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = (1.0 / inputs as f64).sqrt();
        let mut layer = Dense::zeros(inputs, outputs);
        for w in &mut layer.weights {
            *w = rng.random_range(-bound..bound);
        }
        layer
    }

    /// `W x + b` for every input in the batch. Rows are the outer loop so
    /// each weight row is read once per batch.
    fn forward_batch(&self, xs: &[&[f64]]) -> Vec<Vec<f64>> {
        let sparse: Vec<Option<Vec<usize>>> = xs.iter().map(|x| sparse_support(x)).collect();
        let mut outs: Vec<Vec<f64>> = xs.iter().map(|_| self.bias.clone()).collect();
        let dense: Vec<usize> = (0..xs.len()).filter(|&b| sparse[b].is_none()).collect();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (b, x) in xs.iter().enumerate() {
                if let Some(nz) = &sparse[b] {
                    outs[b][o] += nz.iter().map(|&i| row[i] * x[i]).sum::<f64>();
                }
            }
            let mut quads = dense.chunks_exact(4);
            for q in &mut quads {
                let sums = dot4(row, [xs[q[0]], xs[q[1]], xs[q[2]], xs[q[3]]]);
                for (&b, s) in q.iter().zip(sums) {
                    outs[b][o] += s;
                }
            }
            for &b in quads.remainder() {
                outs[b][o] += dot(row, xs[b]);
            }
        }
        outs
    }

    /// Accumulates `scale * sum_b grad_out_b (x) x_b` into `grad`; when
    /// `want_input` is set also returns `W^T grad_out_b` per example.
    fn backward_batch(
        &self,
        xs: &[&[f64]],
        grad_outs: &[&[f64]],
        scale: f64,
        grad: &mut Dense,
        want_input: bool,
    ) -> Vec<Vec<f64>> {
        let sparse: Vec<Option<Vec<usize>>> = xs.iter().map(|x| sparse_support(x)).collect();
        let mut grad_ins: Vec<Vec<f64>> = if want_input {
            xs.iter().map(|_| vec![0.0; self.inputs]).collect()
        } else {
            Vec::new()
        };
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grad_row = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for (b, x) in xs.iter().enumerate() {
                let g = grad_outs[b][o];
                if g == 0.0 {
                    continue;
                }
                let gs = g * scale;
                grad.bias[o] += gs;
                match &sparse[b] {
                    Some(nz) => {
                        for &i in nz {
                            grad_row[i] += gs * x[i];
                        }
                    }
                    None => axpy(gs, x, grad_row),
                }
                if want_input {
                    axpy(g, row, &mut grad_ins[b]);
                }
            }
        }
        grad_ins
    }
}

/// Nonzero positions when the vector is mostly zeros.
fn sparse_support(x: &[f64]) -> Option<Vec<usize>> {
    let nz: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    (nz.len() * 4 < x.len()).then_some(nz)
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dot products of one row against four vectors, reading the row once.
#[inline]
fn dot4(row: &[f64], xs: [&[f64]; 4]) -> [f64; 4] {
    let n = row.len();
    let [x0, x1, x2, x3] = xs.map(|x| &x[..n]);
    let mut acc = [[0.0f64; 2]; 4];
    let pairs = n / 2;
    for c in 0..pairs {
        let i = 2 * c;
        let (r0, r1) = (row[i], row[i + 1]);
        acc[0][0] += r0 * x0[i];
        acc[0][1] += r1 * x0[i + 1];
        acc[1][0] += r0 * x1[i];
        acc[1][1] += r1 * x1[i + 1];
        acc[2][0] += r0 * x2[i];
        acc[2][1] += r1 * x2[i + 1];
        acc[3][0] += r0 * x3[i];
        acc[3][1] += r1 * x3[i + 1];
    }
    let mut out = acc.map(|a| a[0] + a[1]);
    if n % 2 == 1 {
        let r = row[n - 1];
        for (o, x) in out.iter_mut().zip([x0, x1, x2, x3]) {
            *o += r * x[n - 1];
        }
    }
    out
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Network weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    seed: u64,
    pub backbone: Vec<Dense>,
    pub policy_head: Dense,
    /// Hidden value layers followed by the one-unit output layer.
    pub value_head: Vec<Dense>,
}

/// Target for the policy head: a single played move or a visit distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyTarget {
    Action(ActionIndex),
    Distribution(Vec<(ActionIndex, f64)>),
}

impl PolicyTarget {
    pub fn entries(&self) -> Vec<(usize, f64)> {
        match self {
            PolicyTarget::Action(a) => vec![(a.value(), 1.0)],
            PolicyTarget::Distribution(d) => d.iter().map(|(a, p)| (a.value(), *p)).collect(),
        }
    }

    /// Action with the largest target mass (lowest index on ties).
    pub fn argmax(&self) -> ActionIndex {
        match self {
            PolicyTarget::Action(a) => *a,
            PolicyTarget::Distribution(d) => {
                let mut best = d[0];
                for &(a, p) in &d[1..] {
                    if p > best.1 || (p == best.1 && a < best.0) {
                        best = (a, p);
                    }
                }
                best.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct LossBreakdown {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub total: f64,
}

impl std::fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Loss: {:.4}, Policy Loss: {:.4}, Value Loss: {:.4}",
            self.total, self.policy_loss, self.value_loss
        )
    }
}

/// Cross-entropy plus squared value error, weighted 1:1.
pub fn loss(eval: &Evaluation, target: &PolicyTarget, z: f64) -> LossBreakdown {
    let policy = eval.policy.as_slice();
    let policy_loss: f64 = target
        .entries()
        .iter()
        .map(|&(i, t)| -t * policy[i].max(LOG_CLAMP).ln())
        .sum();
    let value_loss = (eval.value - z).powi(2);
    LossBreakdown {
        policy_loss,
        value_loss,
        total: policy_loss + value_loss,
    }
}

/// Activations retained by [`ModelParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    backbone: Vec<Vec<f64>>,
    value_hidden: Vec<Vec<f64>>,
    policy: Vec<f64>,
    value: f64,
}

impl ModelParams {
    /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(config, seed, |i, o| Dense::uniform(i, o, &mut rng))
    }

    pub fn zeros(config: ModelConfig) -> Self {
        Self::build(config, 0, Dense::zeros)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone())
    }

    fn build(config: ModelConfig, seed: u64, mut layer: impl FnMut(usize, usize) -> Dense) -> Self {
        let mut width = config.input;
        let mut backbone = Vec::new();
        for &h in &config.hidden {
            backbone.push(layer(width, h));
            width = h;
        }
        let policy_head = layer(width, config.policy);
        let mut value_head = Vec::new();
        for &h in &config.value_hidden {
            value_head.push(layer(width, h));
            width = h;
        }
        value_head.push(layer(width, 1));
        ModelParams {
            config,
            seed,
            backbone,
            policy_head,
            value_head,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.backbone
            .iter()
            .chain(std::iter::once(&self.policy_head))
            .chain(self.value_head.iter())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.backbone
            .iter_mut()
            .chain(std::iter::once(&mut self.policy_head))
            .chain(self.value_head.iter_mut())
    }

    /// Parameter tensors in declaration order: each layer's weights then bias,
    /// backbone first, then the policy head, then the value head.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Evaluation, ActivationCache), ModelError> {
        Ok(self
            .forward_batch(&[input])?
            .pop()
            .expect("one output per input"))
    }

    pub fn forward_batch(
        &self,
        inputs: &[&[f64]],
    ) -> Result<Vec<(Evaluation, ActivationCache)>, ModelError> {
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.config.input) {
            return Err(ModelError::ShapeMismatch {
                expected: self.config.input,
                actual: bad.len(),
            });
        }
        let relu = |mut v: Vec<Vec<f64>>| {
            for x in v.iter_mut().flatten() {
                *x = x.max(0.0);
            }
            v
        };
        // backbone[l] holds the input of backbone layer l; the last entry is
        // the shared feature vector.
        let mut backbone: Vec<Vec<Vec<f64>>> = vec![inputs.iter().map(|x| x.to_vec()).collect()];
        for layer in &self.backbone {
            let out = relu(layer.forward_batch(&refs(backbone.last().unwrap())));
            backbone.push(out);
        }
        let features = refs(backbone.last().unwrap());
        let policies: Vec<Vec<f64>> = self
            .policy_head
            .forward_batch(&features)
            .iter()
            .map(|l| softmax(l))
            .collect();

        let (last, hidden) = self
            .value_head
            .split_last()
            .expect("value head has an output layer");
        // value_hidden[k] holds the input of value layer k.
        let mut value_hidden: Vec<Vec<Vec<f64>>> = vec![backbone.last().unwrap().clone()];
        for layer in hidden {
            let out = relu(layer.forward_batch(&refs(value_hidden.last().unwrap())));
            value_hidden.push(out);
        }
        let values: Vec<f64> = last
            .forward_batch(&refs(value_hidden.last().unwrap()))
            .iter()
            .map(|o| o[0].tanh())
            .collect();

        let mut out = Vec::with_capacity(inputs.len());
        for (b, (policy, value)) in policies.into_iter().zip(values).enumerate() {
            let cache = ActivationCache {
                backbone: backbone.iter().map(|layer| layer[b].clone()).collect(),
                value_hidden: value_hidden.iter().map(|layer| layer[b].clone()).collect(),
                policy: policy.clone(),
                value,
            };
            out.push((
                Evaluation {
                    policy: PolicyVector(policy),
                    value,
                },
                cache,
            ));
        }
        Ok(out)
    }

    /// Exact gradient of the 1:1 loss for one example.
    pub fn backward(
        &self,
        cache: &ActivationCache,
        target: &PolicyTarget,
        z: f64,
    ) -> Result<ModelParams, ModelError> {
        let mut grads = self.zeros_like();
        self.backward_batch(&[(cache, target, z)], 1.0, &mut grads)?;
        Ok(grads)
    }

    /// Adds `scale` times the summed example gradients into `grads`.
    pub fn backward_batch(
        &self,
        items: &[(&ActivationCache, &PolicyTarget, f64)],
        scale: f64,
        grads: &mut ModelParams,
    ) -> Result<(), ModelError> {
        if grads.config != self.config {
            return Err(ModelError::ShapeMismatch {
                expected: self.parameter_count(),
                actual: grads.parameter_count(),
            });
        }
        let depth = self.backbone.len() + 1;
        if let Some((bad, _, _)) = items
            .iter()
            .find(|(c, _, _)| c.backbone.len() != depth || c.backbone[0].len() != self.config.input)
        {
            return Err(ModelError::ShapeMismatch {
                expected: self.config.input,
                actual: bad.backbone[0].len(),
            });
        }
        let features: Vec<&[f64]> = items
            .iter()
            .map(|(c, _, _)| c.backbone[depth - 1].as_slice())
            .collect();

        // d(-sum t ln max(p, eps)) / d logits, exact including the clamp.
        let dlogits: Vec<Vec<f64>> = items
            .iter()
            .map(|(cache, target, _)| {
                let entries = target.entries();
                let live_mass: f64 = entries
                    .iter()
                    .filter(|&&(i, _)| cache.policy[i] >= LOG_CLAMP)
                    .map(|&(_, t)| t)
                    .sum();
                let mut d: Vec<f64> = cache.policy.iter().map(|p| p * live_mass).collect();
                for &(i, t) in &entries {
                    if cache.policy[i] >= LOG_CLAMP {
                        d[i] -= t;
                    }
                }
                d
            })
            .collect();
        let mut dfeatures = self.policy_head.backward_batch(
            &features,
            &refs(&dlogits),
            scale,
            &mut grads.policy_head,
            true,
        );

        let mut dvalue: Vec<Vec<f64>> = items
            .iter()
            .map(|(c, _, z)| vec![2.0 * (c.value - z) * (1.0 - c.value * c.value)])
            .collect();
        for (k, layer) in self.value_head.iter().enumerate().rev() {
            let xs: Vec<&[f64]> = items
                .iter()
                .map(|(c, _, _)| c.value_hidden[k].as_slice())
                .collect();
            let mut dh =
                layer.backward_batch(&xs, &refs(&dvalue), scale, &mut grads.value_head[k], true);
            if k > 0 {
                for (d, x) in dh.iter_mut().zip(&xs) {
                    relu_mask(d, x);
                }
            }
            dvalue = dh;
        }
        for (d, extra) in dfeatures.iter_mut().zip(&dvalue) {
            axpy(1.0, extra, d);
        }

        let mut dout = dfeatures;
        for (l, layer) in self.backbone.iter().enumerate().rev() {
            for (d, (c, _, _)) in dout.iter_mut().zip(items) {
                relu_mask(d, &c.backbone[l + 1]);
            }
            let xs: Vec<&[f64]> = items
                .iter()
                .map(|(c, _, _)| c.backbone[l].as_slice())
                .collect();
            dout = layer.backward_batch(&xs, &refs(&dout), scale, &mut grads.backbone[l], l > 0);
        }
        Ok(())
    }
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

/// Zeroes gradient entries whose ReLU output was not positive.
fn relu_mask(grad: &mut [f64], activation: &[f64]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}
