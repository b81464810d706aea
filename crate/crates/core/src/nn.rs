//! Minimal dense-network machinery: fully connected layers with ReLU hidden
//! activations and a linear output, exact reverse-mode gradients, and Adam.
//!
//! Everything is 64-bit and deterministic given the caller's random source;
//! no autodiff beyond this fixed architecture family.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Adam first-moment decay.
pub const ADAM_BETA1: f64 = 0.9;
/// Adam second-moment decay.
pub const ADAM_BETA2: f64 = 0.999;
/// Adam denominator offset.
pub const ADAM_EPSILON: f64 = 1e-8;

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_WEIGHT_STD: f64 = 0.01;

/// Dot product with four fixed accumulators. The association order is part
/// of the crate's determinism contract; it also lets the backend vectorize
/// what a strict left-to-right reduction would forbid.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let chunks = n / 4;
    for i in 0..chunks {
        let k = 4 * i;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in (4 * chunks)..n {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// One dense layer, `y = W x + b`, with `W` row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// `out += W x` plus bias, written into a fresh vector.
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (o, row) in self.weights.chunks_exact(self.in_dim).enumerate() {
            out[o] += dot(row, x);
        }
        out
    }
}

/// Weights and biases of a multi-layer perceptron. Hidden layers are
/// rectified-linear; the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer pre-activations and activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Vec<f64>,
    /// Pre-activation `z_k = W_k a_{k-1} + b_k` for every layer.
    pre: Vec<Vec<f64>>,
    /// Post-activation `a_k` (ReLU of `z_k` for hidden layers, `z_k` for the
    /// output layer).
    post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn layer_count(&self) -> usize {
        self.pre.len()
    }
}

impl NetworkParams {
    /// Gaussian(0, 0.01) weights, zero biases.
    pub fn init<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 layer sizes, got {}",
                layer_sizes.len()
            )));
        }
        if let Some(&bad) = layer_sizes.iter().find(|&&s| s == 0) {
            return Err(Error::Config(format!("layer size must be positive, got {bad}")));
        }
        let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let mut layer = DenseLayer::zeros(in_dim, out_dim);
            for w in &mut layer.weights {
                let n: f64 = rng.sample(StandardNormal);
                *w = INIT_WEIGHT_STD * n;
            }
            layers.push(layer);
        }
        Ok(NetworkParams { layers })
    }

    /// All-zero parameters with the given architecture.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 layer sizes, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("layer size must be positive".into()));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|pair| DenseLayer::zeros(pair[0], pair[1]))
            .collect();
        Ok(NetworkParams { layers })
    }

    /// Zero parameters shaped like `self` (gradient accumulators).
    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// `self += c * other`, elementwise over all parameters.
    pub fn add_scaled(&mut self, other: &NetworkParams, c: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (w, g) in a.weights.iter_mut().zip(&b.weights) {
                *w += c * g;
            }
            for (w, g) in a.bias.iter_mut().zip(&b.bias) {
                *w += c * g;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(|w| *w *= c);
            layer.bias.iter_mut().for_each(|b| *b *= c);
        }
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input length {} != first layer in-dimension {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass retaining the per-layer trace for `backward`.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardTrace)> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut pre = Vec::with_capacity(n);
        let mut post = Vec::with_capacity(n);
        let mut x = input.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&x);
            let a = if k + 1 < n {
                z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            x = a.clone();
            post.push(a);
        }
        let trace = ForwardTrace {
            input: input.to_vec(),
            pre,
            post,
        };
        Ok((x, trace))
    }

    /// Forward pass without a trace, for action selection and evaluation.
    pub fn forward_value(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut x = input.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&x);
            if k + 1 < n {
                z.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v = 0.0
                    }
                });
            }
            x = z;
        }
        Ok(x)
    }

    /// Exact reverse-mode derivatives of `forward`.
    ///
    /// Returns parameter gradients shaped like `self` plus the gradient with
    /// respect to the input vector (needed to chain a critic's action
    /// gradient into an actor).
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_gradient: &[f64],
    ) -> Result<(NetworkParams, Vec<f64>)> {
        let mut grads = self.zeros_like();
        let input_grad = self.backward_accumulate(trace, output_gradient, 1.0, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Gradient with respect to the input only, skipping parameter
    /// gradients entirely. Used to chain a critic's action gradient into an
    /// actor without touching the critic.
    pub fn backward_input_only(
        &self,
        trace: &ForwardTrace,
        output_gradient: &[f64],
    ) -> Result<Vec<f64>> {
        let n = self.layers.len();
        if trace.layer_count() != n {
            return Err(Error::Shape(format!(
                "trace has {} layers, params have {n}",
                trace.layer_count()
            )));
        }
        if output_gradient.len() != self.output_dim() {
            return Err(Error::Shape("output gradient length mismatch".into()));
        }
        let mut delta = output_gradient.to_vec();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            if delta.len() != layer.out_dim {
                return Err(Error::Shape(format!("trace/params mismatch at layer {k}")));
            }
            let mut prev = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            if k > 0 {
                for (p, &z) in prev.iter_mut().zip(&trace.pre[k - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// [`NetworkParams::backward`], but adding `scale` times the parameter
    /// gradients into `accum` instead of allocating fresh buffers. This is
    /// the batch-update workhorse.
    pub fn backward_accumulate(
        &self,
        trace: &ForwardTrace,
        output_gradient: &[f64],
        scale: f64,
        accum: &mut NetworkParams,
    ) -> Result<Vec<f64>> {
        let n = self.layers.len();
        if trace.layer_count() != n || accum.layers.len() != n {
            return Err(Error::Shape(format!(
                "trace has {} layers, params have {n}",
                trace.layer_count()
            )));
        }
        if output_gradient.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient length {} != output dimension {}",
                output_gradient.len(),
                self.output_dim()
            )));
        }
        // delta = dL/dz_k, starting at the linear output layer.
        let mut delta = output_gradient.to_vec();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let below: &[f64] = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            if below.len() != layer.in_dim || delta.len() != layer.out_dim {
                return Err(Error::Shape(format!("trace/params mismatch at layer {k}")));
            }
            let g = &mut accum.layers[k];
            if g.in_dim != layer.in_dim || g.out_dim != layer.out_dim {
                return Err(Error::Shape(format!("accumulator mismatch at layer {k}")));
            }
            for (o, &d) in delta.iter().enumerate() {
                let sd = scale * d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, &x) in row.iter_mut().zip(below) {
                    *gw += sd * x;
                }
                g.bias[o] += sd;
            }
            // dL/da_{k-1} = W_k^T delta, then the ReLU mask of layer k-1.
            let mut prev = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            if k > 0 {
                for (p, &z) in prev.iter_mut().zip(&trace.pre[k - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }
}

/// First/second-moment accumulators and step counter for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients without
/// touching the parameters or the step counter.
pub fn adam_step(
    params: &mut NetworkParams,
    adam: &mut AdamState,
    grads: &NetworkParams,
    learning_rate: f64,
) -> Result<()> {
    if learning_rate <= 0.0 {
        return Err(Error::Argument(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if grads.layers.len() != params.layers.len() {
        return Err(Error::Shape("gradient/parameter layer count mismatch".into()));
    }
    for (g, p) in grads.layers.iter().zip(&params.layers) {
        if g.in_dim != p.in_dim || g.out_dim != p.out_dim {
            return Err(Error::Shape("gradient/parameter shape mismatch".into()));
        }
        if g.iter_finite_violation() {
            return Err(Error::Numeric("non-finite gradient, update aborted".into()));
        }
    }
    adam.t += 1;
    let t = adam.t as i32;
    let bc1 = 1.0 - libm::pow(ADAM_BETA1, t as f64);
    let bc2 = 1.0 - libm::pow(ADAM_BETA2, t as f64);
    for ((pl, gl), (ml, vl)) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(adam.m.layers.iter_mut().zip(&mut adam.v.layers))
    {
        update_slice(&mut pl.weights, &gl.weights, &mut ml.weights, &mut vl.weights, learning_rate, bc1, bc2);
        update_slice(&mut pl.bias, &gl.bias, &mut ml.bias, &mut vl.bias, learning_rate, bc1, bc2);
    }
    Ok(())
}

fn update_slice(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, bc1: f64, bc2: f64) {
    for i in 0..p.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPSILON);
    }
}

impl DenseLayer {
    fn iter_finite_violation(&self) -> bool {
        self.weights
            .iter()
            .chain(self.bias.iter())
            .any(|x| !x.is_finite())
    }
}

/// Numerically stabilized softmax cross-entropy against a one-hot target.
///
/// Returns the loss and its gradient with respect to the logits
/// (`softmax(logits) - onehot(target)`).
pub fn softmax_cross_entropy(logits: &[f64], target_index: usize) -> Result<(f64, Vec<f64>)> {
    if target_index >= logits.len() {
        return Err(Error::Argument(format!(
            "target index {target_index} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let sum: f64 = probs.iter().sum();
    let log_sum = libm::log(sum);
    let loss = log_sum - (logits[target_index] - max);
    for p in &mut probs {
        *p /= sum;
    }
    probs[target_index] -= 1.0;
    Ok((loss, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_rejects_bad_sizes() {
        assert!(matches!(NetworkParams::init(&[], &mut rng(0)), Err(Error::Config(_))));
        assert!(matches!(NetworkParams::init(&[4], &mut rng(0)), Err(Error::Config(_))));
        assert!(matches!(NetworkParams::init(&[4, 0, 2], &mut rng(0)), Err(Error::Config(_))));
    }

    #[test]
    fn init_degenerate_single_weight() {
        let net = NetworkParams::init(&[1, 1], &mut rng(7)).unwrap();
        assert_eq!(net.layers.len(), 1);
        assert_eq!(net.layers[0].weights.len(), 1);
        assert_eq!(net.layers[0].bias, vec![0.0]);
    }

    #[test]
    fn init_weight_distribution() {
        // 50*64 + 64*64 + 64*16 = 8320 draws, plenty for a std check.
        let net = NetworkParams::init(&[50, 64, 64, 16], &mut rng(42)).unwrap();
        let ws: Vec<f64> = net.layers.iter().flat_map(|l| l.weights.iter().copied()).collect();
        assert!(ws.len() >= 4096);
        assert!(ws.iter().all(|w| w.is_finite()));
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        let var = ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / ws.len() as f64;
        let std = var.sqrt();
        assert!((std - 0.01).abs() < 0.002, "sample std {std}");
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn forward_zero_network_is_zero() {
        let net = NetworkParams::zeros(&[3, 5, 2]).unwrap();
        let (out, _) = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn forward_relu_clips_hidden() {
        // [1,1,1] net with identity weights: relu(-3) = 0 -> output 0.
        let mut net = NetworkParams::zeros(&[1, 1, 1]).unwrap();
        net.layers[0].weights[0] = 1.0;
        net.layers[1].weights[0] = 1.0;
        let (out, _) = net.forward(&[-3.0]).unwrap();
        assert_eq!(out, vec![0.0]);
        let (out, _) = net.forward(&[3.0]).unwrap();
        assert_eq!(out, vec![3.0]);
    }

    #[test]
    fn forward_dimension_mismatch() {
        let net = NetworkParams::zeros(&[3, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    /// Independent oracle: naive nested-Vec forward pass.
    fn oracle_forward(net: &NetworkParams, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for (k, layer) in net.layers.iter().enumerate() {
            let mut y = Vec::with_capacity(layer.out_dim);
            for o in 0..layer.out_dim {
                let mut acc = layer.bias[o];
                for i in 0..layer.in_dim {
                    acc += layer.weights[o * layer.in_dim + i] * input_or(&x, i);
                }
                y.push(acc);
            }
            if k + 1 < net.layers.len() {
                y = y.into_iter().map(|v| v.max(0.0)).collect();
            }
            x = y;
        }
        x
    }

    fn input_or(x: &[f64], i: usize) -> f64 {
        x[i]
    }

    #[test]
    fn forward_matches_oracle() {
        let net = NetworkParams::init(&[6, 9, 4], &mut rng(3)).unwrap();
        let mut r = rng(11);
        for _ in 0..20 {
            let input: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
            let (out, _) = net.forward(&input).unwrap();
            let want = oracle_forward(&net, &input);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_value_equals_forward() {
        let net = NetworkParams::init(&[5, 8, 3], &mut rng(9)).unwrap();
        let input = [0.3, -1.0, 2.0, 0.0, -0.2];
        let (a, _) = net.forward(&input).unwrap();
        let b = net.forward_value(&input).unwrap();
        assert_eq!(a, b);
    }

    /// Loss L(params) = dot(output, probe) used by the finite-difference
    /// checks below.
    fn probe_loss(net: &NetworkParams, input: &[f64], probe: &[f64]) -> f64 {
        let out = net.forward_value(input).unwrap();
        out.iter().zip(probe).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Finite differences cross ReLU kinks for a small fraction of
        // coordinates (pre-activations within h of zero), so require 99% of
        // significant coordinates within tolerance rather than all of them.
        let mut net = NetworkParams::init(&[4, 8, 8, 3], &mut rng(5)).unwrap();
        // Scale weights so pre-activations sit far from the ReLU kinks
        // relative to the step h.
        net.scale(50.0);
        let mut r = rng(17);
        let input: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let (_, trace) = net.forward(&input).unwrap();
        let (grads, input_grad) = net.backward(&trace, &probe).unwrap();

        let h = 1e-5;
        let mut rel_errors = Vec::new();
        for li in 0..net.layers.len() {
            let coords = net.layers[li].weights.len() + net.layers[li].bias.len();
            for ci in 0..coords {
                let perturb = |net: &NetworkParams, delta: f64| -> NetworkParams {
                    let mut p = net.clone();
                    if ci < p.layers[li].weights.len() {
                        p.layers[li].weights[ci] += delta;
                    } else {
                        let bi = ci - p.layers[li].weights.len();
                        p.layers[li].bias[bi] += delta;
                    }
                    p
                };
                let fd = (probe_loss(&perturb(&net, h), &input, &probe)
                    - probe_loss(&perturb(&net, -h), &input, &probe))
                    / (2.0 * h);
                let an = if ci < grads.layers[li].weights.len() {
                    grads.layers[li].weights[ci]
                } else {
                    grads.layers[li].bias[ci - grads.layers[li].weights.len()]
                };
                if an.abs() > 1e-8 {
                    rel_errors.push((fd - an).abs() / an.abs());
                }
            }
        }
        assert!(rel_errors.len() > 50, "too few significant gradients");
        let ok = rel_errors.iter().filter(|&&e| e < 1e-4).count();
        assert!(
            ok as f64 >= 0.99 * rel_errors.len() as f64,
            "{ok}/{} coordinates within tolerance",
            rel_errors.len()
        );

        // Input gradient against finite differences too.
        for i in 0..input.len() {
            let mut plus = input.clone();
            plus[i] += h;
            let mut minus = input.clone();
            minus[i] -= h;
            let fd = (probe_loss(&net, &plus, &probe) - probe_loss(&net, &minus, &probe)) / (2.0 * h);
            if input_grad[i].abs() > 1e-6 {
                assert!((fd - input_grad[i]).abs() / input_grad[i].abs() < 1e-3);
            }
        }
    }

    #[test]
    fn backward_zero_output_gradient() {
        let net = NetworkParams::init(&[3, 4, 2], &mut rng(1)).unwrap();
        let (_, trace) = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let (grads, input_grad) = net.backward(&trace, &[0.0, 0.0]).unwrap();
        assert!(grads.iter_values().all(|g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_single_linear_layer_chain_rule() {
        // y = w x: input gradient must be w * output_gradient.
        let mut net = NetworkParams::zeros(&[1, 1]).unwrap();
        net.layers[0].weights[0] = -2.5;
        let (_, trace) = net.forward(&[3.0]).unwrap();
        let (_, input_grad) = net.backward(&trace, &[1.5]).unwrap();
        assert!((input_grad[0] - (-2.5 * 1.5)).abs() < 1e-15);
    }

    #[test]
    fn backward_trace_mismatch() {
        let a = NetworkParams::zeros(&[2, 3, 2]).unwrap();
        let b = NetworkParams::zeros(&[2, 2]).unwrap();
        let (_, trace) = a.forward(&[0.0, 0.0]).unwrap();
        assert!(matches!(b.backward(&trace, &[1.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn adam_first_step_magnitude() {
        // m_hat = v_hat = g at t=1, so the step is lr / (1 + eps) for g = 1.
        let mut net = NetworkParams::zeros(&[1, 1]).unwrap();
        net.layers[0].weights[0] = 0.5;
        let mut adam = AdamState::new(&net);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 1.0;
        adam_step(&mut net, &mut adam, &grads, 0.001).unwrap();
        let delta = 0.5 - net.layers[0].weights[0];
        assert!((delta - 0.001 / (1.0 + 1e-8)).abs() < 1e-15, "delta {delta}");
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut net = NetworkParams::init(&[2, 3, 1], &mut rng(2)).unwrap();
        let want = net.clone();
        let mut adam = AdamState::new(&net);
        let grads = net.zeros_like();
        for _ in 0..10 {
            adam_step(&mut net, &mut adam, &grads, 0.001).unwrap();
        }
        assert_eq!(net, want);
        assert_eq!(adam.t, 10);
    }

    #[test]
    fn adam_matches_scripted_trace() {
        // Independent scalar trace for two steps with constant gradient 0.3,
        // lr 0.001, starting at 0.5:
        //   t=1: p = 0.49900000003333334
        //   t=2: p = 0.49800000006666667
        let mut net = NetworkParams::zeros(&[1, 1]).unwrap();
        net.layers[0].weights[0] = 0.5;
        let mut adam = AdamState::new(&net);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 0.3;
        adam_step(&mut net, &mut adam, &grads, 0.001).unwrap();
        assert!((net.layers[0].weights[0] - 0.49900000003333334).abs() < 1e-12);
        adam_step(&mut net, &mut adam, &grads, 0.001).unwrap();
        assert!((net.layers[0].weights[0] - 0.49800000006666667).abs() < 1e-12);
    }

    #[test]
    fn adam_rejects_nan_gradient() {
        let mut net = NetworkParams::zeros(&[1, 1]).unwrap();
        let before = net.clone();
        let mut adam = AdamState::new(&net);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = f64::NAN;
        let err = adam_step(&mut net, &mut adam, &grads, 0.001);
        assert!(matches!(err, Err(Error::Numeric(_))));
        assert_eq!(net, before);
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let logits = vec![0.25; 16];
        let (loss, _) = softmax_cross_entropy(&logits, 5).unwrap();
        assert!((loss - 2.772588722239781).abs() < 1e-12); // ln 16
    }

    #[test]
    fn cross_entropy_extreme_logits_stable() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.is_finite());
        assert!(loss < 1e-9);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn cross_entropy_index_out_of_range() {
        assert!(matches!(
            softmax_cross_entropy(&[0.0, 0.0], 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut r = rng(23);
        let logits: Vec<f64> = (0..8).map(|_| r.random_range(-3.0..3.0)).collect();
        let target = 3;
        let (_, grad) = softmax_cross_entropy(&logits, target).unwrap();
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits.clone();
            plus[i] += h;
            let mut minus = logits.clone();
            minus[i] -= h;
            let fd = (softmax_cross_entropy(&plus, target).unwrap().0
                - softmax_cross_entropy(&minus, target).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-5, "logit {i}: fd {fd} analytic {}", grad[i]);
        }
        // Simplex tangency: gradient coordinates sum to zero.
        let sum: f64 = grad.iter().sum();
        assert!(sum.abs() < 1e-10);
    }
}
