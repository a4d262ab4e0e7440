//! Classical discriminator: a fully connected leaky-ReLU network with a
//! sigmoid output, trained by backpropagation and Adam.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qsim;

pub const HIDDEN_UNITS: usize = 64;
pub const LEAKY_SLOPE: f64 = 0.01;
/// Output clamp so that `ln D` and `ln(1 - D)` stay finite.
pub const OUTPUT_EPS: f64 = 1e-7;

/// Parameters live in one flat vector. For each layer, the `fan_out x fan_in`
/// weight matrix (row-major) is followed by its `fan_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpDiscriminator {
    dims: Vec<usize>,
    params: Vec<f64>,
    leaky_slope: f64,
}

#[derive(Debug, Clone, Copy)]
struct LayerView {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpDiscriminator {
    /// `[input_dim, 64, 64, 1]` network seeded deterministically.
    pub fn init(input_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_dims(&[input_dim, HIDDEN_UNITS, HIDDEN_UNITS, 1], &mut rng)
    }

    /// Weights uniform in `+-sqrt(6 / fan_in)`, biases zero.
    pub fn with_dims<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let layers: Vec<LayerView> = net.layers().collect();
        for layer in layers {
            let bound = (6.0 / layer.fan_in as f64).sqrt();
            for w in &mut net.params[layer.w..layer.w + layer.fan_in * layer.fan_out] {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Argument(format!("invalid layer dims {dims:?}")));
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::Argument("discriminator must have one output".into()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
            leaky_slope: LEAKY_SLOPE,
        })
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>, leaky_slope: f64) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::Argument(format!(
                "dims {dims:?} need {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite discriminator parameter".into()));
        }
        net.params = params;
        net.leaky_slope = leaky_slope;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(rows, cols)` of each weight matrix, as `(fan_out, fan_in)`.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layers().map(|l| (l.fan_out, l.fan_in)).collect()
    }

    fn layers(&self) -> impl Iterator<Item = LayerView> + '_ {
        let mut off = 0;
        self.dims.windows(2).map(move |w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let view = LayerView {
                w: off,
                b: off + fan_in * fan_out,
                fan_in,
                fan_out,
            };
            off += fan_in * fan_out + fan_out;
            view
        })
    }

    fn leaky(&self, v: f64) -> f64 {
        if v > 0.0 {
            v
        } else {
            self.leaky_slope * v
        }
    }

    /// Runs the network, storing every layer's activations in `acts`
    /// (`acts[0]` is the input). Returns the output logit.
    fn forward_trace(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        acts.resize(self.dims.len(), Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let n_layers = self.dims.len() - 1;
        for (l, layer) in self.layers().enumerate() {
            let (prev, rest) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            out.clear();
            for o in 0..layer.fan_out {
                let row = &self.params[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                let z = self.params[layer.b + o]
                    + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                out.push(if l + 1 < n_layers { self.leaky(z) } else { z });
            }
        }
        acts[n_layers][0]
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_trace(x, &mut Vec::new()))
    }

    /// Clamped sigmoid output in `[1e-7, 1 - 1e-7]`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?).clamp(OUTPUT_EPS, 1.0 - OUTPUT_EPS))
    }

    /// Output on the bit encoding of a basis index.
    pub fn forward_index(&self, index: usize) -> f64 {
        let x = encode(index, self.input_dim());
        sigmoid(self.forward_trace(&x, &mut Vec::new())).clamp(OUTPUT_EPS, 1.0 - OUTPUT_EPS)
    }

    /// `ln D(x)` for every basis state of an `input_dim`-bit register.
    pub fn log_output_table(&self) -> Vec<f64> {
        let mut acts = Vec::new();
        (0..1usize << self.input_dim())
            .map(|idx| {
                let z = self.forward_trace(&encode(idx, self.input_dim()), &mut acts);
                sigmoid(z).clamp(OUTPUT_EPS, 1.0 - OUTPUT_EPS).ln()
            })
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Argument(format!(
                "input has length {}, discriminator expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Adds `weight * d(logit)/d(params)` scaled by `upstream` into `grad`.
    fn backprop(&self, acts: &[Vec<f64>], upstream: f64, grad: &mut [f64]) {
        let layers: Vec<LayerView> = self.layers().collect();
        let mut delta = vec![upstream];
        for (l, layer) in layers.iter().enumerate().rev() {
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
                grad[layer.b + o] += d;
            }
            if l == 0 {
                break;
            }
            let mut next = vec![0.0; layer.fan_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &self.params[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += w * d;
                }
            }
            for (n, &a) in next.iter_mut().zip(input) {
                if a <= 0.0 {
                    *n *= self.leaky_slope;
                }
            }
            delta = next;
        }
    }

    /// Discriminator loss on a real and a fake batch together with its
    /// gradient: `-mean ln D(real) - mean ln(1 - D(fake))`.
    pub fn loss_and_gradient(&self, real: &[usize], fake: &[usize]) -> Result<(f64, Vec<f64>)> {
        if real.is_empty() || fake.is_empty() {
            return Err(Error::Argument("discriminator batches must be non-empty".into()));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut acts = Vec::new();
        let mut loss = 0.0;
        for (batch, is_real) in [(real, true), (fake, false)] {
            let scale = 1.0 / batch.len() as f64;
            for (idx, count) in histogram(batch) {
                let x = encode(idx, self.input_dim());
                let s = sigmoid(self.forward_trace(&x, &mut acts));
                let d = s.clamp(OUTPUT_EPS, 1.0 - OUTPUT_EPS);
                let clamped = d != s;
                let w = count as f64 * scale;
                let dl_dz = if is_real {
                    loss -= w * d.ln();
                    s - 1.0
                } else {
                    loss -= w * (1.0 - d).ln();
                    s
                };
                if !clamped {
                    self.backprop(&acts, w * dl_dz, &mut grad);
                }
            }
        }
        Ok((loss, grad))
    }
}

fn histogram(batch: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &x in batch {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

/// Bits of `index` as `{0.0, 1.0}`, qubit 0 first.
pub fn encode(index: usize, n_bits: usize) -> Vec<f64> {
    (0..n_bits).map(|q| qsim::bit_of(index, q) as f64).collect()
}

pub fn init_discriminator(input_dim: usize, seed: u64) -> Result<MlpDiscriminator> {
    MlpDiscriminator::init(input_dim, seed)
}

pub fn d_forward(d: &MlpDiscriminator, x: &[f64]) -> Result<f64> {
    d.forward(x)
}

/// Gradient of the batch discriminator loss.
pub fn d_backward(d: &MlpDiscriminator, real: &[usize], fake: &[usize]) -> Result<Vec<f64>> {
    Ok(d.loss_and_gradient(real, fake)?.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Argument(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    state.step(params, grads, lr)
}
