//! One-hidden-layer tanh networks with a scalar linear output, and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// `φ(x) = w2ᵀ tanh(W1 x + b1) + b2`.
///
/// Parameters are stored flat as `W1` (row-major, `hidden × input`), `b1`,
/// `w2`, `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + 2 * hidden + 1
    }

    /// Hidden layer `U(±1/√input)`, output layer zero.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut params = vec![0.0; Self::param_count(input, hidden)];
        let a = 1.0 / (input.max(1) as f64).sqrt();
        for p in &mut params[..hidden * input + hidden] {
            *p = rng.gen_range(-a..=a);
        }
        Self { input, hidden, params }
    }

    /// Like [`Self::init`] but the output layer is drawn `U(±scale/√hidden)`.
    pub fn random<R: Rng + ?Sized>(input: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut net = Self::init(input, hidden, rng);
        let a = scale / (hidden.max(1) as f64).sqrt();
        let start = hidden * input + hidden;
        for p in &mut net.params[start..] {
            *p = rng.gen_range(-a..=a);
        }
        net
    }

    pub fn from_params(input: usize, hidden: usize, params: Vec<f64>) -> Option<Self> {
        (params.len() == Self::param_count(input, hidden)).then_some(Self { input, hidden, params })
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn b2_index(&self) -> usize {
        self.params.len() - 1
    }

    pub fn output_bias(&self) -> f64 {
        self.params[self.b2_index()]
    }

    pub fn set_output_bias(&mut self, b: f64) {
        let i = self.b2_index();
        self.params[i] = b;
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.input);
        let (h, n) = (self.hidden, self.input);
        let w1 = &self.params[..h * n];
        let b1 = &self.params[h * n..h * n + h];
        let w2 = &self.params[h * n + h..h * n + 2 * h];
        let mut out = self.params[h * n + 2 * h];
        for j in 0..h {
            let row = &w1[j * n..(j + 1) * n];
            let z: f64 = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out += w2[j] * z.tanh();
        }
        out
    }

    /// Adds `scale · ∂φ(x)/∂θ` to `grad`.
    pub fn accumulate_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) {
        let (h, n) = (self.hidden, self.input);
        let w1 = &self.params[..h * n];
        let b1 = &self.params[h * n..h * n + h];
        let w2 = &self.params[h * n + h..h * n + 2 * h];
        for j in 0..h {
            let row = &w1[j * n..(j + 1) * n];
            let a = (b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh();
            grad[h * n + h + j] += scale * a;
            let dz = scale * w2[j] * (1.0 - a * a);
            if dz != 0.0 {
                for (g, v) in grad[j * n..(j + 1) * n].iter_mut().zip(x) {
                    *g += dz * v;
                }
                grad[h * n + j] += dz;
            }
        }
        grad[h * n + 2 * h] += scale;
    }
}

/// Adam with bias correction. `step` ascends when `maximize` is set.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], maximize: bool) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let sign = if maximize { 1.0 } else { -1.0 };
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] += sign * self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
