//! Straight-line reference implementation on plain `Vec<f64>`: no graph, no
//! tensor type, loops written out by hand.

#![allow(dead_code)]

use interactivity_core::models::{Activation, PolicyParams};
use interactivity_core::Tensor;

pub type Vector = Vec<f64>;
pub type Matrix = Vec<Vec<f64>>;

pub fn matrix(t: &Tensor) -> Matrix {
    (0..t.rows()).map(|r| (0..t.cols()).map(|c| t.get(r, c)).collect()).collect()
}

pub fn mv(m: &Matrix, x: &[f64]) -> Vector {
    m.iter()
        .map(|row| {
            let mut s = 0.0;
            for j in 0..x.len() {
                s += row[j] * x[j];
            }
            s
        })
        .collect()
}

pub fn sq(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v * v;
    }
    s
}

pub struct PlainPolicy {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
    pub relu: bool,
}

impl PlainPolicy {
    pub fn from_params(p: &PolicyParams) -> Self {
        Self {
            weights: p.weights.iter().map(matrix).collect(),
            biases: p.biases.iter().map(|b| b.as_slice().to_vec()).collect(),
            relu: p.spec.activation == Activation::Relu,
        }
    }

    pub fn forward(&self, b: &[f64]) -> Vector {
        let mut h = b.to_vec();
        let depth = self.weights.len();
        for l in 0..depth {
            h = mv(&self.weights[l], &h);
            if let Some(bias) = self.biases.get(l) {
                for i in 0..h.len() {
                    h[i] += bias[i];
                }
            }
            if self.relu && l + 1 < depth {
                for v in h.iter_mut() {
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        let rms = (sq(&h) / h.len() as f64 + 1e-8).sqrt();
        h.iter().map(|v| v / rms).collect()
    }
}

pub fn td(w: &Matrix, prev: &[f64], next: &[f64], gamma: f64) -> Vector {
    let boot = mv(w, next);
    let pred = mv(w, prev);
    (0..prev.len()).map(|i| next[i] + gamma * boot[i] - pred[i]).collect()
}

pub struct PlainRollout {
    pub behaviours: Vec<Vector>,
    pub static_sum: f64,
    pub dynamic_sum: f64,
}

impl PlainRollout {
    pub fn interactivity(&self) -> f64 {
        self.static_sum - self.dynamic_sum
    }
}

pub fn rollout(policy: &PlainPolicy, b0: &[f64], w_ref: &Matrix, horizon: usize, gamma: f64, eta: f64) -> PlainRollout {
    let mut behaviours = vec![b0.to_vec()];
    for t in 0..horizon {
        let next = policy.forward(&behaviours[t]);
        behaviours.push(next);
    }
    let mut static_sum = 0.0;
    for t in 0..horizon {
        static_sum += sq(&td(w_ref, &behaviours[t], &behaviours[t + 1], gamma));
    }
    let mut w = w_ref.clone();
    let mut dynamic_sum = 0.0;
    for t in 0..horizon {
        let delta = td(&w, &behaviours[t], &behaviours[t + 1], gamma);
        dynamic_sum += sq(&delta);
        for i in 0..w.len() {
            for j in 0..w.len() {
                w[i][j] += eta * delta[i] * behaviours[t][j];
            }
        }
    }
    PlainRollout { behaviours, static_sum, dynamic_sum }
}

/// One RMSProp step on a flat parameter list, in place.
pub fn rmsprop(params: &mut [f64], second: &mut [f64], grad: &[f64], lr: f64, decay: f64, eps: f64) {
    for i in 0..params.len() {
        second[i] = decay * second[i] + (1.0 - decay) * grad[i] * grad[i];
        params[i] -= lr * grad[i] / (second[i].sqrt() + eps);
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

use interactivity_core::interactivity::{rollout as main_rollout, RolloutConfig};
use interactivity_core::models::{Behaviour, PolicySpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A random small instance: policy, start behaviour, reference weights and
/// rollout settings.
pub struct Instance {
    pub policy: PolicyParams,
    pub b0: Behaviour,
    pub w_ref: Tensor,
    pub cfg: RolloutConfig,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_dim: usize, max_width: usize, max_depth: usize, max_horizon: usize) -> Instance {
    let dim = rng.gen_range(2..=max_dim);
    let spec = PolicySpec {
        dim,
        width: rng.gen_range(2..=max_width),
        depth: rng.gen_range(1..=max_depth),
        activation: if rng.gen_bool(0.5) { Activation::Linear } else { Activation::Relu },
        bias: rng.gen_bool(0.7),
    };
    let policy = PolicyParams::init(spec, rng).expect("valid spec");
    let normal = Normal::new(0.0, 1.0).unwrap();
    let b0 = Behaviour::new((0..dim).map(|_| normal.sample(rng)).collect());
    let scale = rng.gen_range(0.05..0.5);
    let w_ref = Tensor::from_vec(dim, dim, (0..dim * dim).map(|_| scale * normal.sample(rng)).collect());
    let cfg = RolloutConfig::new(rng.gen_range(1..=max_horizon), rng.gen_range(0.0..0.99), rng.gen_range(0.0..0.2));
    Instance { policy, b0, w_ref, cfg }
}

/// Smallest `|pre-activation|` of any hidden ReLU unit along the rollout,
/// computed on the plain reimplementation.
pub fn kink_margin(inst: &Instance) -> f64 {
    let plain = PlainPolicy::from_params(&inst.policy);
    if !plain.relu {
        return f64::INFINITY;
    }
    let r = rollout(&plain, inst.b0.as_slice(), &matrix(&inst.w_ref), inst.cfg.horizon, inst.cfg.gamma, inst.cfg.eta);
    let mut margin = f64::INFINITY;
    for b in &r.behaviours[..inst.cfg.horizon] {
        let mut h = b.clone();
        for l in 0..plain.weights.len() - 1 {
            h = mv(&plain.weights[l], &h);
            if let Some(bias) = plain.biases.get(l) {
                for i in 0..h.len() {
                    h[i] += bias[i];
                }
            }
            for v in h.iter_mut() {
                margin = margin.min(v.abs());
                *v = v.max(0.0);
            }
        }
    }
    margin
}

/// Like [`random_instance`] but redraws instances that put a ReLU unit
/// within `margin` of its kink, where central differences are not a valid
/// oracle. Returns the instance and the number of discarded draws.
pub fn random_smooth_instance(
    rng: &mut ChaCha8Rng,
    max_dim: usize,
    max_width: usize,
    max_depth: usize,
    max_horizon: usize,
    margin: f64,
) -> (Instance, usize) {
    let mut redrawn = 0;
    loop {
        let inst = random_instance(rng, max_dim, max_width, max_depth, max_horizon);
        if kink_margin(&inst) >= margin {
            return (inst, redrawn);
        }
        redrawn += 1;
    }
}

/// `J` evaluated by the main (graph-free) rollout.
pub fn objective(policy: &PolicyParams, inst: &Instance) -> f64 {
    let trace = main_rollout(policy, &inst.b0, &inst.w_ref, &inst.cfg).expect("finite rollout");
    interactivity_core::interactivity::interactivity_estimate(&trace).interactivity
}

/// Central differences of `J` in every policy parameter, in
/// `PolicyParams::tensors` order.
pub fn finite_difference(inst: &Instance, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let n_tensors = inst.policy.tensors().len();
    for k in 0..n_tensors {
        let len = inst.policy.tensors()[k].len();
        for i in 0..len {
            let mut plus = inst.policy.clone();
            plus.tensors_mut()[k].as_mut_slice()[i] += h;
            let mut minus = inst.policy.clone();
            minus.tensors_mut()[k].as_mut_slice()[i] -= h;
            out.push((objective(&plus, inst) - objective(&minus, inst)) / (2.0 * h));
        }
    }
    out
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-6)`. The floor keeps round-off in a
/// gradient that is identically zero (a one-step horizon) from counting as
/// a 100% error.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    diff / sq(a).sqrt().max(sq(b).sqrt()).max(1e-6)
}
