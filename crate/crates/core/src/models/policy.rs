//! Deterministic deep policy `b ↦ RMSNorm(π(b; θ))`.
//!
//! `depth` counts affine layers. Hidden layers have `width` units and the
//! activation is applied between layers, never after the last one.

use super::{check_vector, Behaviour, ModelError, RMSNORM_EPSILON};
use crate::autodiff::{self, Graph, NodeId};
use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Self::Linear),
            "relu" => Ok(Self::Relu),
            other => Err(format!("unknown activation `{other}` (expected linear or relu)")),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Relu => "relu",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// Input and output dimension `d`.
    pub dim: usize,
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    #[serde(default = "default_bias")]
    pub bias: bool,
}

fn default_bias() -> bool {
    true
}

impl PolicySpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |field, reason: &str| Err(ModelError::InvalidConfig { field, reason: reason.to_string() });
        if self.dim == 0 {
            return bad("dim", "must be positive");
        }
        if self.depth == 0 {
            return bad("depth", "must be positive");
        }
        if self.depth > 1 && self.width == 0 {
            return bad("width", "must be positive");
        }
        Ok(())
    }

    /// `(rows, cols)` of each layer's weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|l| {
                let fan_in = if l == 0 { self.dim } else { self.width };
                let fan_out = if l + 1 == self.depth { self.dim } else { self.width };
                (fan_out, fan_in)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub spec: PolicySpec,
    pub weights: Vec<Tensor>,
    /// Empty when the spec disables biases.
    pub biases: Vec<Tensor>,
}

/// Graph handles for the parameters of one recorded policy.
#[derive(Clone, Debug)]
pub struct PolicyNodes {
    pub weights: Vec<NodeId>,
    pub biases: Vec<NodeId>,
}

impl PolicyNodes {
    /// Ids in the same order as [`PolicyParams::tensors`].
    pub fn ids(&self) -> Vec<NodeId> {
        self.weights.iter().chain(&self.biases).copied().collect()
    }
}

impl PolicyParams {
    /// Weights ~ N(0, 1/fan_in), biases zero.
    pub fn init<R: Rng>(spec: PolicySpec, rng: &mut R) -> Result<Self, ModelError> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        let weights = shapes
            .iter()
            .map(|&(rows, cols)| {
                let normal = Normal::new(0.0, 1.0 / (cols as f64).sqrt()).expect("valid std");
                Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| normal.sample(rng)).collect())
            })
            .collect();
        let biases = if spec.bias { shapes.iter().map(|&(rows, _)| Tensor::zeros(rows, 1)).collect() } else { vec![] };
        Ok(Self { spec, weights, biases })
    }

    pub fn from_parts(spec: PolicySpec, weights: Vec<Tensor>, biases: Vec<Tensor>) -> Result<Self, ModelError> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        if weights.len() != shapes.len() {
            return Err(ModelError::ShapeMismatch { op: "policy layers", expected: (shapes.len(), 1), got: (weights.len(), 1) });
        }
        for (w, &s) in weights.iter().zip(&shapes) {
            if w.shape() != s {
                return Err(ModelError::ShapeMismatch { op: "policy weight", expected: s, got: w.shape() });
            }
        }
        let expected_biases = if spec.bias { shapes.len() } else { 0 };
        if biases.len() != expected_biases {
            return Err(ModelError::ShapeMismatch { op: "policy biases", expected: (expected_biases, 1), got: (biases.len(), 1) });
        }
        for (b, &(rows, _)) in biases.iter().zip(&shapes) {
            if b.shape() != (rows, 1) {
                return Err(ModelError::ShapeMismatch { op: "policy bias", expected: (rows, 1), got: b.shape() });
            }
        }
        Ok(Self { spec, weights, biases })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// All parameter tensors: weights first, then biases.
    pub fn tensors(&self) -> Vec<&Tensor> {
        self.weights.iter().chain(&self.biases).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Pre-normalisation output `π(b; θ)`.
    pub fn raw_forward(&self, b: &Behaviour) -> Result<Tensor, ModelError> {
        check_vector("policy_forward", b.tensor(), self.dim())?;
        let mut h = b.tensor().clone();
        for (l, w) in self.weights.iter().enumerate() {
            h = w.matvec(&h);
            if let Some(bias) = self.biases.get(l) {
                h.axpy(1.0, bias);
            }
            if l + 1 < self.weights.len() && self.spec.activation == Activation::Relu {
                h = h.map(|v| if v > 0.0 { v } else { 0.0 });
            }
        }
        Ok(h)
    }

    /// Smallest `|pre-activation|` over the hidden ReLU units at input `b`,
    /// or infinity when no ReLU is applied. Finite differences are only
    /// meaningful when this is well above the probe step.
    pub fn kink_margin(&self, b: &Behaviour) -> Result<f64, ModelError> {
        check_vector("policy_forward", b.tensor(), self.dim())?;
        let mut margin = f64::INFINITY;
        let mut h = b.tensor().clone();
        for (l, w) in self.weights.iter().enumerate() {
            h = w.matvec(&h);
            if let Some(bias) = self.biases.get(l) {
                h.axpy(1.0, bias);
            }
            if l + 1 < self.weights.len() && self.spec.activation == Activation::Relu {
                margin = h.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
                h = h.map(|v| if v > 0.0 { v } else { 0.0 });
            }
        }
        Ok(margin)
    }

    /// `RMSNorm(π(b; θ))`.
    pub fn forward(&self, b: &Behaviour) -> Result<Behaviour, ModelError> {
        let raw = self.raw_forward(b)?;
        Ok(Behaviour::from_tensor(autodiff::rmsnorm(&raw, RMSNORM_EPSILON)))
    }

    /// Places every parameter on `graph` as a leaf.
    pub fn record_params(&self, graph: &mut Graph) -> PolicyNodes {
        PolicyNodes {
            weights: self.weights.iter().map(|w| graph.leaf(w.clone())).collect(),
            biases: self.biases.iter().map(|b| graph.leaf(b.clone())).collect(),
        }
    }

    /// Records one application of the policy on `graph`.
    pub fn record_forward(&self, graph: &mut Graph, nodes: &PolicyNodes, input: NodeId) -> autodiff::Result<NodeId> {
        let mut h = input;
        let depth = nodes.weights.len();
        for (l, &w) in nodes.weights.iter().enumerate() {
            h = graph.matvec(w, h)?;
            if let Some(&bias) = nodes.biases.get(l) {
                h = graph.add(h, bias)?;
            }
            if l + 1 < depth && self.spec.activation == Activation::Relu {
                h = graph.relu(h)?;
            }
        }
        graph.rmsnorm(h, RMSNORM_EPSILON)
    }

    /// Product of all layers, `A_{D-1} ⋯ A_0`. Equals the policy's linear map
    /// when biases are absent and the activation is linear.
    pub fn collapsed_matrix(&self) -> Tensor {
        let mut m = self.weights[0].clone();
        for w in &self.weights[1..] {
            m = w.matmul(&m);
        }
        m
    }
}

pub fn init_policy(spec: PolicySpec, seed: u64) -> Result<PolicyParams, ModelError> {
    PolicyParams::init(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}
