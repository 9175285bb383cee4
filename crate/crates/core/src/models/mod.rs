//! Function approximators and optimisers of the agent.
//!
//! * [`value`]: the linear value function `v(b; W) = W b` with vector-valued
//!   TD(0) errors, its pure inner update and its committed, optimiser-driven
//!   update.
//! * [`policy`]: a deep linear or ReLU network whose output is RMS-normalised.
//! * [`optim`]: SGD, RMSProp and Adam over lists of parameter tensors.

pub mod optim;
pub mod policy;
pub mod value;

use crate::tensor::{Shape, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use policy::{init_policy, Activation, PolicyNodes, PolicyParams, PolicySpec};
pub use value::{init_value, td_error, value_predict, value_update_inner, ValueParams};

/// Epsilon inside the output RMSNorm of the policy.
pub const RMSNORM_EPSILON: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    ShapeMismatch { op: &'static str, expected: Shape, got: Shape },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

/// The behaviour vector `b_t`. In the self-prediction task the observation is
/// the previous action, so a behaviour is a single `d`-vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Behaviour(Tensor);

impl Behaviour {
    pub fn new(values: Vec<f64>) -> Self {
        Self(Tensor::column(values))
    }

    /// Wraps a column vector. Panics if `t` has more than one column.
    pub fn from_tensor(t: Tensor) -> Self {
        assert!(t.is_vector(), "behaviour must be a column vector, got {:?}", t.shape());
        Self(t)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl From<Tensor> for Behaviour {
    fn from(t: Tensor) -> Self {
        Self::from_tensor(t)
    }
}

pub(crate) fn check_vector(op: &'static str, t: &Tensor, dim: usize) -> Result<(), ModelError> {
    if t.shape() == (dim, 1) {
        Ok(())
    } else {
        Err(ModelError::ShapeMismatch { op, expected: (dim, 1), got: t.shape() })
    }
}
