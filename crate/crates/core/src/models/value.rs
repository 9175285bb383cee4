//! Linear value function `v(b; W) = W b` predicting the discounted sum of
//! future behaviour, trained with semi-gradient TD(0).

use super::optim::{OptimizerConfig, OptimizerState};
use super::{check_vector, Behaviour, ModelError};
use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueParams {
    /// `d × d` weights.
    pub w: Tensor,
    pub optimizer: OptimizerState,
}

impl ValueParams {
    pub fn new(w: Tensor, opt: &OptimizerConfig) -> Self {
        assert_eq!(w.rows(), w.cols(), "value weights must be square");
        let optimizer = OptimizerState::new(opt.kind, [&w]);
        Self { w, optimizer }
    }

    /// Gaussian entries with standard deviation `1/d`.
    pub fn init<R: Rng>(dim: usize, opt: &OptimizerConfig, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 1.0 / dim as f64).expect("valid std");
        let data = (0..dim * dim).map(|_| normal.sample(rng)).collect();
        Self::new(Tensor::from_vec(dim, dim, data), opt)
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// One committed TD(0) step on the real transition `b_prev → b_next`.
    ///
    /// The semi-gradient direction `δ ⊗ b_prev` is routed through the
    /// configured optimiser. Returns the TD error before the update.
    pub fn update_committed(
        &mut self,
        b_prev: &Behaviour,
        b_next: &Behaviour,
        gamma: f64,
        opt: &OptimizerConfig,
    ) -> Result<Tensor, ModelError> {
        let delta = td_error(&self.w, b_prev, b_next, gamma)?;
        // Loss gradient of ½‖δ‖² with the bootstrap held fixed.
        let grad = Tensor::outer(&delta, b_prev.tensor()).scale(-1.0);
        self.optimizer.descend(opt, &mut [&mut self.w], &[&grad])?;
        Ok(delta)
    }
}

pub fn init_value(dim: usize, opt: &OptimizerConfig, seed: u64) -> ValueParams {
    ValueParams::init(dim, opt, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn check_square(op: &'static str, w: &Tensor, b: &Behaviour) -> Result<(), ModelError> {
    let d = b.dim();
    if w.shape() != (d, d) {
        return Err(ModelError::ShapeMismatch { op, expected: (d, d), got: w.shape() });
    }
    Ok(())
}

/// `W b`.
pub fn value_predict(w: &Tensor, b: &Behaviour) -> Result<Tensor, ModelError> {
    check_square("value_predict", w, b)?;
    Ok(w.matvec(b.tensor()))
}

/// Vector TD error `b_next + γ W b_next − W b_prev`.
pub fn td_error(w: &Tensor, b_prev: &Behaviour, b_next: &Behaviour, gamma: f64) -> Result<Tensor, ModelError> {
    check_square("td_error", w, b_prev)?;
    check_vector("td_error", b_next.tensor(), b_prev.dim())?;
    let mut delta = b_next.tensor().clone();
    delta.axpy(gamma, &w.matvec(b_next.tensor()));
    delta.axpy(-1.0, &w.matvec(b_prev.tensor()));
    Ok(delta)
}

/// Pure semi-gradient step `W + η δ ⊗ b_prev`.
pub fn value_update_inner(w: &Tensor, b_prev: &Behaviour, b_next: &Behaviour, gamma: f64, eta: f64) -> Result<Tensor, ModelError> {
    let delta = td_error(w, b_prev, b_next, gamma)?;
    let mut out = w.clone();
    out.add_outer(eta, &delta, b_prev.tensor());
    Ok(out)
}
