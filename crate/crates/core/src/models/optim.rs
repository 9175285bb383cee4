//! First-order optimisers over a list of parameter tensors.
//!
//! All optimisers *descend* the supplied gradient. Ascent is descent on the
//! negated gradient.

use super::ModelError;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Rmsprop,
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rmsprop" => Ok(Self::Rmsprop),
            "adam" => Ok(Self::Adam),
            "sgd" => Ok(Self::Sgd),
            other => Err(format!("unknown optimizer kind `{other}` (expected rmsprop, adam or sgd)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub step_size: f64,
    /// Second-moment decay (RMSProp `ρ`, Adam `β₂`).
    pub decay: f64,
    pub epsilon: f64,
    /// First-moment decay, Adam only.
    #[serde(default = "default_beta1")]
    pub beta1: f64,
}

fn default_beta1() -> f64 {
    0.9
}

impl OptimizerConfig {
    pub fn rmsprop(step_size: f64) -> Self {
        Self { kind: OptimizerKind::Rmsprop, step_size, decay: 0.99, epsilon: 1e-8, beta1: 0.9 }
    }

    pub fn adam(step_size: f64) -> Self {
        Self { kind: OptimizerKind::Adam, step_size, decay: 0.999, epsilon: 1e-8, beta1: 0.9 }
    }

    pub fn sgd(step_size: f64) -> Self {
        Self { kind: OptimizerKind::Sgd, step_size, decay: 0.99, epsilon: 1e-8, beta1: 0.9 }
    }

    pub fn validate(&self, field: &'static str) -> Result<(), ModelError> {
        let bad = |reason: String| Err(ModelError::InvalidConfig { field, reason });
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be > 0, got {}", self.step_size));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return bad(format!("decay must lie in (0, 1), got {}", self.decay));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad(format!("beta1 must lie in [0, 1), got {}", self.beta1));
        }
        Ok(())
    }
}

/// Per-entry optimiser memory, one buffer per parameter tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerState {
    Sgd,
    Rmsprop { second_moment: Vec<Tensor> },
    Adam { first_moment: Vec<Tensor>, second_moment: Vec<Tensor>, steps: u64 },
}

impl OptimizerState {
    /// Fresh state for parameters shaped like `params`.
    pub fn new<'a>(kind: OptimizerKind, params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let zeros: Vec<Tensor> = params.into_iter().map(Tensor::zeros_like).collect();
        match kind {
            OptimizerKind::Sgd => Self::Sgd,
            OptimizerKind::Rmsprop => Self::Rmsprop { second_moment: zeros },
            OptimizerKind::Adam => Self::Adam { first_moment: zeros.clone(), second_moment: zeros, steps: 0 },
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Self::Sgd => OptimizerKind::Sgd,
            Self::Rmsprop { .. } => OptimizerKind::Rmsprop,
            Self::Adam { .. } => OptimizerKind::Adam,
        }
    }

    /// The update `Δ` such that `θ ← θ + Δ` descends `grads`. Mutates the
    /// moment estimates; parameters are untouched.
    pub fn step_direction(&mut self, cfg: &OptimizerConfig, grads: &[&Tensor]) -> Result<Vec<Tensor>, ModelError> {
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFinite("gradient"));
        }
        let lr = cfg.step_size;
        let out = match self {
            Self::Sgd => grads.iter().map(|g| g.scale(-lr)).collect(),
            Self::Rmsprop { second_moment } => {
                check_len(second_moment.len(), grads.len())?;
                let rho = cfg.decay;
                second_moment
                    .iter_mut()
                    .zip(grads)
                    .map(|(s, g)| {
                        let mut delta = Tensor::zeros_like(g);
                        for ((sv, &gv), dv) in s.as_mut_slice().iter_mut().zip(g.as_slice()).zip(delta.as_mut_slice()) {
                            *sv = rho * *sv + (1.0 - rho) * gv * gv;
                            *dv = -lr * gv / (sv.sqrt() + cfg.epsilon);
                        }
                        delta
                    })
                    .collect()
            }
            Self::Adam { first_moment, second_moment, steps } => {
                check_len(second_moment.len(), grads.len())?;
                *steps += 1;
                let (b1, b2) = (cfg.beta1, cfg.decay);
                let c1 = 1.0 - b1.powi(*steps as i32);
                let c2 = 1.0 - b2.powi(*steps as i32);
                first_moment
                    .iter_mut()
                    .zip(second_moment.iter_mut())
                    .zip(grads)
                    .map(|((m, v), g)| {
                        let mut delta = Tensor::zeros_like(g);
                        for (((mv, vv), &gv), dv) in
                            m.as_mut_slice().iter_mut().zip(v.as_mut_slice()).zip(g.as_slice()).zip(delta.as_mut_slice())
                        {
                            *mv = b1 * *mv + (1.0 - b1) * gv;
                            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                            *dv = -lr * (*mv / c1) / ((*vv / c2).sqrt() + cfg.epsilon);
                        }
                        delta
                    })
                    .collect()
            }
        };
        Ok(out)
    }

    /// Descends `grads` in place on `params`.
    pub fn descend(&mut self, cfg: &OptimizerConfig, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<(), ModelError> {
        check_len(params.len(), grads.len())?;
        let deltas = self.step_direction(cfg, grads)?;
        for (p, d) in params.iter_mut().zip(&deltas) {
            p.axpy(1.0, d);
            if !p.is_finite() {
                return Err(ModelError::NonFinite("parameters after optimizer step"));
            }
        }
        Ok(())
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::ShapeMismatch { op: "optimizer", expected: (expected, 1), got: (got, 1) })
    }
}
