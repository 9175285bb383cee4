//! Agent-relative complexity and interactivity on imagined rollouts.
//!
//! A rollout iterates the policy `T` times from the current behaviour (in the
//! self-prediction task the policy is its own model). Along the `T` imagined
//! transitions two TD-error sequences are measured:
//!
//! * **static**: under a frozen copy of the value weights `W_ref`, the
//!   unconditional complexity;
//! * **dynamic**: under a copy that takes a semi-gradient step
//!   `W_k = W_{k-1} + η δ_k ⊗ b_{k-1}` after every transition, the conditional
//!   complexity. The chain starts at `W_ref`, so the first dynamic error equals
//!   the first static one.
//!
//! Interactivity is the difference of the two sums of squared errors. The
//! policy objective records both branches, including the inner value updates,
//! on an autodiff graph so the policy can ascend it by meta-gradient.

use crate::autodiff::{AutodiffError, Graph, NodeId};
use crate::models::{td_error, Behaviour, ModelError, OptimizerConfig, OptimizerState, PolicyNodes, PolicyParams};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractivityError {
    #[error("rollout horizon must be at least 1")]
    ZeroHorizon,
    #[error("non-finite behaviour at rollout step {step}")]
    NonFiniteBehaviour { step: usize },
    #[error("non-finite policy gradient")]
    NonFiniteGradient,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Parameters of one imagined rollout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub gamma: f64,
    /// Inner semi-gradient step size of the dynamic branch.
    pub eta: f64,
    /// Detach the bootstrapped term `γ W b_k` inside every TD error of the
    /// objective. Off by default: the unrolled chain is fully differentiated.
    pub detach_bootstrap: bool,
}

impl RolloutConfig {
    pub fn new(horizon: usize, gamma: f64, eta: f64) -> Self {
        Self { horizon, gamma, eta, detach_bootstrap: false }
    }

    fn check(&self) -> Result<(), InteractivityError> {
        if self.horizon == 0 {
            Err(InteractivityError::ZeroHorizon)
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutTrace {
    /// `b_0 .. b_T`, with `b_0` the starting behaviour.
    pub behaviours: Vec<Behaviour>,
    /// `T` errors under the frozen reference weights.
    pub static_deltas: Vec<Tensor>,
    /// `T` errors along the inner-updated chain.
    pub dynamic_deltas: Vec<Tensor>,
    /// `W_0 = W_ref, .., W_T`.
    pub value_snapshots: Vec<Tensor>,
    pub config: RolloutConfig,
}

impl RolloutTrace {
    pub fn horizon(&self) -> usize {
        self.config.horizon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractivityEstimate {
    pub static_complexity: f64,
    pub dynamic_complexity: f64,
    pub interactivity: f64,
}

impl InteractivityEstimate {
    pub fn new(static_complexity: f64, dynamic_complexity: f64) -> Self {
        Self { static_complexity, dynamic_complexity, interactivity: static_complexity - dynamic_complexity }
    }
}

/// Imagines `T` steps of the policy and measures both TD-error branches.
/// `w_ref` is read, never written.
pub fn rollout(
    policy: &PolicyParams,
    b_start: &Behaviour,
    w_ref: &Tensor,
    cfg: &RolloutConfig,
) -> Result<RolloutTrace, InteractivityError> {
    cfg.check()?;
    let mut behaviours = Vec::with_capacity(cfg.horizon + 1);
    behaviours.push(b_start.clone());
    for step in 1..=cfg.horizon {
        let next = policy.forward(&behaviours[step - 1])?;
        if !next.is_finite() {
            return Err(InteractivityError::NonFiniteBehaviour { step });
        }
        behaviours.push(next);
    }

    let static_deltas = behaviours.windows(2).map(|pair| td_error(w_ref, &pair[0], &pair[1], cfg.gamma)).collect::<Result<Vec<_>, _>>()?;

    let mut value_snapshots = Vec::with_capacity(cfg.horizon + 1);
    let mut dynamic_deltas = Vec::with_capacity(cfg.horizon);
    value_snapshots.push(w_ref.clone());
    for pair in behaviours.windows(2) {
        let w = value_snapshots.last().expect("non-empty");
        let delta = td_error(w, &pair[0], &pair[1], cfg.gamma)?;
        let mut next = w.clone();
        next.add_outer(cfg.eta, &delta, pair[0].tensor());
        dynamic_deltas.push(delta);
        value_snapshots.push(next);
    }

    Ok(RolloutTrace { behaviours, static_deltas, dynamic_deltas, value_snapshots, config: *cfg })
}

/// `Σ_k ‖δ_k(W_ref)‖²`.
pub fn static_complexity(trace: &RolloutTrace) -> f64 {
    trace.static_deltas.iter().map(Tensor::norm_sq).sum()
}

/// `Σ_k ‖δ_k(W_{k-1})‖²`.
pub fn dynamic_complexity(trace: &RolloutTrace) -> f64 {
    trace.dynamic_deltas.iter().map(Tensor::norm_sq).sum()
}

pub fn interactivity_estimate(trace: &RolloutTrace) -> InteractivityEstimate {
    InteractivityEstimate::new(static_complexity(trace), dynamic_complexity(trace))
}

/// The recorded objective `J(θ) = Σ_k ‖δ_k^static‖² − ‖δ_k^dynamic‖²`.
pub struct PolicyObjective {
    pub graph: Graph,
    pub root: NodeId,
    pub policy_nodes: PolicyNodes,
    pub behaviour_nodes: Vec<NodeId>,
    static_node: NodeId,
    dynamic_node: NodeId,
}

impl PolicyObjective {
    pub fn value(&self) -> f64 {
        self.graph.value(self.root).item()
    }

    /// The two sums as recorded on the graph.
    pub fn estimate(&self) -> InteractivityEstimate {
        InteractivityEstimate::new(self.graph.value(self.static_node).item(), self.graph.value(self.dynamic_node).item())
    }

    /// The recorded behaviours `b_0 .. b_T`.
    pub fn behaviours(&self) -> Vec<Behaviour> {
        self.behaviour_nodes.iter().map(|&id| Behaviour::from_tensor(self.graph.value(id).clone())).collect()
    }

    /// `∇_θ J`, one tensor per policy parameter in [`PolicyParams::tensors`]
    /// order.
    pub fn gradient(&self) -> Result<Vec<Tensor>, InteractivityError> {
        let grads = self.graph.backward(self.root)?;
        Ok(self.policy_nodes.ids().into_iter().map(|id| grads.get_or_zero(&self.graph, id)).collect())
    }
}

/// Records `δ = b_next + γ W b_next − W b_prev` on the graph.
fn record_td(graph: &mut Graph, w: NodeId, b_prev: NodeId, b_next: NodeId, cfg: &RolloutConfig) -> Result<NodeId, AutodiffError> {
    let mut boot = graph.matvec(w, b_next)?;
    if cfg.detach_bootstrap {
        boot = graph.stopgrad(boot)?;
    }
    let boot = graph.scale(boot, cfg.gamma)?;
    let target = graph.add(b_next, boot)?;
    let pred = graph.matvec(w, b_prev)?;
    graph.sub(target, pred)
}

fn running_sum(graph: &mut Graph, total: Option<NodeId>, term: NodeId) -> Result<NodeId, AutodiffError> {
    match total {
        None => Ok(term),
        Some(t) => graph.add(t, term),
    }
}

/// Records the whole rollout, both branches and the inner value updates, with
/// root `J(θ)`. The reference weights enter as a constant.
pub fn policy_objective(
    policy: &PolicyParams,
    b_start: &Behaviour,
    w_ref: &Tensor,
    cfg: &RolloutConfig,
) -> Result<PolicyObjective, InteractivityError> {
    cfg.check()?;
    let mut graph = Graph::new();
    let policy_nodes = policy.record_params(&mut graph);
    let mut behaviour_nodes = vec![graph.constant(b_start.tensor().clone())];
    for step in 1..=cfg.horizon {
        let next = policy.record_forward(&mut graph, &policy_nodes, behaviour_nodes[step - 1])?;
        if !graph.value(next).is_finite() {
            return Err(InteractivityError::NonFiniteBehaviour { step });
        }
        behaviour_nodes.push(next);
    }

    let w_frozen = graph.constant(w_ref.clone());
    let mut static_total = None;
    for pair in behaviour_nodes.windows(2) {
        let delta = record_td(&mut graph, w_frozen, pair[0], pair[1], cfg)?;
        let sq = graph.squared_norm(delta)?;
        static_total = Some(running_sum(&mut graph, static_total, sq)?);
    }

    let mut w = w_frozen;
    let mut dynamic_total = None;
    for pair in behaviour_nodes.windows(2) {
        let delta = record_td(&mut graph, w, pair[0], pair[1], cfg)?;
        let sq = graph.squared_norm(delta)?;
        dynamic_total = Some(running_sum(&mut graph, dynamic_total, sq)?);
        let step = graph.scale(delta, cfg.eta)?;
        let outer = graph.outer(step, pair[0])?;
        w = graph.add(w, outer)?;
    }

    let static_node = static_total.expect("horizon >= 1");
    let dynamic_node = dynamic_total.expect("horizon >= 1");
    let root = graph.sub(static_node, dynamic_node)?;
    Ok(PolicyObjective { graph, root, policy_nodes, behaviour_nodes, static_node, dynamic_node })
}

/// One optimiser step *ascending* `J` along `grad`.
pub fn policy_step(
    policy: &mut PolicyParams,
    state: &mut OptimizerState,
    grad: &[Tensor],
    opt: &OptimizerConfig,
) -> Result<(), InteractivityError> {
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(InteractivityError::NonFiniteGradient);
    }
    let descent: Vec<Tensor> = grad.iter().map(|g| g.scale(-1.0)).collect();
    let refs: Vec<&Tensor> = descent.iter().collect();
    let mut params = policy.tensors_mut();
    state.descend(opt, &mut params, &refs)?;
    Ok(())
}
