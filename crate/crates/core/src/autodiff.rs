//! Reverse-mode automatic differentiation over an explicitly recorded graph.
//!
//! Every operation appends a node to the [`Graph`] holding its forward value
//! and the ids of its parents. Parents always precede children, so recording
//! order is a topological order and [`Graph::backward`] is a single sweep in
//! reverse. Node values are never mutated after recording.
//!
//! The op set is deliberately small: it covers the deep policy, the linear
//! value function, and the unrolled semi-gradient TD updates of the value
//! parameters, which is all the meta-gradient of the interactivity objective
//! needs.

use crate::tensor::{Shape, Tensor};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: Shape, right: Shape },
    #[error("{op} expects a column vector, got shape {shape:?}")]
    NotAVector { op: &'static str, shape: Shape },
    #[error("{op} of an empty tensor")]
    Empty { op: &'static str },
    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Shape),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;

/// Handle to a recorded node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation tag, carrying parent ids and any static attribute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    /// Input or parameter; no parents.
    Leaf,
    MatVec {
        matrix: NodeId,
        vector: NodeId,
    },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    RmsNorm {
        input: NodeId,
        epsilon: f64,
    },
    StopGrad(NodeId),
    Outer(NodeId, NodeId),
    SquaredNorm(NodeId),
    Sum(NodeId),
}

impl Op {
    pub fn parents(&self) -> Vec<NodeId> {
        match *self {
            Op::Leaf => vec![],
            Op::MatVec { matrix, vector } => vec![matrix, vector],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Outer(a, b) => vec![a, b],
            Op::Scale(a, _) | Op::Relu(a) | Op::RmsNorm { input: a, .. } | Op::StopGrad(a) | Op::SquaredNorm(a) | Op::Sum(a) => vec![a],
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraphNode {
    pub value: Tensor,
    pub op: Op,
    /// False for constants, stop-gradient nodes, and anything computed only
    /// from those. Backward never allocates gradient buffers for such nodes.
    pub requires_grad: bool,
}

/// A recorded computation. Confined to one thread at a time (`Send`, not
/// shared).
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<GraphNode>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &GraphNode {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        let requires_grad = match op {
            Op::Leaf | Op::StopGrad(_) => false,
            _ => op.parents().iter().any(|p| self.nodes[p.0].requires_grad),
        };
        self.push_with(value, op, requires_grad)
    }

    fn push_with(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(GraphNode { value, op, requires_grad });
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownNode(id.0))
        }
    }

    fn vector_shape(&self, id: NodeId, op: &'static str) -> Result<usize> {
        self.check(id)?;
        let t = self.value(id);
        if t.is_vector() {
            Ok(t.rows())
        } else {
            Err(AutodiffError::NotAVector { op, shape: t.shape() })
        }
    }

    /// A differentiable input (a parameter or variable of interest).
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push_with(value, Op::Leaf, true)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push_with(value, Op::Leaf, false)
    }

    pub fn matvec(&mut self, matrix: NodeId, vector: NodeId) -> Result<NodeId> {
        self.check(matrix)?;
        let n = self.vector_shape(vector, "matvec")?;
        let a = self.value(matrix);
        if a.cols() != n {
            return Err(AutodiffError::ShapeMismatch { op: "matvec", left: a.shape(), right: (n, 1) });
        }
        let value = a.matvec(self.value(vector));
        Ok(self.push(value, Op::MatVec { matrix, vector }))
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa == sb {
            Ok(())
        } else {
            Err(AutodiffError::ShapeMismatch { op, left: sa, right: sb })
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).add(self.value(b));
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).sub(self.value(b));
        Ok(self.push(value, Op::Sub(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, alpha: f64) -> Result<NodeId> {
        self.check(a)?;
        let value = self.value(a).scale(alpha);
        Ok(self.push(value, Op::Scale(a, alpha)))
    }

    /// Elementwise `max(0, x)`. The subgradient at exactly zero is zero.
    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| if v > 0.0 { v } else { 0.0 });
        Ok(self.push(value, Op::Relu(x)))
    }

    /// `x / sqrt(mean(x²) + epsilon)`, without a learnable gain.
    pub fn rmsnorm(&mut self, x: NodeId, epsilon: f64) -> Result<NodeId> {
        self.check(x)?;
        let input = self.value(x);
        if input.is_empty() {
            return Err(AutodiffError::Empty { op: "rmsnorm" });
        }
        let value = rmsnorm(input, epsilon);
        Ok(self.push(value, Op::RmsNorm { input: x, epsilon }))
    }

    /// Identity on values; blocks every gradient to its parent.
    pub fn stopgrad(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).clone();
        Ok(self.push(value, Op::StopGrad(x)))
    }

    /// `u ⊗ v` for column vectors.
    pub fn outer(&mut self, u: NodeId, v: NodeId) -> Result<NodeId> {
        self.vector_shape(u, "outer")?;
        self.vector_shape(v, "outer")?;
        let value = Tensor::outer(self.value(u), self.value(v));
        Ok(self.push(value, Op::Outer(u, v)))
    }

    /// Sum of squared entries, a scalar.
    pub fn squared_norm(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = Tensor::scalar(self.value(x).norm_sq());
        Ok(self.push(value, Op::SquaredNorm(x)))
    }

    /// Sum of entries, a scalar.
    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = Tensor::scalar(self.value(x).sum());
        Ok(self.push(value, Op::Sum(x)))
    }

    /// Computes `∂root/∂node` for every node in one reverse sweep.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        self.check(root)?;
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(AutodiffError::NonScalarRoot(root_value.shape()));
        }
        let mut acc = Accumulator { nodes: &self.nodes, grads: vec![None; root.0 + 1] };
        if self.nodes[root.0].requires_grad {
            acc.grads[root.0] = Some(Tensor::scalar(1.0));
        }

        for i in (0..=root.0).rev() {
            let Some(g) = acc.grads[i].take() else { continue };
            match self.nodes[i].op {
                Op::Leaf | Op::StopGrad(_) => {}
                Op::MatVec { matrix, vector } => {
                    if acc.wants(matrix) {
                        acc.slot(matrix).add_outer(1.0, &g, self.value(vector));
                    }
                    if acc.wants(vector) {
                        acc.add(vector, self.value(matrix).matvec_t(&g));
                    }
                }
                Op::Add(a, b) => {
                    acc.add_scaled(a, 1.0, &g);
                    acc.add_scaled(b, 1.0, &g);
                }
                Op::Sub(a, b) => {
                    acc.add_scaled(a, 1.0, &g);
                    acc.add_scaled(b, -1.0, &g);
                }
                Op::Scale(a, alpha) => acc.add_scaled(a, alpha, &g),
                Op::Relu(x) => {
                    if acc.wants(x) {
                        let mut masked = g.clone();
                        for (m, &v) in masked.as_mut_slice().iter_mut().zip(self.value(x).as_slice()) {
                            if v <= 0.0 {
                                *m = 0.0;
                            }
                        }
                        acc.add(x, masked);
                    }
                }
                Op::RmsNorm { input, epsilon } => {
                    if acc.wants(input) {
                        // y = x / r with r = sqrt(mean(x²) + ε):
                        // ∂L/∂x = g / r − x (x·g) / (n r³).
                        let x = self.value(input);
                        let n = x.len() as f64;
                        let r = (x.norm_sq() / n + epsilon).sqrt();
                        let xg = x.dot(&g);
                        let mut dx = g.scale(1.0 / r);
                        dx.axpy(-xg / (n * r * r * r), x);
                        acc.add(input, dx);
                    }
                }
                Op::Outer(u, v) => {
                    if acc.wants(u) {
                        acc.add(u, g.matvec(self.value(v)));
                    }
                    if acc.wants(v) {
                        acc.add(v, g.matvec_t(self.value(u)));
                    }
                }
                Op::SquaredNorm(x) => acc.add_scaled(x, 2.0 * g.item(), self.value(x)),
                Op::Sum(x) => {
                    if acc.wants(x) {
                        let g0 = g.item();
                        acc.add(x, self.value(x).map(|_| g0));
                    }
                }
            }
            acc.grads[i] = Some(g);
        }
        let mut grads = acc.grads;
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads })
    }
}

pub fn rmsnorm(x: &Tensor, epsilon: f64) -> Tensor {
    let r = (x.norm_sq() / x.len() as f64 + epsilon).sqrt();
    x.scale(1.0 / r)
}

struct Accumulator<'a> {
    nodes: &'a [GraphNode],
    grads: Vec<Option<Tensor>>,
}

impl Accumulator<'_> {
    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn slot(&mut self, id: NodeId) -> &mut Tensor {
        let shape = self.nodes[id.0].value.shape();
        self.grads[id.0].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1))
    }

    fn add(&mut self, id: NodeId, g: Tensor) {
        match &mut self.grads[id.0] {
            Some(existing) => existing.axpy(1.0, &g),
            empty => *empty = Some(g),
        }
    }

    fn add_scaled(&mut self, id: NodeId, alpha: f64, g: &Tensor) {
        if self.wants(id) {
            self.slot(id).axpy(alpha, g);
        }
    }
}

/// Gradient buffers indexed by node id. Nodes that received no gradient
/// (constants, stop-gradient nodes, anything the root does not depend on)
/// have no buffer.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `∂root/∂id`, or `None` if nothing flowed into the node.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// `∂root/∂id`, materialising zeros when no gradient reached the node.
    pub fn get_or_zero(&self, graph: &Graph, id: NodeId) -> Tensor {
        self.get(id).cloned().unwrap_or_else(|| Tensor::zeros_like(graph.value(id)))
    }
}
