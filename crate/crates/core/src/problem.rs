//! Shared vocabulary of the resource allocation problem: multipliers,
//! realized states, allocations, stochastic gradients and the per-node
//! oracle interface every engine consumes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{OracleError, ProblemError};

/// Nonnegative multiplier vector, one entry per coupled average constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Rejects negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, ProblemError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(ProblemError::NegativeMultiplier { index, value });
        }
        Ok(Self(values))
    }

    /// Projects an arbitrary vector onto the orthant.
    pub fn from_projection(values: &[f64]) -> Self {
        Self(project_nonneg(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f64]> for DualVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Realized random state `h` of one node at one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub node: usize,
    pub slot: u64,
    pub value: Vec<f64>,
}

/// Resources allocated by one node at one slot. `p` holds the realized value
/// of the policy at the observed state; the policy itself is never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub node: usize,
    pub slot: u64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Set when the node could not allocate (infeasible local problem).
    /// Skipped allocations contribute a zero gradient.
    #[serde(default)]
    pub skipped: bool,
}

impl Allocation {
    pub fn skipped(node: usize, slot: u64, x_dim: usize, p_dim: usize) -> Self {
        Self {
            node,
            slot,
            x: vec![0.0; x_dim],
            p: vec![0.0; p_dim],
            skipped: true,
        }
    }
}

/// Stochastic (sub)gradient together with the slot its state was realized at
/// and the stamp of the multiplier it was evaluated with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochGradient {
    pub node: usize,
    pub g: Vec<f64>,
    pub state_slot: u64,
    pub dual_slot: u64,
}

impl StochGradient {
    /// Ordering required of every gradient consumed at `current`.
    pub fn stamps_valid(&self, current: u64) -> bool {
        self.dual_slot <= self.state_slot && self.state_slot <= current
    }
}

/// Optional constants a problem may declare for analysis and runtime checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredBounds {
    /// Bound on the gradient norm.
    pub gradient: Option<f64>,
    /// Lipschitz constant of the node's dual gradient.
    pub lipschitz: Option<f64>,
}

/// Per-node problem definition.
///
/// Implementations must be pure: the same `(multiplier, state)` always
/// yields the same allocation, and states depend only on `(seed, slot)`.
pub trait NodeOracle: Send + Sync {
    /// Number of coupled constraints `d`.
    fn dual_dim(&self) -> usize;

    fn sample_state(&self, slot: u64, seed: u64) -> StateSample;

    /// Maximizer of `f(x) + <lambda, g(p, x)>` at the realized state.
    fn best_response(&self, lambda: &[f64], state: &StateSample) -> Result<Allocation, OracleError>;

    /// Constraint functions `u(x) + v(h, p)` evaluated at an allocation.
    fn gradient(&self, allocation: &Allocation, state: &StateSample) -> Vec<f64>;

    /// Local utility `f(x)`.
    fn objective(&self, x: &[f64]) -> f64;

    fn declared_bounds(&self) -> DeclaredBounds {
        DeclaredBounds::default()
    }
}

/// A set of node oracles sharing one multiplier vector.
#[derive(Clone)]
pub struct Problem {
    nodes: Vec<Arc<dyn NodeOracle>>,
    dual_dim: usize,
    lambda_init: DualVector,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("nodes", &self.nodes.len())
            .field("dual_dim", &self.dual_dim)
            .field("lambda_init", &self.lambda_init)
            .finish()
    }
}

impl Problem {
    pub fn new(nodes: Vec<Arc<dyn NodeOracle>>) -> Result<Self, ProblemError> {
        let first = nodes.first().ok_or(ProblemError::NoNodes)?;
        let dual_dim = first.dual_dim();
        if dual_dim == 0 {
            return Err(ProblemError::ZeroDualDim);
        }
        for (node, oracle) in nodes.iter().enumerate() {
            if oracle.dual_dim() != dual_dim {
                return Err(ProblemError::DimensionMismatch {
                    expected: dual_dim,
                    found: oracle.dual_dim(),
                    context: format!("dual dimension of node {node}"),
                });
            }
        }
        Ok(Self {
            nodes,
            dual_dim,
            lambda_init: DualVector::zeros(dual_dim),
        })
    }

    pub fn with_initial_multiplier(mut self, lambda: DualVector) -> Result<Self, ProblemError> {
        if lambda.dim() != self.dual_dim {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dual_dim,
                found: lambda.dim(),
                context: "initial multiplier".into(),
            });
        }
        self.lambda_init = lambda;
        Ok(self)
    }

    pub fn nodes(&self) -> &[Arc<dyn NodeOracle>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &dyn NodeOracle {
        self.nodes[i].as_ref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dual_dim(&self) -> usize {
        self.dual_dim
    }

    pub fn lambda_init(&self) -> &DualVector {
        &self.lambda_init
    }

    /// Largest declared gradient bound, if every node declares one.
    pub fn gradient_bound(&self) -> Option<f64> {
        self.nodes
            .iter()
            .map(|n| n.declared_bounds().gradient)
            .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))
    }
}

/// Componentwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Per-node Lagrangian summand `f(x) + <lambda, g>` at a realized state.
pub fn lagrangian_term(
    node: &dyn NodeOracle,
    lambda: &[f64],
    allocation: &Allocation,
    state: &StateSample,
) -> Result<f64, ProblemError> {
    if allocation.node != state.node || allocation.slot != state.slot {
        return Err(ProblemError::StampMismatch {
            allocation: (allocation.node, allocation.slot),
            state: (state.node, state.slot),
        });
    }
    let g = node.gradient(allocation, state);
    if g.len() != lambda.len() {
        return Err(ProblemError::DimensionMismatch {
            expected: lambda.len(),
            found: g.len(),
            context: "gradient vs multiplier".into(),
        });
    }
    Ok(node.objective(&allocation.x) + dot(lambda, &g))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(project_nonneg(&[3.5, -0.1, 0.0]), vec![3.5, 0.0, 0.0]);
    }

    #[test]
    fn dual_vector_rejects_negative_entries() {
        assert!(DualVector::new(vec![0.0, 1.0]).is_ok());
        assert!(matches!(
            DualVector::new(vec![0.5, -1e-12]),
            Err(ProblemError::NegativeMultiplier { index: 1, .. })
        ));
        assert!(DualVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn gradient_stamp_ordering() {
        let g = StochGradient {
            node: 0,
            g: vec![1.0],
            state_slot: 5,
            dual_slot: 3,
        };
        assert!(g.stamps_valid(5));
        assert!(g.stamps_valid(9));
        assert!(!g.stamps_valid(4));
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            u in prop::collection::vec(-10.0..10.0f64, 4),
            v in prop::collection::vec(-10.0..10.0f64, 4),
        ) {
            let pu = project_nonneg(&u);
            prop_assert_eq!(project_nonneg(&pu), pu.clone());
            prop_assert!(pu.iter().all(|&x| x >= 0.0));
            let pv = project_nonneg(&v);
            prop_assert!(distance(&pu, &pv) <= distance(&u, &v) + 1e-12);
        }
    }
}
