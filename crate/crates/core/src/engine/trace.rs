//! Run records produced by every engine.

use serde::{Deserialize, Serialize};

/// How much per-event detail a run keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Iterates, per-slot aggregates, primal histories and delay statistics.
    #[default]
    Compact,
    /// Additionally one record per allocation and per dual step.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Synchronous,
    SynchronousIncremental,
    AsyncFc,
    Aisdd,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Synchronous => "synchronous",
            EngineKind::SynchronousIncremental => "synchronous_incremental",
            EngineKind::AsyncFc => "async_fc",
            EngineKind::Aisdd => "aisdd",
        }
    }
}

/// One node's allocation at one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub slot: u64,
    pub node: usize,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    /// Stamp of the multiplier copy used.
    pub dual_slot: u64,
    pub pi: u64,
    pub skipped: bool,
}

/// One application of a gradient to the shared multiplier.
///
/// In the fusion-center and aggregate engines there is one record per node
/// per slot and `cycle == wall_slot`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub cycle: u64,
    pub node: usize,
    pub wall_slot: u64,
    pub state_slot: u64,
    pub dual_slot: u64,
    pub delta: u64,
    pub tau: u64,
    pub step: f64,
    /// Norm of the multiplier change; zero for aggregate engines where the
    /// change is attributed to the slot rather than to one node.
    pub displacement: f64,
    pub grad_norm: f64,
    pub forced: bool,
}

/// Realized staleness and bound checks accumulated over a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub max_pi: u64,
    pub max_delta: u64,
    pub max_tau: u64,
    pub sum_pi: u64,
    pub allocations: u64,
    pub sum_delta: u64,
    pub sum_tau: u64,
    pub updates: u64,
    /// Gaps between successive deliveries of the same node (fusion center only).
    pub sum_delivery_gap: u64,
    pub delivery_gaps: u64,
    pub forced_steps: u64,
    /// Largest `|step displacement| / eps_t` seen.
    pub max_displacement_ratio: f64,
    /// Steps whose displacement exceeded `eps_t` times the declared gradient bound.
    pub displacement_violations: u64,
    /// Gradients whose norm exceeded the declared bound.
    pub gradient_bound_violations: u64,
}

impl DelayStats {
    pub(crate) fn record_pi(&mut self, pi: u64) {
        self.max_pi = self.max_pi.max(pi);
        self.sum_pi += pi;
        self.allocations += 1;
    }

    pub(crate) fn record_update(&mut self, delta: u64, tau: u64) {
        self.max_delta = self.max_delta.max(delta);
        self.max_tau = self.max_tau.max(tau);
        self.sum_delta += delta;
        self.sum_tau += tau;
        self.updates += 1;
    }

    pub fn mean_pi(&self) -> f64 {
        ratio(self.sum_pi, self.allocations)
    }

    pub fn mean_delta(&self) -> f64 {
        ratio(self.sum_delta, self.updates)
    }

    /// Mean age of the multiplier behind each applied gradient.
    pub fn mean_tau(&self) -> f64 {
        ratio(self.sum_tau, self.updates)
    }

    /// Mean number of slots between deliveries of a node.
    pub fn mean_delivery_gap(&self) -> f64 {
        ratio(self.sum_delivery_gap, self.delivery_gaps)
    }
}

fn ratio(sum: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

/// Complete output of one engine run.
///
/// Iterates are indexed from 1: `lambda(1)` is the initial point and
/// `lambda(T + 1)` the last one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub engine: EngineKind,
    pub seed: u64,
    pub horizon: u64,
    pub nodes: usize,
    pub dim: usize,
    pub tau_max: u64,
    pub ring: Vec<usize>,
    /// Flattened `(T + 1) x dim` iterates.
    pub lambdas: Vec<f64>,
    /// Wall-clock slot at the end of which each iterate became available.
    pub lambda_ready: Vec<u64>,
    /// Sum over nodes of `f(x)` at each slot.
    pub objective: Vec<f64>,
    /// Flattened `T x dim` sum of gradients applied in each slot (or cycle).
    pub applied: Vec<f64>,
    /// Flattened primal history per node, `x_dims[i]` values per slot.
    pub x_history: Vec<Vec<f64>>,
    pub x_dims: Vec<usize>,
    /// Skipped allocations per slot.
    pub skipped: Vec<u32>,
    pub delays: DelayStats,
    pub allocations: Vec<AllocationRecord>,
    pub updates: Vec<UpdateRecord>,
}

impl RunTrace {
    pub(crate) fn new(
        engine: EngineKind,
        seed: u64,
        horizon: u64,
        dim: usize,
        tau_max: u64,
        ring: Vec<usize>,
        init: &[f64],
    ) -> Self {
        let nodes = ring.len();
        let t = horizon as usize;
        let mut lambdas = Vec::with_capacity((t + 1) * dim);
        lambdas.extend_from_slice(init);
        let mut lambda_ready = Vec::with_capacity(t + 1);
        lambda_ready.push(0);
        Self {
            engine,
            seed,
            horizon,
            nodes,
            dim,
            tau_max,
            ring,
            lambdas,
            lambda_ready,
            objective: vec![0.0; t],
            applied: vec![0.0; t * dim],
            x_history: vec![Vec::new(); nodes],
            x_dims: vec![0; nodes],
            skipped: vec![0; t],
            delays: DelayStats::default(),
            allocations: Vec::new(),
            updates: Vec::new(),
        }
    }

    /// Iterate `t` for `1 <= t <= T + 1`.
    pub fn lambda(&self, t: u64) -> &[f64] {
        let i = (t as usize - 1) * self.dim;
        &self.lambdas[i..i + self.dim]
    }

    pub fn last_lambda(&self) -> &[f64] {
        self.lambda(self.horizon + 1)
    }

    /// Iterates `1..=T+1` in order.
    pub fn lambda_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.lambdas.chunks_exact(self.dim)
    }

    /// Summed gradient applied at slot or cycle `t` (1-based).
    pub fn applied_at(&self, t: u64) -> &[f64] {
        let i = (t as usize - 1) * self.dim;
        &self.applied[i..i + self.dim]
    }

    /// Allocation of `node` at slot `t` (1-based).
    pub fn x_at(&self, node: usize, t: u64) -> &[f64] {
        let n = self.x_dims[node];
        let i = (t as usize - 1) * n;
        &self.x_history[node][i..i + n]
    }

    pub fn total_skipped(&self) -> u64 {
        self.skipped.iter().map(|&s| s as u64).sum()
    }

    pub(crate) fn push_lambda(&mut self, lambda: &[f64], ready_slot: u64) {
        debug_assert_eq!(lambda.len(), self.dim);
        self.lambdas.extend_from_slice(lambda);
        self.lambda_ready.push(ready_slot);
    }

    pub(crate) fn add_applied(&mut self, t: u64, g: &[f64]) {
        let i = (t as usize - 1) * self.dim;
        for (a, v) in self.applied[i..i + self.dim].iter_mut().zip(g) {
            *a += v;
        }
    }

    pub(crate) fn push_x(&mut self, node: usize, x: &[f64]) {
        if self.x_history[node].is_empty() {
            self.x_dims[node] = x.len();
            self.x_history[node].reserve(x.len() * self.horizon as usize);
        }
        debug_assert_eq!(self.x_dims[node], x.len());
        self.x_history[node].extend_from_slice(x);
    }
}
