//! Dual descent engines.
//!
//! All engines share the per-node [`Component`] abstraction and the two step
//! kernels [`aggregate_step`] and [`incremental_step`]; reusing the kernels is
//! what makes the zero-delay asynchronous runs reproduce the synchronous ones
//! bit for bit.

mod fc;
mod incremental;
mod sync;
mod trace;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, OracleError};
use crate::problem::{distance, norm, Allocation, NodeOracle, Problem};
use crate::rng::{stream_rng, tag};

pub use fc::run_async_fc;
pub use incremental::{run_aisdd, run_aissd_general};
pub use sync::{run_synchronous, run_synchronous_with, SyncMode};
pub use trace::{
    AllocationRecord, DelayStats, EngineKind, RunTrace, TraceLevel, UpdateRecord,
};

/// Result of querying one component at one point and slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub gradient: Vec<f64>,
    pub allocation: Option<Allocation>,
    pub objective: f64,
}

/// One summand of a finite-sum stochastic minimization.
pub trait Component: Send + Sync {
    fn dim(&self) -> usize;

    /// Stochastic (sub)gradient at `point` using the randomness of `slot`.
    fn evaluate(&self, point: &[f64], slot: u64, seed: u64) -> Result<Evaluation, OracleError>;

    /// Declared bound on the gradient norm.
    fn gradient_bound(&self) -> Option<f64> {
        None
    }
}

/// Adapts a resource-allocation node to a dual-descent component.
pub struct OracleComponent {
    oracle: Arc<dyn NodeOracle>,
}

impl OracleComponent {
    pub fn new(oracle: Arc<dyn NodeOracle>) -> Self {
        Self { oracle }
    }

    pub fn from_problem(problem: &Problem) -> Vec<Arc<dyn Component>> {
        problem
            .nodes()
            .iter()
            .map(|n| Arc::new(Self::new(n.clone())) as Arc<dyn Component>)
            .collect()
    }
}

impl Component for OracleComponent {
    fn dim(&self) -> usize {
        self.oracle.dual_dim()
    }

    fn evaluate(&self, point: &[f64], slot: u64, seed: u64) -> Result<Evaluation, OracleError> {
        let state = self.oracle.sample_state(slot, seed);
        let allocation = self.oracle.best_response(point, &state)?;
        let gradient = if allocation.skipped {
            vec![0.0; point.len()]
        } else {
            self.oracle.gradient(&allocation, &state)
        };
        let objective = self.oracle.objective(&allocation.x);
        Ok(Evaluation {
            gradient,
            allocation: Some(allocation),
            objective,
        })
    }

    fn gradient_bound(&self) -> Option<f64> {
        self.oracle.declared_bounds().gradient
    }
}

/// Closed convex set the iterates are confined to.
pub trait Projection: Send + Sync {
    fn project(&self, v: &mut [f64]);
}

/// `R^d_+`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonNegOrthant;

impl Projection for NonNegOrthant {
    #[inline]
    fn project(&self, v: &mut [f64]) {
        for x in v {
            *x = x.max(0.0);
        }
    }
}

/// Whole space.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Projection for Identity {
    fn project(&self, _v: &mut [f64]) {}
}

/// Axis-aligned box `[lo, hi]` per coordinate.
#[derive(Clone, Debug)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Projection for BoxSet {
    fn project(&self, v: &mut [f64]) {
        for ((x, lo), hi) in v.iter_mut().zip(&self.lo).zip(&self.hi) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

/// `P[lambda - eps * sum_i g_i]`, summing in slice order from `0.0`.
pub fn aggregate_step(
    lambda: &[f64],
    grads: &[&[f64]],
    eps: f64,
    projection: &dyn Projection,
) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; lambda.len()];
    for g in grads {
        for (s, v) in sum.iter_mut().zip(g.iter()) {
            *s += v;
        }
    }
    let mut next: Vec<f64> = lambda.iter().zip(&sum).map(|(l, s)| l - eps * s).collect();
    projection.project(&mut next);
    (next, sum)
}

/// `P[lambda - eps * g]`.
#[inline]
pub fn incremental_step(lambda: &[f64], g: &[f64], eps: f64, projection: &dyn Projection) -> Vec<f64> {
    let mut next: Vec<f64> = lambda.iter().zip(g).map(|(l, v)| l - eps * v).collect();
    projection.project(&mut next);
    next
}

/// Knobs shared by all engines.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunOptions {
    pub trace: TraceLevel,
    /// Visiting order of the token; identity when absent.
    pub ring: Option<Vec<usize>>,
    /// Evaluate independent nodes of a slot on the rayon pool.
    pub parallel: bool,
}

impl RunOptions {
    pub fn full() -> Self {
        Self {
            trace: TraceLevel::Full,
            ..Self::default()
        }
    }

    pub(crate) fn ring_order(&self, k: usize) -> Result<Vec<usize>, EngineError> {
        match &self.ring {
            None => Ok((0..k).collect()),
            Some(r) => {
                let mut seen = vec![false; k];
                if r.len() != k {
                    return Err(EngineError::InvalidRing(k));
                }
                for &i in r {
                    if i >= k || seen[i] {
                        return Err(EngineError::InvalidRing(k));
                    }
                    seen[i] = true;
                }
                Ok(r.clone())
            }
        }
    }
}

/// Bounds and counters for gradient and step-size checks.
pub(crate) struct BoundCheck {
    bounds: Vec<Option<f64>>,
    warned: bool,
}

const BOUND_RTOL: f64 = 1e-9;

impl BoundCheck {
    pub(crate) fn new(components: &[Arc<dyn Component>]) -> Self {
        Self {
            bounds: components.iter().map(|c| c.gradient_bound()).collect(),
            warned: false,
        }
    }

    pub(crate) fn total(&self) -> Option<f64> {
        self.bounds.iter().try_fold(0.0, |acc, b| b.map(|b| acc + b))
    }

    pub(crate) fn gradient(&mut self, node: usize, g: &[f64], stats: &mut DelayStats) -> f64 {
        let n = norm(g);
        if let Some(v) = self.bounds[node] {
            if n > v * (1.0 + BOUND_RTOL) {
                stats.gradient_bound_violations += 1;
                if !self.warned {
                    log::warn!("gradient norm {n} at node {node} exceeds declared bound {v}");
                    self.warned = true;
                }
            }
        }
        n
    }

    /// Checks `|after - before| <= eps * bound`.
    pub(crate) fn displacement(
        &self,
        before: &[f64],
        after: &[f64],
        eps: f64,
        bound: Option<f64>,
        stats: &mut DelayStats,
    ) -> f64 {
        let d = distance(before, after);
        stats.max_displacement_ratio = stats.max_displacement_ratio.max(d / eps);
        if let Some(v) = bound {
            if d > eps * v * (1.0 + BOUND_RTOL) + 1e-15 {
                stats.displacement_violations += 1;
            }
        }
        d
    }

    pub(crate) fn node(&self, node: usize) -> Option<f64> {
        self.bounds[node]
    }
}

pub(crate) fn evaluate(
    component: &dyn Component,
    node: usize,
    point: &[f64],
    slot: u64,
    seed: u64,
    cycle: Option<u64>,
) -> Result<Evaluation, EngineError> {
    let e = component
        .evaluate(point, slot, seed)
        .map_err(|source| EngineError::Oracle {
            node,
            slot,
            cycle,
            source,
        })?;
    if e.gradient.len() != point.len() {
        return Err(crate::error::ProblemError::DimensionMismatch {
            expected: point.len(),
            found: e.gradient.len(),
            context: format!("gradient of node {node}"),
        }
        .into());
    }
    Ok(e)
}

/// Evaluates `jobs` (node, point) at one slot, possibly in parallel; results keep job order.
pub(crate) fn evaluate_many(
    components: &[Arc<dyn Component>],
    jobs: &[(usize, &[f64])],
    slot: u64,
    seed: u64,
    parallel: bool,
) -> Result<Vec<Evaluation>, EngineError> {
    if parallel && jobs.len() > 1 {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(i, p)| evaluate(components[i].as_ref(), i, p, slot, seed, None))
            .collect()
    } else {
        jobs.iter()
            .map(|&(i, p)| evaluate(components[i].as_ref(), i, p, slot, seed, None))
            .collect()
    }
}

/// Warns when `projection` expands the distance between random pairs around `center`.
pub(crate) fn check_nonexpansive(projection: &dyn Projection, center: &[f64], seed: u64) -> bool {
    let mut rng = stream_rng(seed, tag::ANALYSIS);
    let scale = 1.0 + norm(center);
    for _ in 0..32 {
        let u: Vec<f64> = center
            .iter()
            .map(|c| c + scale * rng.random_range(-2.0..2.0))
            .collect();
        let v: Vec<f64> = center
            .iter()
            .map(|c| c + scale * rng.random_range(-2.0..2.0))
            .collect();
        let (mut pu, mut pv) = (u.clone(), v.clone());
        projection.project(&mut pu);
        projection.project(&mut pv);
        if distance(&pu, &pv) > distance(&u, &v) * (1.0 + 1e-12) + 1e-12 {
            log::warn!("projection is not non-expansive on a sampled pair");
            return false;
        }
    }
    true
}

/// Stale-read buffer holding the last `capacity` iterates, stamped by index.
pub(crate) struct IterateRing {
    dim: usize,
    first: u64,
    next: u64,
    data: Vec<f64>,
}

impl IterateRing {
    pub(crate) fn new(capacity: usize, dim: usize, init: &[f64]) -> Self {
        let mut data = vec![0.0; capacity.max(1) * dim];
        data[..dim].copy_from_slice(init);
        Self {
            dim,
            first: 1,
            next: 2,
            data,
        }
    }

    fn capacity(&self) -> u64 {
        (self.data.len() / self.dim) as u64
    }

    pub(crate) fn push(&mut self, v: &[f64]) {
        let cap = self.capacity();
        let at = ((self.next - 1) % cap) as usize * self.dim;
        self.data[at..at + self.dim].copy_from_slice(v);
        self.next += 1;
        if self.next - self.first > cap {
            self.first += 1;
        }
    }

    /// Iterate stamped `t`. Panics when `t` has left the window.
    pub(crate) fn get(&self, t: u64) -> &[f64] {
        assert!(
            t >= self.first && t < self.next,
            "iterate {t} outside the stored window [{}, {})",
            self.first,
            self.next
        );
        let at = ((t - 1) % self.capacity()) as usize * self.dim;
        &self.data[at..at + self.dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterate_ring_serves_window() {
        let mut r = IterateRing::new(3, 1, &[1.0]);
        for t in 2..=6 {
            r.push(&[t as f64]);
        }
        assert_eq!(r.get(6), &[6.0]);
        assert_eq!(r.get(4), &[4.0]);
    }

    #[test]
    #[should_panic(expected = "outside the stored window")]
    fn iterate_ring_rejects_evicted_reads() {
        let mut r = IterateRing::new(2, 1, &[1.0]);
        r.push(&[2.0]);
        r.push(&[3.0]);
        let _ = r.get(1);
    }

    #[test]
    fn aggregate_and_incremental_kernels() {
        let (next, sum) = aggregate_step(&[0.0], &[&[-1.0], &[-1.0], &[-1.0]], 0.1, &NonNegOrthant);
        assert_eq!(sum, vec![-3.0]);
        approx::assert_relative_eq!(next[0], 0.3, max_relative = 1e-15);
        assert_eq!(incremental_step(&[1.0], &[3.0], 0.5, &NonNegOrthant), vec![0.0]);
        assert_eq!(incremental_step(&[1.0], &[3.0], 0.5, &Identity), vec![-0.5]);
    }

    #[test]
    fn standard_projections_are_nonexpansive() {
        assert!(check_nonexpansive(&NonNegOrthant, &[0.0, 1.0], 1));
        assert!(check_nonexpansive(&Identity, &[3.0], 1));
        let b = BoxSet {
            lo: vec![-1.0],
            hi: vec![1.0],
        };
        assert!(check_nonexpansive(&b, &[0.0], 1));
    }

    struct Doubling;
    impl Projection for Doubling {
        fn project(&self, v: &mut [f64]) {
            for x in v {
                *x *= 2.0;
            }
        }
    }

    #[test]
    fn expansive_map_is_flagged() {
        assert!(!check_nonexpansive(&Doubling, &[0.0], 2));
    }

    #[test]
    fn ring_order_validation() {
        let mut o = RunOptions::default();
        assert_eq!(o.ring_order(3).unwrap(), vec![0, 1, 2]);
        o.ring = Some(vec![2, 0, 1]);
        assert!(o.ring_order(3).is_ok());
        o.ring = Some(vec![2, 2, 1]);
        assert_eq!(o.ring_order(3), Err(EngineError::InvalidRing(3)));
    }
}
