use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    aggregate_step, evaluate, evaluate_many, incremental_step, AllocationRecord, BoundCheck,
    Component, EngineKind, Evaluation, NonNegOrthant, OracleComponent, Projection, RunOptions,
    RunTrace, TraceLevel, UpdateRecord,
};
use crate::error::EngineError;
use crate::problem::Problem;
use crate::step::StepSchedule;

/// Order in which one synchronous slot applies the node gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    /// All nodes respond to `lambda_t`; one projected step with the summed gradient.
    #[default]
    Aggregate,
    /// The cyclic incremental recursion: node `i` responds to the partially
    /// updated `lambda^{i-1}` and projects after its own step.
    Incremental,
}

pub fn run_synchronous(
    problem: &Problem,
    step: &StepSchedule,
    horizon: u64,
    seed: u64,
) -> Result<RunTrace, EngineError> {
    run_synchronous_with(problem, step, horizon, seed, SyncMode::Aggregate, &RunOptions::default())
}

pub fn run_synchronous_with(
    problem: &Problem,
    step: &StepSchedule,
    horizon: u64,
    seed: u64,
    mode: SyncMode,
    opts: &RunOptions,
) -> Result<RunTrace, EngineError> {
    let components = OracleComponent::from_problem(problem);
    run_sync_components(
        &components,
        &NonNegOrthant,
        problem.lambda_init().as_slice(),
        step,
        horizon,
        seed,
        mode,
        opts,
    )
}

/// Per-slot bookkeeping shared by the engines.
pub(super) struct SlotObjectives {
    values: Vec<f64>,
}

impl SlotObjectives {
    pub(super) fn new(k: usize) -> Self {
        Self {
            values: vec![0.0; k],
        }
    }

    pub(super) fn set(&mut self, node: usize, v: f64) {
        self.values[node] = v;
    }

    /// Sum in node-index order so every engine adds identically.
    pub(super) fn flush(&mut self, trace: &mut RunTrace, slot: u64) {
        trace.objective[slot as usize - 1] = self.values.iter().sum();
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn record_allocation(
    trace: &mut RunTrace,
    level: TraceLevel,
    objectives: &mut SlotObjectives,
    slot: u64,
    node: usize,
    eval: &Evaluation,
    dual_slot: u64,
) {
    let pi = slot - dual_slot;
    trace.delays.record_pi(pi);
    objectives.set(node, eval.objective);
    if let Some(a) = &eval.allocation {
        if a.skipped {
            trace.skipped[slot as usize - 1] += 1;
        }
        trace.push_x(node, &a.x);
    }
    if level == TraceLevel::Full {
        let (x, p, skipped) = match &eval.allocation {
            Some(a) => (a.x.clone(), a.p.clone(), a.skipped),
            None => (Vec::new(), Vec::new(), false),
        };
        trace.allocations.push(AllocationRecord {
            slot,
            node,
            x,
            p,
            g: eval.gradient.clone(),
            dual_slot,
            pi,
            skipped,
        });
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_sync_components(
    components: &[Arc<dyn Component>],
    projection: &dyn Projection,
    init: &[f64],
    step: &StepSchedule,
    horizon: u64,
    seed: u64,
    mode: SyncMode,
    opts: &RunOptions,
) -> Result<RunTrace, EngineError> {
    if horizon == 0 {
        return Err(EngineError::EmptyHorizon);
    }
    let k = components.len();
    let ring = opts.ring_order(k)?;
    let kind = match mode {
        SyncMode::Aggregate => EngineKind::Synchronous,
        SyncMode::Incremental => EngineKind::SynchronousIncremental,
    };
    let mut trace = RunTrace::new(kind, seed, horizon, init.len(), 0, ring.clone(), init);
    let mut checks = BoundCheck::new(components);
    let total_bound = checks.total();
    let mut objectives = SlotObjectives::new(k);

    for t in 1..=horizon {
        let eps = step.at(t);
        let lambda = trace.lambda(t).to_vec();
        let next = match mode {
            SyncMode::Aggregate => {
                let jobs: Vec<(usize, &[f64])> = (0..k).map(|i| (i, lambda.as_slice())).collect();
                let evals = evaluate_many(components, &jobs, t, seed, opts.parallel)?;
                for (i, e) in evals.iter().enumerate() {
                    record_allocation(&mut trace, opts.trace, &mut objectives, t, i, e, t);
                    let grad_norm = checks.gradient(i, &e.gradient, &mut trace.delays);
                    trace.delays.record_update(0, 0);
                    if opts.trace == TraceLevel::Full {
                        trace.updates.push(UpdateRecord {
                            cycle: t,
                            node: i,
                            wall_slot: t,
                            state_slot: t,
                            dual_slot: t,
                            delta: 0,
                            tau: 0,
                            step: eps,
                            displacement: 0.0,
                            grad_norm,
                            forced: false,
                        });
                    }
                }
                let grads: Vec<&[f64]> = evals.iter().map(|e| e.gradient.as_slice()).collect();
                let (next, sum) = aggregate_step(&lambda, &grads, eps, projection);
                checks.displacement(&lambda, &next, eps, total_bound, &mut trace.delays);
                trace.add_applied(t, &sum);
                next
            }
            SyncMode::Incremental => {
                let mut cur = lambda;
                for &i in &ring {
                    let e = evaluate(components[i].as_ref(), i, &cur, t, seed, Some(t))?;
                    record_allocation(&mut trace, opts.trace, &mut objectives, t, i, &e, t);
                    let grad_norm = checks.gradient(i, &e.gradient, &mut trace.delays);
                    let next = incremental_step(&cur, &e.gradient, eps, projection);
                    let displacement =
                        checks.displacement(&cur, &next, eps, checks.node(i), &mut trace.delays);
                    trace.delays.record_update(0, 0);
                    trace.add_applied(t, &e.gradient);
                    if opts.trace == TraceLevel::Full {
                        trace.updates.push(UpdateRecord {
                            cycle: t,
                            node: i,
                            wall_slot: t,
                            state_slot: t,
                            dual_slot: t,
                            delta: 0,
                            tau: 0,
                            step: eps,
                            displacement,
                            grad_norm,
                            forced: false,
                        });
                    }
                    cur = next;
                }
                cur
            }
        };
        objectives.flush(&mut trace, t);
        trace.push_lambda(&next, t);
    }
    Ok(trace)
}
