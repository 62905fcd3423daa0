use std::collections::VecDeque;
use std::sync::Arc;

use super::sync::{record_allocation, SlotObjectives};
use super::{
    check_nonexpansive, evaluate, incremental_step, BoundCheck, Component, EngineKind,
    NonNegOrthant, OracleComponent, Projection, RunOptions, RunTrace, TraceLevel, UpdateRecord,
};
use crate::delay::{DelaySchedule, TokenStep};
use crate::error::{EngineError, ProblemError};
use crate::problem::{Problem, StochGradient};
use crate::step::StepSchedule;

/// Asynchronous incremental dual descent on a ring.
pub fn run_aisdd(
    problem: &Problem,
    step: &StepSchedule,
    delay: &DelaySchedule,
    horizon: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunTrace, EngineError> {
    let components = OracleComponent::from_problem(problem);
    let mut trace = run_aissd_general(
        &components,
        &NonNegOrthant,
        problem.lambda_init().as_slice(),
        step,
        delay,
        horizon,
        seed,
        opts,
    )?;
    trace.engine = EngineKind::Aisdd;
    Ok(trace)
}

/// Asynchronous incremental stochastic subgradient descent over `components`
/// with iterates confined by `projection`.
///
/// Two clocks run side by side. Every wall-clock slot each component is
/// evaluated once at its latest copy of the iterate. A token carrying the
/// iterate walks the ring at the pace set by `delay`; at cycle `t'` the
/// component at the token applies its gradient whose state slot is `t'`,
/// scaled by `eps_{t'}`.
#[allow(clippy::too_many_arguments)]
pub fn run_aissd_general(
    components: &[Arc<dyn Component>],
    projection: &dyn Projection,
    init: &[f64],
    step: &StepSchedule,
    delay: &DelaySchedule,
    horizon: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunTrace, EngineError> {
    if horizon == 0 {
        return Err(EngineError::EmptyHorizon);
    }
    let k = components.len();
    if delay.nodes != k {
        return Err(ProblemError::DimensionMismatch {
            expected: k,
            found: delay.nodes,
            context: "nodes in delay schedule".into(),
        }
        .into());
    }
    if let Some(c) = components.iter().find(|c| c.dim() != init.len()) {
        return Err(EngineError::InitDimension {
            expected: c.dim(),
            found: init.len(),
        });
    }
    let ring = opts.ring_order(k)?;
    let clock = delay.token_clock()?;
    check_nonexpansive(projection, init, seed);

    let tau_max = clock.tau_max();
    let trace = RunTrace::new(
        EngineKind::Aisdd,
        seed,
        horizon,
        init.len(),
        tau_max,
        ring.clone(),
        init,
    );
    let mut run = Ring {
        components,
        projection,
        step,
        seed,
        opts,
        ring,
        tau_max,
        checks: BoundCheck::new(components),
        objectives: SlotObjectives::new(k),
        token: init.to_vec(),
        expected: (1, 0),
        copies: vec![(init.to_vec(), 1); k],
        allocated: vec![false; k],
        history: vec![VecDeque::with_capacity(tau_max as usize + 2); k],
        trace,
    };
    let mut clock = clock;
    for s in 1..=horizon {
        for st in clock.slot_steps(s) {
            run.step(st, s)?;
        }
        for node in 0..k {
            if !run.allocated[node] {
                run.allocate(node, s)?;
            }
        }
        run.objectives.flush(&mut run.trace, s);
        run.allocated.iter_mut().for_each(|a| *a = false);
    }
    // every node has allocated at the last slot
    run.allocated.iter_mut().for_each(|a| *a = true);
    for st in clock.flush(horizon) {
        run.step(st, horizon)?;
    }
    assert_eq!(
        run.expected,
        (horizon + 1, 0),
        "token did not complete every cycle"
    );
    Ok(run.trace)
}

struct Ring<'a> {
    components: &'a [Arc<dyn Component>],
    projection: &'a dyn Projection,
    step: &'a StepSchedule,
    seed: u64,
    opts: &'a RunOptions,
    ring: Vec<usize>,
    tau_max: u64,
    checks: BoundCheck,
    objectives: SlotObjectives,
    /// Iterate carried by the token, `lambda^{pos}_{cycle}`.
    token: Vec<f64>,
    /// Next (cycle, position) the token must visit.
    expected: (u64, usize),
    /// Latest iterate each node received and the cycle it belongs to.
    copies: Vec<(Vec<f64>, u64)>,
    allocated: Vec<bool>,
    history: Vec<VecDeque<StochGradient>>,
    trace: RunTrace,
}

impl Ring<'_> {
    fn allocate(&mut self, node: usize, slot: u64) -> Result<(), EngineError> {
        let (point, stamp) = &self.copies[node];
        let e = evaluate(
            self.components[node].as_ref(),
            node,
            point,
            slot,
            self.seed,
            Some(*stamp),
        )?;
        let stamp = *stamp;
        record_allocation(
            &mut self.trace,
            self.opts.trace,
            &mut self.objectives,
            slot,
            node,
            &e,
            stamp,
        );
        self.checks.gradient(node, &e.gradient, &mut self.trace.delays);
        let h = &mut self.history[node];
        if h.len() > self.tau_max as usize {
            h.pop_front();
        }
        h.push_back(StochGradient {
            node,
            g: e.gradient,
            state_slot: slot,
            dual_slot: stamp,
        });
        self.allocated[node] = true;
        Ok(())
    }

    fn step(&mut self, st: TokenStep, wall: u64) -> Result<(), EngineError> {
        assert_eq!(
            (st.cycle, st.position),
            self.expected,
            "token skipped or repeated a visit"
        );
        let k = self.ring.len();
        let node = self.ring[st.position];
        let cycle = st.cycle;
        self.copies[node] = (self.token.clone(), cycle);
        if cycle == wall && !self.allocated[node] {
            self.allocate(node, wall)?;
        }

        let g = self.history[node]
            .iter()
            .rev()
            .find(|g| g.state_slot <= cycle)
            .expect("gradient for the processed cycle is retained");
        assert!(g.stamps_valid(cycle));
        let delta = cycle - g.state_slot;
        let tau = cycle - g.dual_slot;
        assert!(
            tau <= self.tau_max,
            "delay bound broken at node {node}, cycle {cycle}: tau {tau} > {}",
            self.tau_max
        );
        let eps = self.step.at(cycle);
        let next = incremental_step(&self.token, &g.g, eps, self.projection);
        let stats = &mut self.trace.delays;
        let displacement =
            self.checks
                .displacement(&self.token, &next, eps, self.checks.node(node), stats);
        stats.record_update(delta, tau);
        if st.forced {
            stats.forced_steps += 1;
        }
        let grad_norm = crate::problem::norm(&g.g);
        if self.opts.trace == TraceLevel::Full {
            self.trace.updates.push(UpdateRecord {
                cycle,
                node,
                wall_slot: wall,
                state_slot: g.state_slot,
                dual_slot: g.dual_slot,
                delta,
                tau,
                step: eps,
                displacement,
                grad_norm,
                forced: st.forced,
            });
        }
        let applied = g.g.clone();
        self.trace.add_applied(cycle, &applied);
        self.token = next;

        self.expected = if st.position + 1 == k {
            self.trace.push_lambda(&self.token, wall);
            (cycle + 1, 0)
        } else {
            (cycle, st.position + 1)
        };
        Ok(())
    }
}
