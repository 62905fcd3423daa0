use super::sync::{record_allocation, SlotObjectives};
use super::{
    aggregate_step, evaluate_many, BoundCheck, EngineKind, IterateRing, NonNegOrthant,
    OracleComponent, RunOptions, RunTrace, TraceLevel, UpdateRecord,
};
use crate::delay::DelaySchedule;
use crate::error::{EngineError, ProblemError};
use crate::problem::{Problem, StochGradient};
use crate::step::StepSchedule;

/// Star topology: nodes allocate with possibly stale broadcasts, the center
/// sums the latest gradient it holds from every node.
pub fn run_async_fc(
    problem: &Problem,
    step: &StepSchedule,
    delay: &DelaySchedule,
    horizon: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunTrace, EngineError> {
    if horizon == 0 {
        return Err(EngineError::EmptyHorizon);
    }
    let k = problem.len();
    if delay.nodes != k {
        return Err(ProblemError::DimensionMismatch {
            expected: k,
            found: delay.nodes,
            context: "nodes in delay schedule".into(),
        }
        .into());
    }
    let components = OracleComponent::from_problem(problem);
    let mut delays = delay.fc_delays()?;
    let tau_max = delays.tau_max();
    let init = problem.lambda_init().as_slice();
    let d = init.len();
    let mut trace = RunTrace::new(
        EngineKind::AsyncFc,
        seed,
        horizon,
        d,
        tau_max,
        (0..k).collect(),
        init,
    );
    let mut history = IterateRing::new(tau_max as usize + 1, d, init);
    let mut checks = BoundCheck::new(&components);
    let total_bound = checks.total();
    let mut objectives = SlotObjectives::new(k);
    let mut stored: Vec<Option<StochGradient>> = vec![None; k];
    let mut last_delivery = vec![0u64; k];

    for t in 1..=horizon {
        let eps = step.at(t);
        let slot_delays = delays.next_slot().to_vec();
        let copies: Vec<u64> = slot_delays.iter().map(|sd| t - sd.pi).collect();
        let jobs: Vec<(usize, &[f64])> = (0..k).map(|i| (i, history.get(copies[i]))).collect();
        let evals = evaluate_many(&components, &jobs, t, seed, opts.parallel)?;

        for (i, e) in evals.into_iter().enumerate() {
            record_allocation(&mut trace, opts.trace, &mut objectives, t, i, &e, copies[i]);
            if slot_delays[i].deliver {
                if last_delivery[i] > 0 {
                    trace.delays.sum_delivery_gap += t - last_delivery[i];
                    trace.delays.delivery_gaps += 1;
                }
                last_delivery[i] = t;
                stored[i] = Some(StochGradient {
                    node: i,
                    g: e.gradient,
                    state_slot: t,
                    dual_slot: copies[i],
                });
            }
        }

        let lambda = trace.lambda(t).to_vec();
        let mut grads: Vec<&[f64]> = Vec::with_capacity(k);
        for (i, s) in stored.iter().enumerate() {
            let s = s.as_ref().expect("every node delivers at its first slot");
            assert!(s.stamps_valid(t), "gradient stamps out of order at node {i}");
            let delta = t - s.state_slot;
            let tau = t - s.dual_slot;
            assert!(
                tau <= tau_max && delta == slot_delays[i].delta && tau == slot_delays[i].tau,
                "delay bound broken at node {i}, slot {t}: delta {delta}, tau {tau}"
            );
            trace.delays.record_update(delta, tau);
            let grad_norm = checks.gradient(i, &s.g, &mut trace.delays);
            if opts.trace == TraceLevel::Full {
                trace.updates.push(UpdateRecord {
                    cycle: t,
                    node: i,
                    wall_slot: t,
                    state_slot: s.state_slot,
                    dual_slot: s.dual_slot,
                    delta,
                    tau,
                    step: eps,
                    displacement: 0.0,
                    grad_norm,
                    forced: false,
                });
            }
            grads.push(&s.g);
        }
        let (next, sum) = aggregate_step(&lambda, &grads, eps, &NonNegOrthant);
        checks.displacement(&lambda, &next, eps, total_bound, &mut trace.delays);
        trace.add_applied(t, &sum);
        objectives.flush(&mut trace, t);
        trace.push_lambda(&next, t);
        history.push(&next);
    }
    Ok(trace)
}
