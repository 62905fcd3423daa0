use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::network::{gain, inner, power, CellNetwork};
use super::node::{BeamformingNode, Design};
use super::socp::SolverParams;
use super::BeamformingError;
use crate::analysis::feasibility_gap;
use crate::delay::DelaySchedule;
use crate::engine::{run_aisdd, run_async_fc, run_synchronous_with, RunOptions, RunTrace, SyncMode};
use crate::problem::{NodeOracle, Problem};
use crate::step::StepSchedule;

/// Largest fraction of flagged base-station slots a run may contain.
pub const MAX_FLAGGED_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformingEngine {
    Synchronous,
    SynchronousIncremental,
    AsyncFc,
    Aisdd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    Uncoordinated,
}

pub fn beamforming_problem(network: &CellNetwork, design: Design, params: SolverParams) -> Result<Problem, BeamformingError> {
    network.validate()?;
    let shared = Arc::new(network.clone());
    Ok(Problem::new(
        (0..network.bs_count())
            .map(|i| Arc::new(BeamformingNode::new(shared.clone(), i, design, params)) as Arc<dyn NodeOracle>)
            .collect(),
    )?)
}

/// Slot-level quantities reconstructed from a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformingMetrics {
    /// `B` times the mean transmit power of a served base-station slot.
    pub avg_power: f64,
    /// Running value of `avg_power` after each slot.
    pub running_power: Vec<f64>,
    pub flagged: u64,
    pub bs_slots: u64,
    /// Mean over served user-slots of the realized SINR, linear scale.
    pub mean_sinr: f64,
    /// Mean over slots of the smallest realized SINR among served users.
    pub mean_worst_sinr: f64,
    /// Fraction of served user-slots whose realized SINR meets the target.
    pub sinr_met: f64,
    /// Served user-slots where the realized interference power is within
    /// `I_j^2` but the SINR misses the target. Zero for a correct solver.
    pub surrogate_violations: u64,
    /// Largest cross-cell leakage `|h_mj^H w_n|` over all slots.
    pub max_leakage: f64,
    /// Running average of `I_j - sum_n |h^H w_n|` for every user at the last slot.
    pub constraint_gap: Vec<f64>,
}

impl BeamformingMetrics {
    pub fn flagged_fraction(&self) -> f64 {
        self.flagged as f64 / self.bs_slots as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformingRun {
    pub trace: RunTrace,
    pub metrics: BeamformingMetrics,
}

/// Power, SINR and leakage of every slot of a beamforming trace. Channels are
/// redrawn from `seed`, so this is exact for traces produced with it.
pub fn beamforming_metrics(network: &CellNetwork, trace: &RunTrace, seed: u64) -> BeamformingMetrics {
    let b = network.bs_count();
    let users = network.user_count();
    let mut served_power = 0.0;
    let mut served = 0u64;
    let mut running_power = Vec::with_capacity(trace.horizon as usize);
    let (mut sinr_sum, mut sinr_n, mut met) = (0.0, 0u64, 0u64);
    let (mut worst_sum, mut worst_n) = (0.0, 0u64);
    let mut surrogate_violations = 0;
    let mut max_leakage: f64 = 0.0;
    for t in 1..=trace.horizon {
        let channels: Vec<Vec<f64>> = (0..b).map(|i| network.sample_channels(i, t, seed)).collect();
        let mut beams: Vec<Vec<f64>> = (0..users).map(|j| vec![0.0; 2 * network.antennas[network.users[j]]]).collect();
        let mut budgets = vec![0.0; users];
        let mut active = vec![false; b];
        for i in 0..b {
            let x = trace.x_at(i, t);
            let own = network.users_of(i);
            let n2 = 2 * network.antennas[i];
            let w = &x[..n2 * own.len()];
            if w.iter().all(|v| *v == 0.0) && !own.is_empty() {
                continue;
            }
            active[i] = true;
            served += 1;
            served_power += power(w);
            for (q, &j) in own.iter().enumerate() {
                beams[j] = w[n2 * q..n2 * (q + 1)].to_vec();
                budgets[j] = x[n2 * own.len() + q];
            }
        }
        running_power.push(if served > 0 { b as f64 * served_power / served as f64 } else { 0.0 });
        let mut worst = f64::INFINITY;
        for j in 0..users {
            let i = network.users[j];
            for (n, &m) in network.users.iter().enumerate() {
                if m != i && active[m] {
                    let (re, im) = inner(network.link(&channels[m], m, j), &beams[n]);
                    max_leakage = max_leakage.max(re.hypot(im));
                }
            }
            if !active[i] {
                continue;
            }
            let s = super::network::sinr(network, &channels, &beams, j);
            sinr_sum += s;
            sinr_n += 1;
            worst = worst.min(s);
            if s >= network.gamma[j] * (1.0 - 1e-9) {
                met += 1;
            }
            let cross: f64 = network
                .users
                .iter()
                .enumerate()
                .filter(|(_, &m)| m != i)
                .map(|(n, &m)| gain(network.link(&channels[m], m, j), &beams[n]))
                .sum();
            if cross <= budgets[j] * budgets[j] && s < network.gamma[j] * (1.0 - 1e-6) {
                surrogate_violations += 1;
            }
        }
        if worst.is_finite() {
            worst_sum += worst;
            worst_n += 1;
        }
    }
    let ratio = |a: f64, n: u64| if n > 0 { a / n as f64 } else { f64::NAN };
    BeamformingMetrics {
        avg_power: running_power.last().copied().unwrap_or(0.0),
        running_power,
        flagged: trace.total_skipped(),
        bs_slots: trace.horizon * b as u64,
        mean_sinr: ratio(sinr_sum, sinr_n),
        mean_worst_sinr: ratio(worst_sum, worst_n),
        sinr_met: ratio(met as f64, sinr_n),
        surrogate_violations,
        max_leakage,
        constraint_gap: feasibility_gap(trace, trace.horizon),
    }
}

/// Runs the stochastic design with the chosen engine, or the uncoordinated
/// baseline, and fails when more than half the base-station slots are flagged.
#[allow(clippy::too_many_arguments)]
pub fn run_beamforming(
    network: &CellNetwork,
    engine: BeamformingEngine,
    baseline: Baseline,
    step: &StepSchedule,
    delay: &DelaySchedule,
    horizon: u64,
    seed: u64,
    opts: &RunOptions,
    params: SolverParams,
) -> Result<BeamformingRun, BeamformingError> {
    let design = match baseline {
        Baseline::None => Design::Stochastic,
        Baseline::Uncoordinated => Design::Uncoordinated,
    };
    let problem = beamforming_problem(network, design, params)?;
    let trace = match engine {
        BeamformingEngine::Synchronous => run_synchronous_with(&problem, step, horizon, seed, SyncMode::Aggregate, opts)?,
        BeamformingEngine::SynchronousIncremental => {
            run_synchronous_with(&problem, step, horizon, seed, SyncMode::Incremental, opts)?
        }
        BeamformingEngine::AsyncFc => run_async_fc(&problem, step, delay, horizon, seed, opts)?,
        BeamformingEngine::Aisdd => run_aisdd(&problem, step, delay, horizon, seed, opts)?,
    };
    let flagged = trace.total_skipped();
    let total = horizon * network.bs_count() as u64;
    if flagged as f64 > MAX_FLAGGED_FRACTION * total as f64 {
        return Err(BeamformingError::PersistentInfeasibility { flagged, total });
    }
    let metrics = beamforming_metrics(network, &trace, seed);
    Ok(BeamformingRun { trace, metrics })
}
