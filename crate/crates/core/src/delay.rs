//! Asynchrony patterns under a hard staleness bound.
//!
//! Three quantities describe how stale the information used by node `i` at
//! slot `t` is: `pi` (age of the multiplier copy used to allocate), `delta`
//! (age of the state behind the gradient consumed by the dual update) and
//! `tau` (age of the multiplier that gradient was evaluated with). Every
//! schedule here guarantees `0 <= delta <= tau <= tau_max`; when randomness
//! would break the bound, the lagging node is forced to catch up.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DelayError;
use crate::rng::{stream_rng, tag};

/// Number of incremental dual steps the ring performs per slot, drawn
/// uniformly from `min_updates..=max_updates`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateBudget {
    pub min_updates: usize,
    pub max_updates: usize,
}

impl UpdateBudget {
    pub fn new(min_updates: usize, max_updates: usize) -> Result<Self, DelayError> {
        if min_updates == 0 || min_updates > max_updates {
            return Err(DelayError::InvalidBudget {
                min: min_updates,
                max: max_updates,
            });
        }
        Ok(Self {
            min_updates,
            max_updates,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(self.min_updates..=self.max_updates)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayMode {
    /// Every node works `c` slots behind.
    Constant { c: u64 },
    /// Each slot a uniformly random `m`-subset of nodes reaches the fusion center.
    SubsetFc { m: usize },
    /// The ring performs a random number of dual steps per slot.
    BudgetIncremental { budget: UpdateBudget },
}

impl DelayMode {
    pub fn name(&self) -> &'static str {
        match self {
            DelayMode::Constant { .. } => "constant",
            DelayMode::SubsetFc { .. } => "subset-fc",
            DelayMode::BudgetIncremental { .. } => "budget-incremental",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaySchedule {
    pub mode: DelayMode,
    pub tau_max: u64,
    pub nodes: usize,
    pub seed: u64,
}

/// `pi = c`, `delta = 0` for every node and slot.
pub fn constant_delay(c: u64, nodes: usize) -> DelaySchedule {
    DelaySchedule {
        mode: DelayMode::Constant { c },
        tau_max: c,
        nodes,
        seed: 0,
    }
}

/// Zero staleness everywhere.
pub fn no_delay(nodes: usize) -> DelaySchedule {
    constant_delay(0, nodes)
}

pub fn subset_fc_delay(
    m: usize,
    nodes: usize,
    tau_max: u64,
    seed: u64,
) -> Result<DelaySchedule, DelayError> {
    if m == 0 || m > nodes {
        return Err(DelayError::SubsetSize { m, k: nodes });
    }
    Ok(DelaySchedule {
        mode: DelayMode::SubsetFc { m },
        tau_max,
        nodes,
        seed,
    })
}

pub fn budget_incremental_schedule(
    budget: UpdateBudget,
    nodes: usize,
    tau_max: u64,
    seed: u64,
) -> DelaySchedule {
    DelaySchedule {
        mode: DelayMode::BudgetIncremental { budget },
        tau_max,
        nodes,
        seed,
    }
}

impl DelaySchedule {
    /// Generator of per-slot delays for the fusion-center engine.
    pub fn fc_delays(&self) -> Result<FcDelays, DelayError> {
        let kind = match self.mode {
            DelayMode::Constant { c } => {
                if c > self.tau_max {
                    return Err(DelayError::ConstantExceedsBound {
                        c,
                        tau_max: self.tau_max,
                    });
                }
                FcKind::Constant { c }
            }
            DelayMode::SubsetFc { m } => {
                if m == 0 || m > self.nodes {
                    return Err(DelayError::SubsetSize { m, k: self.nodes });
                }
                FcKind::Subset {
                    m,
                    rng: Box::new(stream_rng(self.seed, tag::DELAY)),
                }
            }
            DelayMode::BudgetIncremental { .. } => {
                return Err(DelayError::Incompatible {
                    schedule: self.mode.name(),
                    engine: "fusion-center",
                })
            }
        };
        Ok(FcDelays {
            kind,
            tau_max: self.tau_max,
            slot: 0,
            copy_stamp: vec![1; self.nodes],
            last_delivery: vec![0; self.nodes],
            pi_at_delivery: vec![0; self.nodes],
            current: vec![FcNodeDelay::default(); self.nodes],
        })
    }

    /// Pacing of the dual token for the incremental engine.
    pub fn token_clock(&self) -> Result<TokenClock, DelayError> {
        let (lag, budget) = match self.mode {
            DelayMode::Constant { c } => {
                if c > self.tau_max {
                    return Err(DelayError::ConstantExceedsBound {
                        c,
                        tau_max: self.tau_max,
                    });
                }
                (c, None)
            }
            DelayMode::BudgetIncremental { budget } => {
                UpdateBudget::new(budget.min_updates, budget.max_updates)?;
                (0, Some((budget, stream_rng(self.seed, tag::DELAY))))
            }
            DelayMode::SubsetFc { .. } => {
                return Err(DelayError::Incompatible {
                    schedule: self.mode.name(),
                    engine: "incremental",
                })
            }
        };
        Ok(TokenClock {
            nodes: self.nodes,
            tau_max: self.tau_max,
            lag,
            budget,
            cycle: 1,
            position: 0,
        })
    }
}

/// Delays of one node at one slot of the fusion-center engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcNodeDelay {
    /// Age of the multiplier copy the node allocates with.
    pub pi: u64,
    /// Age of the gradient the center holds for this node after the slot's deliveries.
    pub delta: u64,
    /// Age of the multiplier that stored gradient was evaluated with.
    pub tau: u64,
    /// Whether the node's fresh gradient reaches the center this slot.
    pub deliver: bool,
}

enum FcKind {
    Constant { c: u64 },
    Subset { m: usize, rng: Box<ChaCha8Rng> },
}

/// Sequential generator; call [`FcDelays::next_slot`] once per slot, in order.
pub struct FcDelays {
    kind: FcKind,
    tau_max: u64,
    slot: u64,
    // slot stamp of the multiplier copy each node holds
    copy_stamp: Vec<u64>,
    // 0 = never delivered
    last_delivery: Vec<u64>,
    pi_at_delivery: Vec<u64>,
    current: Vec<FcNodeDelay>,
}

impl FcDelays {
    pub fn tau_max(&self) -> u64 {
        self.tau_max
    }

    pub fn next_slot(&mut self) -> &[FcNodeDelay] {
        self.slot += 1;
        let t = self.slot;
        match &mut self.kind {
            FcKind::Constant { c } => {
                let pi = (*c).min(t - 1);
                for d in self.current.iter_mut() {
                    *d = FcNodeDelay {
                        pi,
                        delta: 0,
                        tau: pi,
                        deliver: true,
                    };
                }
            }
            FcKind::Subset { m, rng } => {
                let k = self.current.len();
                let mut deliver = vec![false; k];
                let mut forced = 0;
                for i in 0..k {
                    let pi = t - self.copy_stamp[i];
                    let stale_if_silent = if self.last_delivery[i] == 0 {
                        u64::MAX
                    } else {
                        t - self.last_delivery[i] + self.pi_at_delivery[i]
                    };
                    self.current[i].pi = pi;
                    if stale_if_silent > self.tau_max {
                        deliver[i] = true;
                        forced += 1;
                    }
                }
                let free: Vec<usize> = (0..k).filter(|&i| !deliver[i]).collect();
                let extra = m.saturating_sub(forced).min(free.len());
                for pick in index::sample(rng.as_mut(), free.len(), extra) {
                    deliver[free[pick]] = true;
                }
                for i in 0..k {
                    let d = &mut self.current[i];
                    d.deliver = deliver[i];
                    if deliver[i] {
                        self.last_delivery[i] = t;
                        self.pi_at_delivery[i] = d.pi;
                        // the broadcast that follows the update reaches this node
                        self.copy_stamp[i] = t + 1;
                    }
                    d.delta = t - self.last_delivery[i];
                    d.tau = d.delta + self.pi_at_delivery[i];
                }
            }
        }
        &self.current
    }
}

/// One incremental dual step: node at ring `position` processes `cycle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStep {
    pub cycle: u64,
    pub position: usize,
    /// Step taken only to keep the staleness bound.
    pub forced: bool,
}

/// Decides which token steps happen in each wall-clock slot.
///
/// The token never runs ahead of the clock (cycle `t'` is processed at slots
/// `>= t' + lag`), and every cycle `t'` is completed around the whole ring
/// before slot `t' + tau_max` ends.
#[derive(Clone, Debug)]
pub struct TokenClock {
    nodes: usize,
    tau_max: u64,
    lag: u64,
    budget: Option<(UpdateBudget, ChaCha8Rng)>,
    cycle: u64,
    position: usize,
}

impl TokenClock {
    pub fn lag(&self) -> u64 {
        self.lag
    }

    pub fn tau_max(&self) -> u64 {
        self.tau_max
    }

    /// Next step to be executed.
    pub fn position(&self) -> (u64, usize) {
        (self.cycle, self.position)
    }

    fn advance(&mut self, forced: bool, out: &mut Vec<TokenStep>) {
        out.push(TokenStep {
            cycle: self.cycle,
            position: self.position,
            forced,
        });
        self.position += 1;
        if self.position == self.nodes {
            self.position = 0;
            self.cycle += 1;
        }
    }

    /// Steps of slot `slot`; slots must be requested in increasing order.
    pub fn slot_steps(&mut self, slot: u64) -> Vec<TokenStep> {
        let mut steps = Vec::new();
        let mut allowance = match &mut self.budget {
            Some((budget, rng)) => budget.draw(rng),
            None => usize::MAX,
        };
        let ready = slot.checked_sub(self.lag);
        while allowance > 0 && ready.is_some_and(|r| self.cycle <= r) {
            self.advance(false, &mut steps);
            allowance -= 1;
        }
        if let Some(deadline) = slot.checked_sub(self.tau_max) {
            while self.cycle <= deadline {
                self.advance(true, &mut steps);
            }
        }
        steps
    }

    /// Remaining steps needed to complete every cycle up to `horizon`.
    pub fn flush(&mut self, horizon: u64) -> Vec<TokenStep> {
        let mut steps = Vec::new();
        while self.cycle <= horizon {
            self.advance(true, &mut steps);
        }
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_schedule_reports_clamped_delay() {
        let mut fc = constant_delay(3, 10).fc_delays().unwrap();
        let first = fc.next_slot().to_vec();
        assert!(first.iter().all(|d| d.pi == 0 && d.delta == 0 && d.deliver));
        for _ in 2..=5 {
            fc.next_slot();
        }
        let d = fc.next_slot()[4];
        assert_eq!((d.pi, d.delta, d.tau), (3, 0, 3));
    }

    #[test]
    fn full_subset_means_zero_staleness() {
        let mut fc = subset_fc_delay(6, 6, 5, 9).unwrap().fc_delays().unwrap();
        for _ in 0..200 {
            assert!(fc
                .next_slot()
                .iter()
                .all(|d| d.pi == 0 && d.delta == 0 && d.tau == 0 && d.deliver));
        }
    }

    #[test]
    fn subset_size_is_validated() {
        assert_eq!(
            subset_fc_delay(11, 10, 5, 0).unwrap_err(),
            DelayError::SubsetSize { m: 11, k: 10 }
        );
        assert!(subset_fc_delay(0, 10, 5, 0).is_err());
    }

    #[test]
    fn subset_staleness_is_clamped() {
        let mut fc = subset_fc_delay(1, 2, 3, 4).unwrap().fc_delays().unwrap();
        for _ in 0..5_000 {
            for d in fc.next_slot() {
                assert!(d.delta <= d.tau && d.tau <= 3 && d.pi <= 3);
            }
        }
    }

    #[test]
    fn subset_four_of_ten_has_finite_bounded_staleness() {
        let mut fc = subset_fc_delay(4, 10, 20, 1).unwrap().fc_delays().unwrap();
        let mut sum = 0u64;
        let mut max = 0u64;
        let slots = 10_000u64;
        for _ in 0..slots {
            for d in fc.next_slot() {
                sum += d.tau;
                max = max.max(d.tau);
            }
        }
        let mean = sum as f64 / (slots * 10) as f64;
        assert!(mean.is_finite() && mean > 0.0);
        assert!(max <= 20);
    }

    #[test]
    fn incompatible_modes_are_rejected() {
        let b = budget_incremental_schedule(UpdateBudget::new(1, 2).unwrap(), 3, 4, 0);
        assert!(matches!(b.fc_delays(), Err(DelayError::Incompatible { .. })));
        let s = subset_fc_delay(2, 3, 4, 0).unwrap();
        assert!(matches!(s.token_clock(), Err(DelayError::Incompatible { .. })));
    }

    #[test]
    fn budget_validation() {
        assert!(UpdateBudget::new(0, 3).is_err());
        assert!(UpdateBudget::new(4, 3).is_err());
        assert!(UpdateBudget::new(3, 3).is_ok());
    }

    #[test]
    fn full_cycle_budget_processes_one_cycle_per_slot() {
        let k = 4;
        let mut clock = budget_incremental_schedule(UpdateBudget::new(k, k).unwrap(), k, 0, 3)
            .token_clock()
            .unwrap();
        for s in 1..=50u64 {
            let steps = clock.slot_steps(s);
            assert_eq!(steps.len(), k);
            assert!(steps.iter().all(|st| st.cycle == s && !st.forced));
            let positions: Vec<usize> = steps.iter().map(|st| st.position).collect();
            assert_eq!(positions, (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn budget_five_to_fifteen_averages_one_cycle_per_slot() {
        let k = 10;
        let mut clock = budget_incremental_schedule(UpdateBudget::new(5, 15).unwrap(), k, 20, 8)
            .token_clock()
            .unwrap();
        let slots = 10_000u64;
        let steps: usize = (1..=slots).map(|s| clock.slot_steps(s).len()).sum();
        let cycles_per_slot = steps as f64 / k as f64 / slots as f64;
        assert!((0.9..=1.1).contains(&cycles_per_slot), "{cycles_per_slot}");
    }

    #[test]
    fn token_never_runs_ahead_and_meets_deadline() {
        let k = 10;
        let tau_max = 12;
        let mut clock = budget_incremental_schedule(UpdateBudget::new(1, 1).unwrap(), k, tau_max, 0)
            .token_clock()
            .unwrap();
        for s in 1..=2_000u64 {
            for st in clock.slot_steps(s) {
                assert!(st.cycle <= s);
            }
            let (cycle, _) = clock.position();
            assert!(cycle + tau_max > s);
        }
    }

    #[test]
    fn constant_lag_processes_exactly_one_old_cycle() {
        let mut clock = constant_delay(2, 3).token_clock().unwrap();
        assert!(clock.slot_steps(1).is_empty());
        assert!(clock.slot_steps(2).is_empty());
        for s in 3..20u64 {
            let steps = clock.slot_steps(s);
            assert_eq!(steps.len(), 3);
            assert!(steps.iter().all(|st| st.cycle == s - 2));
        }
        let rest = clock.flush(19);
        assert_eq!(rest.len(), 6);
    }

    #[test]
    fn schedules_are_deterministic() {
        let sched = subset_fc_delay(3, 7, 6, 42).unwrap();
        let mut a = sched.fc_delays().unwrap();
        let mut b = sched.fc_delays().unwrap();
        for _ in 0..500 {
            assert_eq!(a.next_slot(), b.next_slot());
        }
    }
}
