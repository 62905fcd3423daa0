use std::sync::Arc;

use super::network::{power, CellNetwork};
use super::subproblem::{leakage, solve_bs_subproblem, solve_uncoordinated, BsSolution};
use super::socp::SolverParams;
use crate::engine::{incremental_step, NonNegOrthant};
use crate::error::OracleError;
use crate::problem::{Allocation, NodeOracle, StateSample};

/// Which per-cell design a base station runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Design {
    /// Interference budgets priced by the shared multipliers.
    Stochastic,
    /// Fixed interference threshold; the multipliers are ignored.
    Uncoordinated,
}

/// Base station `i` as a node of the dual decomposition.
///
/// `x` holds the interleaved beamformers of the cell's users followed by
/// their interference budgets; the state is the channel from this base
/// station to every user.
#[derive(Clone, Debug)]
pub struct BeamformingNode {
    network: Arc<CellNetwork>,
    bs: usize,
    own: Vec<usize>,
    design: Design,
    params: SolverParams,
}

impl BeamformingNode {
    pub fn new(network: Arc<CellNetwork>, bs: usize, design: Design, params: SolverParams) -> Self {
        let own = network.users_of(bs);
        Self {
            network,
            bs,
            own,
            design,
            params,
        }
    }

    fn w_len(&self) -> usize {
        2 * self.network.antennas[self.bs] * self.own.len()
    }

    fn x_len(&self) -> usize {
        self.w_len() + self.own.len()
    }

    /// Splits `x` into per-user beamformers and interference budgets.
    pub fn unpack<'a>(&self, x: &'a [f64]) -> (Vec<&'a [f64]>, &'a [f64]) {
        let n2 = 2 * self.network.antennas[self.bs];
        let (w, i) = x.split_at(self.w_len());
        (w.chunks(n2).collect(), i)
    }

    fn pack(&self, sol: &BsSolution) -> Vec<f64> {
        let mut x: Vec<f64> = sol.w.concat();
        x.extend(&sol.interference);
        x
    }
}

/// Constraint values of base station `i`: `I_j` for its own users and
/// `-sum_n |h_ij^H w_n|` for every other user.
pub fn beamforming_gradient(network: &CellNetwork, i: usize, channels: &[f64], w: &[Vec<f64>], interference: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; network.user_count()];
    let own = network.users_of(i);
    for (q, &j) in own.iter().enumerate() {
        g[j] = interference[q];
    }
    for (j, gj) in g.iter_mut().enumerate() {
        if network.users[j] != i {
            *gj = -leakage(network, i, channels, w, j);
        }
    }
    g
}

/// One token step at base station `i`: own users `[lambda_j - eps I_j]^+`,
/// other users `[lambda_j + eps sum_n |h_ij^H w_n|]^+`.
pub fn beamforming_dual_update(
    network: &CellNetwork,
    i: usize,
    lambda: &[f64],
    channels: &[f64],
    solution: &BsSolution,
    epsilon: f64,
) -> Vec<f64> {
    let g = beamforming_gradient(network, i, channels, &solution.w, &solution.interference);
    incremental_step(lambda, &g, epsilon, &NonNegOrthant)
}

impl NodeOracle for BeamformingNode {
    fn dual_dim(&self) -> usize {
        self.network.user_count()
    }

    fn sample_state(&self, slot: u64, seed: u64) -> StateSample {
        StateSample {
            node: self.bs,
            slot,
            value: self.network.sample_channels(self.bs, slot, seed),
        }
    }

    fn best_response(&self, lambda: &[f64], state: &StateSample) -> Result<Allocation, OracleError> {
        if lambda.iter().any(|l| !(*l >= 0.0)) {
            return Err(OracleError::NoBestResponse(format!("multiplier {lambda:?}")));
        }
        let sol = match self.design {
            Design::Stochastic => solve_bs_subproblem(&self.network, self.bs, lambda, &state.value, &self.params),
            Design::Uncoordinated => solve_uncoordinated(&self.network, self.bs, &state.value, &self.params),
        };
        Ok(match sol {
            Some(sol) => Allocation {
                node: self.bs,
                slot: state.slot,
                x: self.pack(&sol),
                p: Vec::new(),
                skipped: false,
            },
            None => Allocation::skipped(self.bs, state.slot, self.x_len(), 0),
        })
    }

    fn gradient(&self, allocation: &Allocation, state: &StateSample) -> Vec<f64> {
        if self.design == Design::Uncoordinated {
            return vec![0.0; self.network.user_count()];
        }
        let (w, i) = self.unpack(&allocation.x);
        let w: Vec<Vec<f64>> = w.into_iter().map(<[f64]>::to_vec).collect();
        beamforming_gradient(&self.network, self.bs, &state.value, &w, i)
    }

    /// Negative transmit power.
    fn objective(&self, x: &[f64]) -> f64 {
        -power(&x[..self.w_len()])
    }
}
