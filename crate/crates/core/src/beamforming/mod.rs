//! Coordinated multi-cell downlink beamforming as a stochastic resource
//! allocation problem.
//!
//! Each base station is a node. Its multiplier-priced subproblem trades its
//! own transmit power and its users' interference budgets `I_j` against the
//! leakage it causes in other cells; the multipliers enforce, on average,
//! that every user's cross-cell leakage stays within its budget.

mod network;
mod node;
mod run;
pub mod socp;
mod subproblem;

use thiserror::Error;

use crate::error::{EngineError, ProblemError};

pub use network::{db_to_linear, gain, inner, linear_to_db, power, sinr, CellNetwork, ChannelSpec};
pub use node::{beamforming_dual_update, beamforming_gradient, BeamformingNode, Design};
pub use run::{
    beamforming_metrics, beamforming_problem, run_beamforming, Baseline, BeamformingEngine,
    BeamformingMetrics, BeamformingRun, MAX_FLAGGED_FRACTION,
};
pub use socp::SolverParams;
pub use subproblem::{interference_budget, leakage, solve_bs_subproblem, solve_uncoordinated, BsSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("{flagged} of {total} base-station slots had an infeasible design; the leakage cap rho is likely too small for the antenna count")]
    PersistentInfeasibility { flagged: u64, total: u64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
