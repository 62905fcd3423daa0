//! Stochastic dual descent for network resource allocation.
//!
//! Nodes allocate resources against a shared multiplier vector and report
//! stochastic constraint values; the multiplier is updated synchronously, by a
//! fusion center with stale gradients, or incrementally by a token walking a
//! ring. Built-in problems, a multi-cell beamforming application and
//! analysis tools for checking convergence bounds are included.

pub mod analysis;
pub mod beamforming;
pub mod delay;
pub mod engine;
pub mod error;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod step;

pub use delay::{
    budget_incremental_schedule, constant_delay, no_delay, subset_fc_delay, DelayMode,
    DelaySchedule, UpdateBudget,
};
pub use engine::{
    run_aisdd, run_aissd_general, run_async_fc, run_synchronous, run_synchronous_with,
    RunOptions, RunTrace, SyncMode, TraceLevel,
};
pub use error::{AnalysisError, DelayError, EngineError, OracleError, ProblemError, StepError};
pub use problem::{
    lagrangian_term, project_nonneg, Allocation, DualVector, NodeOracle, Problem, StateSample,
    StochGradient,
};
pub use step::StepSchedule;
