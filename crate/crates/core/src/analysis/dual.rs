//! Monte Carlo evaluation of the dual function and its gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::RunTrace;
use crate::error::ProblemError;
use crate::problem::{dot, Problem, StateSample};
use crate::rng::{derive_seed, tag};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            stderr,
            samples: n,
        }
    }
}

pub(crate) fn mc_seed(seed: u64) -> u64 {
    derive_seed(seed, &[tag::MONTE_CARLO])
}

fn check_lambda(problem: &Problem, lambda: &[f64]) -> Result<(), ProblemError> {
    if lambda.len() != problem.dual_dim() {
        return Err(ProblemError::DimensionMismatch {
            expected: problem.dual_dim(),
            found: lambda.len(),
            context: "multiplier for dual estimate".into(),
        });
    }
    crate::problem::DualVector::new(lambda.to_vec()).map(|_| ())
}

/// `sum_i max f + <lambda, g>` over one set of node states.
fn lagrangian_at(problem: &Problem, lambda: &[f64], states: &[StateSample]) -> Result<f64, ProblemError> {
    let mut total = 0.0;
    for (node, state) in problem.nodes().iter().zip(states) {
        let a = node
            .best_response(lambda, state)
            .map_err(|e| ProblemError::InvalidSpec(e.to_string()))?;
        if a.skipped {
            continue;
        }
        total += node.objective(&a.x) + dot(lambda, &node.gradient(&a, state));
    }
    Ok(total)
}

/// States of every node for sample `k` (realized at slot `k + 1`).
fn states_for(problem: &Problem, k: usize, seed: u64) -> Vec<StateSample> {
    problem
        .nodes()
        .iter()
        .map(|node| node.sample_state(k as u64 + 1, seed))
        .collect()
}

fn dual_sample(problem: &Problem, lambda: &[f64], k: usize, seed: u64) -> Result<f64, ProblemError> {
    lagrangian_at(problem, lambda, &states_for(problem, k, seed))
}

/// The Monte Carlo states of [`estimate_dual`] drawn once, for repeated
/// evaluation of the same sample-average dual at many multipliers.
pub struct SampledDual<'a> {
    problem: &'a Problem,
    states: Vec<Vec<StateSample>>,
}

impl<'a> SampledDual<'a> {
    pub fn new(problem: &'a Problem, n_samples: usize, seed: u64) -> Self {
        let s = mc_seed(seed);
        let states = (0..n_samples.max(1))
            .into_par_iter()
            .map(|k| states_for(problem, k, s))
            .collect();
        Self { problem, states }
    }

    /// Equal to `estimate_dual(problem, lambda, n_samples, seed).mean`.
    pub fn value(&self, lambda: &[f64]) -> Result<f64, ProblemError> {
        check_lambda(self.problem, lambda)?;
        let mut total = 0.0;
        for st in &self.states {
            total += lagrangian_at(self.problem, lambda, st)?;
        }
        Ok(total / self.states.len() as f64)
    }
}

fn samples<F>(n: usize, f: F) -> Result<Vec<f64>, ProblemError>
where
    F: Fn(usize) -> Result<f64, ProblemError> + Sync + Send,
{
    (0..n.max(1)).into_par_iter().map(f).collect()
}

/// Unbiased estimate of `D(lambda)`; deterministic in `seed`.
pub fn estimate_dual(
    problem: &Problem,
    lambda: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate, ProblemError> {
    check_lambda(problem, lambda)?;
    let s = mc_seed(seed);
    let v = samples(n_samples, |k| dual_sample(problem, lambda, k, s))?;
    Ok(Estimate::from_values(&v))
}

/// Estimate of `D(a) - D(b)` with common random numbers.
pub fn estimate_dual_difference(
    problem: &Problem,
    a: &[f64],
    b: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate, ProblemError> {
    check_lambda(problem, a)?;
    check_lambda(problem, b)?;
    let s = mc_seed(seed);
    let v = samples(n_samples, |k| {
        Ok(dual_sample(problem, a, k, s)? - dual_sample(problem, b, k, s)?)
    })?;
    Ok(Estimate::from_values(&v))
}

/// Monte Carlo mean of node `node`'s stochastic gradient at `lambda`.
pub fn mean_gradient(
    problem: &Problem,
    node: usize,
    lambda: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>, ProblemError> {
    check_lambda(problem, lambda)?;
    let s = mc_seed(seed);
    let oracle = problem.node(node);
    let d = problem.dual_dim();
    let grads: Vec<Vec<f64>> = (0..n_samples.max(1))
        .into_par_iter()
        .map(|k| {
            let state = oracle.sample_state(k as u64 + 1, s);
            let a = oracle
                .best_response(lambda, &state)
                .map_err(|e| ProblemError::InvalidSpec(e.to_string()))?;
            Ok(if a.skipped {
                vec![0.0; d]
            } else {
                oracle.gradient(&a, &state)
            })
        })
        .collect::<Result<_, ProblemError>>()?;
    let mut mean = vec![0.0; d];
    for g in &grads {
        for (m, v) in mean.iter_mut().zip(g) {
            *m += v;
        }
    }
    let n = grads.len() as f64;
    Ok(mean.into_iter().map(|m| m / n).collect())
}

/// Dual estimate at one iterate of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub t: u64,
    pub estimate: Estimate,
}

/// Iterates at which a trace is evaluated: `1, 1 + cadence, ...` and `T + 1`.
pub fn checkpoints(horizon: u64, cadence: u64) -> Vec<u64> {
    let cadence = cadence.max(1);
    let mut ts: Vec<u64> = (1..=horizon + 1).step_by(cadence as usize).collect();
    if ts.last() != Some(&(horizon + 1)) {
        ts.push(horizon + 1);
    }
    ts
}

/// `D(lambda_t)` along a trace at the given cadence. With `reference`, each
/// point instead estimates `D(lambda_t) - D(reference)` using common random
/// numbers, which is far less noisy near the optimum.
pub fn dual_track(
    problem: &Problem,
    trace: &RunTrace,
    cadence: u64,
    n_samples: usize,
    seed: u64,
    reference: Option<&[f64]>,
) -> Result<Vec<DualPoint>, ProblemError> {
    checkpoints(trace.horizon, cadence)
        .into_par_iter()
        .map(|t| {
            let l = trace.lambda(t);
            let estimate = match reference {
                Some(r) => estimate_dual_difference(problem, l, r, n_samples, seed)?,
                None => estimate_dual(problem, l, n_samples, seed)?,
            };
            Ok(DualPoint { t, estimate })
        })
        .collect()
}
