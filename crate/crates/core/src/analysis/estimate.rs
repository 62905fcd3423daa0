//! Empirical surrogates for the gradient bound `V`, the multiplier bound `B`
//! and the Lipschitz constant `L`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dual::mean_gradient;
use super::metrics::max_dual_norm;
use crate::engine::RunTrace;
use crate::error::ProblemError;
use crate::problem::{distance, norm, Problem};
use crate::rng::{derive_seed, tag};

/// Gradient norms are inflated by this factor before being reported as `V`.
pub const V_INFLATION: f64 = 1.05;

const V_POINTS: usize = 32;
const L_PAIRS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimates {
    pub v: f64,
    pub b_hat: f64,
    pub l_hat: f64,
}

/// Multipliers at which the constants are probed: the corners of
/// `[0, hi]^d` (for `d <= 4`) followed by uniform draws from the box.
fn probe_points(dim: usize, hi: f64, random: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    if dim <= 4 {
        for mask in 0..(1usize << dim) {
            pts.push((0..dim).map(|j| if mask >> j & 1 == 1 { hi } else { 0.0 }).collect());
        }
    } else {
        pts.push(vec![0.0; dim]);
        pts.push(vec![hi; dim]);
    }
    for _ in 0..random {
        pts.push((0..dim).map(|_| rng.random_range(0.0..=hi)).collect());
    }
    pts
}

/// Largest gradient norm of any node over `n_samples` states at each probe point.
fn max_gradient_norm(problem: &Problem, points: &[Vec<f64>], n_samples: usize, seed: u64) -> Result<f64, ProblemError> {
    let per_point: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(j, lambda)| {
            let s = derive_seed(seed, &[tag::ANALYSIS, 0x7601, j as u64]);
            let mut best: f64 = 0.0;
            for node in problem.nodes() {
                for k in 0..n_samples.max(1) {
                    let state = node.sample_state(k as u64 + 1, s);
                    let a = node
                        .best_response(lambda, &state)
                        .map_err(|e| ProblemError::InvalidSpec(e.to_string()))?;
                    if !a.skipped {
                        best = best.max(norm(&node.gradient(&a, &state)));
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_, ProblemError>>()?;
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

/// Largest finite-difference ratio of the nodes' mean gradients over random
/// nearby pairs, with common random numbers inside each pair.
fn max_lipschitz_ratio(
    problem: &Problem,
    hi: f64,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<f64, ProblemError> {
    let d = problem.dual_dim();
    let h = 0.05 * hi;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..L_PAIRS)
        .map(|_| {
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=hi)).collect();
            let b: Vec<f64> = a
                .iter()
                .map(|v| (v + rng.random_range(-h..=h)).max(0.0))
                .collect();
            (a, b)
        })
        .filter(|(a, b)| distance(a, b) > 1e-3 * h)
        .collect();
    let mut best: f64 = 0.0;
    for (j, (a, b)) in pairs.iter().enumerate() {
        let s = derive_seed(seed, &[tag::ANALYSIS, 0x1195, j as u64]);
        for i in 0..problem.len() {
            let ga = mean_gradient(problem, i, a, n_samples, s)?;
            let gb = mean_gradient(problem, i, b, n_samples, s)?;
            best = best.max(distance(&ga, &gb) / distance(a, b));
        }
    }
    Ok(best)
}

/// `V`, `B_hat` and `L_hat` for a problem. `B_hat` is the largest multiplier
/// norm along `pilot`; `V` and `L_hat` are probed on `[0, 2 max(B_hat, 1)]^d`.
pub fn estimate_v_b_l(
    problem: &Problem,
    pilot: &RunTrace,
    n_samples: usize,
    seed: u64,
) -> Result<ConstantEstimates, ProblemError> {
    let b_hat = max_dual_norm(pilot);
    let hi = 2.0 * b_hat.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag::ANALYSIS, 0x9b01]));
    let points = probe_points(problem.dual_dim(), hi, V_POINTS, &mut rng);
    let v = V_INFLATION * max_gradient_norm(problem, &points, n_samples, seed)?;
    let l_hat = max_lipschitz_ratio(problem, hi, n_samples, &mut rng, seed)?;
    Ok(ConstantEstimates { v, b_hat, l_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_synchronous;
    use crate::problems::{num_problem, quadratic_problem, NumSpec, QuadraticSpec};
    use crate::step::StepSchedule;

    #[test]
    fn quadratic_constants_match_reachable_sup() {
        let spec = QuadraticSpec::new(vec![1.0, 2.0, 3.0], 3.0, 5.0, 0.0).unwrap();
        let p = quadratic_problem(&spec).unwrap();
        let pilot = run_synchronous(&p, &StepSchedule::constant(0.05).unwrap(), 2_000, 1).unwrap();
        let c = estimate_v_b_l(&p, &pilot, 200, 1).unwrap();
        // best responses a_i - lambda/2 for lambda >= 0 stay in [0, 3]; sup |1 - x| = 2
        assert!(c.v >= 2.0 * 1.05 - 1e-12 && c.v <= 2.0 * 1.10, "{c:?}");
        assert!((c.b_hat - 2.0).abs() < 0.2, "{c:?}");
        assert!((c.l_hat - 0.5).abs() < 1e-9, "{c:?}");
        assert_eq!(c, estimate_v_b_l(&p, &pilot, 200, 1).unwrap());
    }

    #[test]
    fn num_estimate_is_dominated_by_declared_bound() {
        let spec = NumSpec::desk(3);
        let p = num_problem(&spec).unwrap();
        let pilot = run_synchronous(&p, &StepSchedule::constant(0.1).unwrap(), 2_000, 2).unwrap();
        let c = estimate_v_b_l(&p, &pilot, 500, 2).unwrap();
        assert!(c.v / V_INFLATION <= spec.gradient_bound(), "{c:?}");
        assert!(c.v > 0.0 && c.l_hat.is_finite() && c.b_hat > 0.0);
    }
}
