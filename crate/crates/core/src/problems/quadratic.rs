//! Scalar-coupled quadratic problem with a closed-form dual.
//!
//! Node `i` maximizes `-(x - a_i)^2` over `[0, x_max]` subject to the shared
//! average constraint `sum_i E[b/K - x_i + n_i] >= 0`, with `n_i` uniform on
//! `[-noise_amp, noise_amp]`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OracleError, ProblemError};
use crate::problem::{Allocation, DeclaredBounds, NodeOracle, Problem, StateSample};
use crate::rng::state_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub a: Vec<f64>,
    pub b: f64,
    pub x_max: f64,
    #[serde(default)]
    pub noise_amp: f64,
}

impl QuadraticSpec {
    pub fn new(a: Vec<f64>, b: f64, x_max: f64, noise_amp: f64) -> Result<Self, ProblemError> {
        let spec = Self {
            a,
            b,
            x_max,
            noise_amp,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.a.is_empty() {
            return Err(ProblemError::NoNodes);
        }
        let bad = |m: &str| Err(ProblemError::InvalidSpec(m.into()));
        if !self.a.iter().all(|v| v.is_finite()) || !self.b.is_finite() {
            return bad("targets and budget must be finite");
        }
        let a_max = self.a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(self.x_max.is_finite() && self.x_max > a_max) {
            return bad("x_max must exceed every target");
        }
        if !(self.noise_amp.is_finite() && self.noise_amp >= 0.0) {
            return bad("noise_amp must be finite and nonnegative");
        }
        Ok(())
    }

    /// Share `b / K` of the budget carried by every node.
    pub fn share(&self) -> f64 {
        self.b / self.k() as f64
    }

    /// Bound on `|b/K - x + n|` over the box and noise support.
    pub fn gradient_bound(&self) -> f64 {
        let s = self.share();
        s.abs().max((self.x_max - s).abs()) + self.noise_amp
    }
}

/// `argmax_x -(x - a_i)^2 + lambda (b/K - x)` over `[0, x_max]`.
pub fn quad_best_response(spec: &QuadraticSpec, i: usize, lambda: f64) -> f64 {
    (spec.a[i] - lambda / 2.0).clamp(0.0, spec.x_max)
}

/// Exact dual function `D(lambda)`; the noise has zero mean and drops out.
pub fn quad_dual_value(spec: &QuadraticSpec, lambda: f64) -> f64 {
    let s = spec.share();
    (0..spec.k())
        .map(|i| {
            let x = quad_best_response(spec, i, lambda);
            -(x - spec.a[i]).powi(2) + lambda * (s - x)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSolution {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
}

/// Primal and dual optimum from the KKT conditions.
pub fn quad_analytic_solution(spec: &QuadraticSpec) -> Result<QuadSolution, ProblemError> {
    spec.validate()?;
    let k = spec.k() as f64;
    let total = |lambda: f64| -> f64 {
        (0..spec.k())
            .map(|i| quad_best_response(spec, i, lambda))
            .sum()
    };
    let lambda = if total(0.0) <= spec.b {
        0.0
    } else if spec.b < 0.0 {
        return Err(ProblemError::InvalidSpec(
            "negative budget cannot be met with nonnegative allocations".into(),
        ));
    } else {
        let interior = 2.0 * (spec.a.iter().sum::<f64>() - spec.b) / k;
        let is_interior = spec
            .a
            .iter()
            .all(|&a| a - interior / 2.0 >= 0.0 && a - interior / 2.0 <= spec.x_max);
        if is_interior {
            interior
        } else {
            // total is continuous and non-increasing in lambda
            let (mut lo, mut hi) = (0.0, 1.0);
            while total(hi) > spec.b {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) > spec.b {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };
    let x: Vec<f64> = (0..spec.k())
        .map(|i| quad_best_response(spec, i, lambda))
        .collect();
    let objective = x
        .iter()
        .zip(&spec.a)
        .map(|(x, a)| -(x - a).powi(2))
        .sum();
    Ok(QuadSolution {
        x,
        lambda,
        objective,
    })
}

#[derive(Clone, Debug)]
pub struct QuadraticNode {
    node: usize,
    a: f64,
    share: f64,
    x_max: f64,
    noise_amp: f64,
    bound: f64,
}

impl QuadraticNode {
    pub fn new(spec: &QuadraticSpec, node: usize) -> Self {
        Self {
            node,
            a: spec.a[node],
            share: spec.share(),
            x_max: spec.x_max,
            noise_amp: spec.noise_amp,
            bound: spec.gradient_bound(),
        }
    }
}

impl NodeOracle for QuadraticNode {
    fn dual_dim(&self) -> usize {
        1
    }

    fn sample_state(&self, slot: u64, seed: u64) -> StateSample {
        let n = if self.noise_amp > 0.0 {
            state_rng(seed, self.node, slot).random_range(-self.noise_amp..=self.noise_amp)
        } else {
            0.0
        };
        StateSample {
            node: self.node,
            slot,
            value: vec![n],
        }
    }

    fn best_response(&self, lambda: &[f64], state: &StateSample) -> Result<Allocation, OracleError> {
        let l = lambda[0];
        if !(l >= 0.0) {
            return Err(OracleError::NoBestResponse(format!("multiplier {l}")));
        }
        Ok(Allocation {
            node: self.node,
            slot: state.slot,
            x: vec![(self.a - l / 2.0).clamp(0.0, self.x_max)],
            p: Vec::new(),
            skipped: false,
        })
    }

    fn gradient(&self, allocation: &Allocation, state: &StateSample) -> Vec<f64> {
        vec![self.share - allocation.x[0] + state.value[0]]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        -(x[0] - self.a).powi(2)
    }

    fn declared_bounds(&self) -> DeclaredBounds {
        DeclaredBounds {
            gradient: Some(self.bound),
            lipschitz: Some(0.5),
        }
    }
}

pub fn quadratic_problem(spec: &QuadraticSpec) -> Result<Problem, ProblemError> {
    spec.validate()?;
    Problem::new(
        (0..spec.k())
            .map(|i| Arc::new(QuadraticNode::new(spec, i)) as Arc<dyn NodeOracle>)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::lagrangian_term;
    use approx::assert_abs_diff_eq;

    fn spec(a: &[f64], b: f64) -> QuadraticSpec {
        QuadraticSpec::new(a.to_vec(), b, 5.0, 0.0).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let s = spec(&[2.0], 1.0);
        assert_eq!(quad_best_response(&s, 0, 0.0), 2.0);
        assert_eq!(quad_best_response(&s, 0, 2.0), 1.0);
        let s = spec(&[1.0], 1.0);
        assert_eq!(quad_best_response(&s, 0, 10.0), 0.0);
    }

    #[test]
    fn best_response_beats_grid() {
        let s = spec(&[1.3, 2.7], 2.0);
        for lambda in [0.0, 0.4, 1.9, 3.3, 7.0] {
            for i in 0..2 {
                let score = |x: f64| -(x - s.a[i]).powi(2) + lambda * (s.share() - x);
                let best = quad_best_response(&s, i, lambda);
                let grid = (0..=5000)
                    .map(|j| score(j as f64 * s.x_max / 5000.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(score(best) >= grid - 1e-12);
            }
        }
    }

    #[test]
    fn lagrangian_term_examples() {
        let s = spec(&[1.0], 1.0);
        let node = QuadraticNode::new(&s, 0);
        let state = node.sample_state(1, 0);
        let alloc = |x: f64| Allocation {
            node: 0,
            slot: 1,
            x: vec![x],
            p: vec![],
            skipped: false,
        };
        assert_eq!(lagrangian_term(&node, &[0.0], &alloc(1.0), &state).unwrap(), 0.0);
        assert_eq!(lagrangian_term(&node, &[2.0], &alloc(0.0), &state).unwrap(), 1.0);
        assert!(lagrangian_term(&node, &[2.0, 1.0], &alloc(0.0), &state).is_err());
    }

    #[test]
    fn analytic_solutions() {
        let sol = quad_analytic_solution(&spec(&[1.0, 2.0, 3.0], 3.0)).unwrap();
        assert_abs_diff_eq!(sol.lambda, 2.0, epsilon = 1e-12);
        assert_eq!(sol.x, vec![0.0, 1.0, 2.0]);
        assert_abs_diff_eq!(sol.objective, -3.0, epsilon = 1e-12);

        let sol = quad_analytic_solution(&spec(&[1.0, 1.0], 2.0)).unwrap();
        assert_eq!((sol.lambda, sol.objective), (0.0, 0.0));
        assert_eq!(sol.x, vec![1.0, 1.0]);

        let sol = quad_analytic_solution(&spec(&[2.0, 2.0], 2.0)).unwrap();
        assert_abs_diff_eq!(sol.lambda, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_active_solution_uses_bisection() {
        // a_1 - lambda/2 would go negative at the interior formula
        let s = spec(&[0.2, 3.0, 3.0], 3.0);
        let sol = quad_analytic_solution(&s).unwrap();
        assert_abs_diff_eq!(sol.x.iter().sum::<f64>(), 3.0, epsilon = 1e-9);
        assert_eq!(sol.x[0], 0.0);
        assert_abs_diff_eq!(sol.lambda, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn strong_duality_holds() {
        for (a, b) in [(vec![1.0, 2.0, 3.0], 3.0), (vec![2.0, 2.0], 2.0), (vec![0.2, 3.0, 3.0], 3.0)] {
            let s = spec(&a, b);
            let sol = quad_analytic_solution(&s).unwrap();
            assert_abs_diff_eq!(quad_dual_value(&s, sol.lambda), sol.objective, epsilon = 1e-9);
            // dual is minimized at lambda*
            for d in [-0.3, 0.3] {
                let l = (sol.lambda + d).max(0.0);
                assert!(quad_dual_value(&s, l) >= sol.objective - 1e-12);
            }
        }
    }

    #[test]
    fn states_are_reproducible_and_bounded() {
        let s = QuadraticSpec::new(vec![1.0, 2.0], 2.0, 4.0, 0.1).unwrap();
        let node = QuadraticNode::new(&s, 1);
        assert_eq!(node.sample_state(9, 3), node.sample_state(9, 3));
        assert_ne!(node.sample_state(9, 3), node.sample_state(10, 3));
        for t in 1..1000 {
            assert!(node.sample_state(t, 3).value[0].abs() <= 0.1);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuadraticSpec::new(vec![], 1.0, 2.0, 0.0).is_err());
        assert!(QuadraticSpec::new(vec![3.0], 1.0, 2.0, 0.0).is_err());
        assert!(QuadraticSpec::new(vec![1.0], 1.0, 2.0, -0.1).is_err());
    }
}
