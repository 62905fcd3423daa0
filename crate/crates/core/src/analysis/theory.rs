//! Constants and finite-horizon bounds of the convergence theorems.

use serde::{Deserialize, Serialize};

use crate::step::StepSchedule;

/// Inputs of the bounds; all nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub k: usize,
    /// Gradient bound, the largest per-node bound.
    pub v: f64,
    pub tau: u64,
    /// Bound on the initial distance to an optimal multiplier.
    pub b0: f64,
    /// Bound on the mean multiplier norm.
    pub b: f64,
    /// Lipschitz constant of the node dual gradients.
    pub l: f64,
    pub epsilon: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualConstants {
    pub c1: f64,
    pub c2: f64,
    pub c2_prime: f64,
    pub c_of_tau: f64,
}

/// `C1 = K V^2`, `C2 = K V^2 (K - 1)`, `C2' = 4 K^2 V^2`, `C(tau) = C1 + C2 + tau C2'`.
pub fn theory_constants_c(k: usize, v: f64, tau: u64) -> DualConstants {
    let k = k as f64;
    let v2 = v * v;
    let c1 = k * v2;
    let c2 = k * v2 * (k - 1.0);
    let c2_prime = 4.0 * k * k * v2;
    DualConstants {
        c1,
        c2,
        c2_prime,
        c_of_tau: c1 + c2 + tau as f64 * c2_prime,
    }
}

/// Constant-step dual bound: `((eps C(tau) + eta) / 2, B0^2 / (eps eta))`.
pub fn theorem1_bound(epsilon: f64, eta: f64, c_of_tau: f64, b0: f64) -> (f64, f64) {
    ((epsilon * c_of_tau + eta) / 2.0, b0 * b0 / (epsilon * eta))
}

/// Finite-horizon bound on `min_{t<=T} E D(lambda_t) - D` for any
/// non-increasing step sequence:
/// `(B0^2 + C1 sum eps_t^2 + (C2 + tau C2') sum eps_{[t-tau]+}^2) / (2 sum eps_t)`,
/// with `eps_{[t-tau]+} = eps_1` for `t <= tau`.
pub fn dual_gap_bound(step: &StepSchedule, horizon: u64, c: &DualConstants, tau: u64, b0: f64) -> f64 {
    let (mut s1, mut s2, mut s_lag) = (0.0, 0.0, 0.0);
    for t in 1..=horizon {
        let e = step.at(t);
        s1 += e;
        s2 += e * e;
        let lagged = if t <= tau { step.at(1) } else { step.at(t - tau) };
        s_lag += lagged * lagged;
    }
    (b0 * b0 + c.c1 * s2 + (c.c2 + tau as f64 * c.c2_prime) * s_lag) / (2.0 * s1)
}

/// Primal gap bound `eps (C3 + tau C4)`, `C3 = V^2 K^2 / 2`, `C4 = K^2 B L V + 2 K^2 V^2`.
pub fn theorem2_bound(epsilon: f64, tau: u64, k: usize, v: f64, b: f64, l: f64) -> f64 {
    let k2 = (k * k) as f64;
    let c3 = v * v * k2 / 2.0;
    let c4 = k2 * b * l * v + 2.0 * k2 * v * v;
    epsilon * (c3 + tau as f64 * c4)
}

impl TheoryConstants {
    pub fn dual(&self) -> DualConstants {
        theory_constants_c(self.k, self.v, self.tau)
    }

    pub fn theorem1(&self) -> (f64, f64) {
        theorem1_bound(self.epsilon, self.eta, self.dual().c_of_tau, self.b0)
    }

    pub fn theorem2(&self) -> f64 {
        theorem2_bound(self.epsilon, self.tau, self.k, self.v, self.b, self.l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_examples() {
        let c = theory_constants_c(1, 1.0, 0);
        assert_eq!((c.c1, c.c2, c.c2_prime, c.c_of_tau), (1.0, 0.0, 4.0, 1.0));
        let c = theory_constants_c(10, 1.0, 5);
        assert_eq!((c.c1, c.c2, c.c2_prime, c.c_of_tau), (10.0, 90.0, 400.0, 2100.0));
        let c = theory_constants_c(2, 3.0, 1);
        assert_eq!((c.c1, c.c2, c.c2_prime, c.c_of_tau), (18.0, 18.0, 144.0, 180.0));
    }

    #[test]
    fn theorem1_examples() {
        let (gap, t) = theorem1_bound(0.1, 0.1, 2100.0, 1.0);
        assert_relative_eq!(gap, 105.05, max_relative = 1e-12);
        assert_relative_eq!(t, 100.0, max_relative = 1e-12);
        let (gap, t) = theorem1_bound(0.1, 1e-9, 2100.0, 1.0);
        assert_relative_eq!(gap, 105.0, max_relative = 1e-9);
        assert!(t > 1e9);
    }

    #[test]
    fn theorem2_examples() {
        assert_relative_eq!(theorem2_bound(0.3, 0, 1, 1.0, 7.0, 7.0), 0.15, max_relative = 1e-15);
        // C3 = 18, C4 = 9*5*1*2 + 2*9*4 = 162
        assert_relative_eq!(theorem2_bound(0.05, 2, 3, 2.0, 5.0, 1.0), 0.05 * 342.0, max_relative = 1e-15);
        assert_eq!(theorem2_bound(0.0, 4, 3, 2.0, 5.0, 1.0), 0.0);
    }

    #[test]
    fn constant_step_gap_bound_matches_closed_form() {
        let c = theory_constants_c(3, 2.0, 2);
        let step = StepSchedule::constant(0.05).unwrap();
        let t = 1000;
        let expected = 4.0 / (2.0 * 0.05 * t as f64) + 0.05 / 2.0 * c.c_of_tau;
        assert_relative_eq!(dual_gap_bound(&step, t, &c, 2, 2.0), expected, max_relative = 1e-9);
    }

    #[test]
    fn diminishing_gap_bound_shrinks() {
        let c = theory_constants_c(3, 2.0, 10);
        let step = StepSchedule::power_decay(0.5, 0.6).unwrap();
        let a = dual_gap_bound(&step, 1_000, &c, 10, 2.0);
        let b = dual_gap_bound(&step, 100_000, &c, 10, 2.0);
        assert!(b < a);
    }
}
