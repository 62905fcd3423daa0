//! Network utility maximization over fading channels.
//!
//! Node `i` picks a rate `r` and a transmit power `p` after observing its
//! channel gain `h`. Two average constraints couple the nodes: every node's
//! rate is supported by its average capacity `E[log(1 + h p) / 2]`, and the
//! network's average power stays within `P_max`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OracleError, ProblemError};
use crate::problem::{Allocation, DeclaredBounds, NodeOracle, Problem, StateSample};
use crate::rng::{derive_seed, state_rng, tag};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// Exponential gain with the given mean, truncated to `[0, h_max]`.
    Exponential { mean: f64, h_max: f64 },
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::Exponential {
            mean: 1.0,
            h_max: 10.0,
        }
    }
}

impl ChannelModel {
    pub fn h_max(&self) -> f64 {
        match *self {
            ChannelModel::Exponential { h_max, .. } => h_max,
        }
    }

    /// Inverse-CDF draw from the truncated law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ChannelModel::Exponential { mean, h_max } => {
                let u: f64 = rng.random();
                let mass = -(-h_max / mean).exp_m1();
                -mean * (-u * mass).ln_1p()
            }
        }
    }

    fn validate(&self) -> Result<(), ProblemError> {
        match *self {
            ChannelModel::Exponential { mean, h_max } => {
                if mean.is_finite() && mean > 0.0 && h_max.is_finite() && h_max > 0.0 {
                    Ok(())
                } else {
                    Err(ProblemError::InvalidSpec(
                        "channel mean and h_max must be positive".into(),
                    ))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumSpec {
    /// Utility weights; `K = w.len()`.
    pub w: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    /// Per-slot power cap of each node.
    pub p_max: f64,
    /// Network average power budget.
    pub p_total: f64,
    #[serde(default)]
    pub channel: ChannelModel,
}

impl NumSpec {
    pub fn uniform(k: usize, r_min: f64, r_max: f64, p_max: f64, p_total: f64) -> Self {
        Self {
            w: vec![1.0; k],
            r_min,
            r_max,
            p_max,
            p_total,
            channel: ChannelModel::default(),
        }
    }

    /// Desk-scale instance: unit weights, `r` in `[0.01, 2]`, `p_max = 5` and
    /// an average budget of `0.2` per node. Power is scarce enough that the
    /// multipliers stay away from zero, which keeps `eps = 0.1` stable under
    /// delays of a few tens of slots.
    pub fn desk(k: usize) -> Self {
        Self::uniform(k, 0.01, 2.0, 5.0, 0.2 * k as f64)
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn power_share(&self) -> f64 {
        self.p_total / self.k() as f64
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.w.is_empty() {
            return Err(ProblemError::NoNodes);
        }
        let bad = |m: &str| Err(ProblemError::InvalidSpec(m.into()));
        if !self.w.iter().all(|w| w.is_finite() && *w > 0.0) {
            return bad("utility weights must be positive");
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return bad("rates must satisfy 0 < r_min < r_max");
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return bad("p_max must be positive");
        }
        if !(self.p_total.is_finite() && self.p_total >= 0.0) {
            return bad("p_total must be nonnegative");
        }
        self.channel.validate()
    }

    /// Closed-form bound on the gradient norm over the compact domain.
    pub fn gradient_bound(&self) -> f64 {
        let s = self.power_share();
        let rate = 0.5 * (self.channel.h_max() * self.p_max).ln_1p() + self.r_max;
        let power = s.abs().max((self.p_max - s).abs());
        rate.hypot(power)
    }
}

/// `argmax w log r - l1 r + l1 log(1 + h p)/2 - l2 p` over the box.
pub fn num_best_response(spec: &NumSpec, i: usize, lambda: &[f64], h: f64) -> (f64, f64) {
    let (l1, l2) = (lambda[0], lambda[1]);
    let r = if l1 > 0.0 {
        (spec.w[i] / l1).clamp(spec.r_min, spec.r_max)
    } else {
        spec.r_max
    };
    let p = if l1 == 0.0 {
        0.0
    } else if l2 == 0.0 {
        spec.p_max
    } else {
        (l1 / (2.0 * l2) - 1.0 / h).clamp(0.0, spec.p_max)
    };
    (r, p)
}

pub fn num_gradient(spec: &NumSpec, r: f64, p: f64, h: f64) -> [f64; 2] {
    [0.5 * (h * p).ln_1p() - r, spec.power_share() - p]
}

#[derive(Clone, Debug)]
pub struct NumNode {
    node: usize,
    spec: Arc<NumSpec>,
    bound: f64,
}

impl NumNode {
    pub fn new(spec: Arc<NumSpec>, node: usize) -> Self {
        let bound = spec.gradient_bound();
        Self { node, spec, bound }
    }
}

impl NodeOracle for NumNode {
    fn dual_dim(&self) -> usize {
        2
    }

    fn sample_state(&self, slot: u64, seed: u64) -> StateSample {
        let h = self.spec.channel.sample(&mut state_rng(seed, self.node, slot));
        StateSample {
            node: self.node,
            slot,
            value: vec![h],
        }
    }

    fn best_response(&self, lambda: &[f64], state: &StateSample) -> Result<Allocation, OracleError> {
        let h = state.value[0];
        if !(h > 0.0) {
            return Err(OracleError::InvalidState(format!("channel gain {h}")));
        }
        let (r, p) = num_best_response(&self.spec, self.node, lambda, h);
        Ok(Allocation {
            node: self.node,
            slot: state.slot,
            x: vec![r],
            p: vec![p],
            skipped: false,
        })
    }

    fn gradient(&self, allocation: &Allocation, state: &StateSample) -> Vec<f64> {
        num_gradient(&self.spec, allocation.x[0], allocation.p[0], state.value[0]).to_vec()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.spec.w[self.node] * x[0].ln()
    }

    fn declared_bounds(&self) -> DeclaredBounds {
        DeclaredBounds {
            gradient: Some(self.bound),
            lipschitz: None,
        }
    }
}

/// Strictly feasible point `r = r_min`, constant power `p`, and its margins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlaterReport {
    pub power: f64,
    pub rate_margin: f64,
    pub power_margin: f64,
    pub samples: usize,
}

impl SlaterReport {
    pub fn margin(&self) -> f64 {
        self.rate_margin.min(self.power_margin)
    }
}

/// Monte Carlo check that a Slater point exists. The rate margin is reduced
/// by three standard errors so a reported positive margin is conservative.
pub fn slater_check(spec: &NumSpec, samples: usize, seed: u64) -> Result<SlaterReport, ProblemError> {
    spec.validate()?;
    let p = (0.5 * spec.power_share()).min(spec.p_max);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag::ANALYSIS, 0x51a7]));
    let n = samples.max(2);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let c = 0.5 * (spec.channel.sample(&mut rng) * p).ln_1p();
        sum += c;
        sq += c * c;
    }
    let mean = sum / n as f64;
    let var = (sq / n as f64 - mean * mean).max(0.0);
    let se = (var / n as f64).sqrt();
    let report = SlaterReport {
        power: p,
        rate_margin: mean - 3.0 * se - spec.r_min,
        power_margin: spec.power_share() - p,
        samples: n,
    };
    if report.margin() > 0.0 {
        Ok(report)
    } else {
        Err(ProblemError::InvalidSpec(format!(
            "no strictly feasible point found: rate margin {:.4e}, power margin {:.4e}",
            report.rate_margin, report.power_margin
        )))
    }
}

pub fn num_problem(spec: &NumSpec) -> Result<Problem, ProblemError> {
    spec.validate()?;
    let shared = Arc::new(spec.clone());
    Problem::new(
        (0..spec.k())
            .map(|i| Arc::new(NumNode::new(shared.clone(), i)) as Arc<dyn NodeOracle>)
            .collect(),
    )
}
