//! Grid oracles for tiny instances.
//!
//! Both sides are solved on the same sample average: the dual grid minimizes
//! the sample-average dual over the Monte Carlo states, and the primal grid
//! maximizes over allocations that are feasible for the same states. Weak
//! duality then holds exactly between the two grid values, and their
//! difference measures only grid resolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dual::{mc_seed, SampledDual};
use crate::error::AnalysisError;
use crate::problem::Problem;
use crate::problems::{num_problem, quadratic_problem, NumSpec, QuadraticSpec};

const MAX_NODES: usize = 3;
const MAX_DIM: usize = 2;
const DUAL_POINTS: usize = 41;
const DUAL_LEVELS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    /// Best primal grid point, one entry per node.
    pub x: Vec<f64>,
    pub p_star: f64,
    pub lambda: Vec<f64>,
    pub d_star: f64,
    pub samples: usize,
}

impl BruteForce {
    pub fn gap(&self) -> f64 {
        self.d_star - self.p_star
    }

    pub fn weak_duality_holds(&self) -> bool {
        self.d_star >= self.p_star
    }

    /// `D* - P* <= rel_tol |P*|`, otherwise a resolution diagnostic.
    pub fn check_zero_gap(&self, rel_tol: f64) -> Result<(), AnalysisError> {
        let tolerance = rel_tol * self.p_star.abs().max(1e-12);
        if self.gap() <= tolerance {
            Ok(())
        } else {
            Err(AnalysisError::Resolution {
                gap: self.gap(),
                tolerance,
            })
        }
    }
}

fn check_size(k: usize, d: usize) -> Result<(), AnalysisError> {
    if k > MAX_NODES || d > MAX_DIM {
        Err(AnalysisError::TooLarge {
            max_nodes: MAX_NODES,
            max_dim: MAX_DIM,
        })
    } else {
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
        .collect()
}

/// Cartesian product of per-coordinate grids, first coordinate slowest.
fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Grid minimum of the sample-average dual over the orthant. The box grows
/// until the minimizer is interior in every coordinate, then is refined
/// around it.
pub fn dual_grid_min(problem: &Problem, n_samples: usize, seed: u64) -> Result<(Vec<f64>, f64), AnalysisError> {
    let d = problem.dual_dim();
    check_size(problem.len(), d)?;
    let sampled = SampledDual::new(problem, n_samples, seed);
    let eval = |lo: &[f64], hi: &[f64]| -> Result<(Vec<f64>, f64), AnalysisError> {
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| linspace(*l, *h, DUAL_POINTS))
            .collect();
        let values: Vec<(Vec<f64>, f64)> = product(&axes)
            .into_par_iter()
            .map(|l| {
                let v = sampled.value(&l)?;
                Ok((l, v))
            })
            .collect::<Result<_, AnalysisError>>()?;
        Ok(values
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is nonempty"))
    };
    let mut lo = vec![0.0; d];
    let mut hi = vec![1.0; d];
    let mut best = eval(&lo, &hi)?;
    for _ in 0..16 {
        let on_edge: Vec<usize> = (0..d).filter(|&j| best.0[j] >= hi[j]).collect();
        if on_edge.is_empty() {
            break;
        }
        for j in on_edge {
            hi[j] *= 4.0;
        }
        best = eval(&lo, &hi)?;
    }
    for _ in 0..DUAL_LEVELS {
        for j in 0..d {
            let cell = (hi[j] - lo[j]) / (DUAL_POINTS - 1) as f64;
            lo[j] = (best.0[j] - 2.0 * cell).max(0.0);
            hi[j] = best.0[j] + 2.0 * cell;
        }
        let next = eval(&lo, &hi)?;
        if next.1 <= best.1 {
            best = next;
        }
    }
    Ok(best)
}

/// Best point of `objective` over a product grid subject to `feasible`,
/// refined once around the coarse optimum.
fn primal_grid<O, F>(lo: &[f64], hi: &[f64], points: usize, objective: O, feasible: F) -> Option<(Vec<f64>, f64)>
where
    O: Fn(&[f64]) -> f64 + Sync,
    F: Fn(&[f64]) -> bool + Sync,
{
    let search = |lo: &[f64], hi: &[f64]| -> Option<(Vec<f64>, f64)> {
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| linspace(*l, *h, points))
            .collect();
        product(&axes)
            .into_par_iter()
            .filter(|x| feasible(x))
            .map(|x| {
                let v = objective(&x);
                (x, v)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
    };
    let coarse = search(lo, hi)?;
    let fine_lo: Vec<f64> = (0..lo.len())
        .map(|j| (coarse.0[j] - (hi[j] - lo[j]) / (points - 1) as f64).max(lo[j]))
        .collect();
    let fine_hi: Vec<f64> = (0..lo.len())
        .map(|j| (coarse.0[j] + (hi[j] - lo[j]) / (points - 1) as f64).min(hi[j]))
        .collect();
    match search(&fine_lo, &fine_hi) {
        Some(fine) if fine.1 >= coarse.1 => Some(fine),
        _ => Some(coarse),
    }
}

/// Quadratic oracle: grid over `[0, x_max]^K` against the sample-average
/// budget, and the dual grid over `lambda >= 0`.
pub fn brute_force_quadratic(
    spec: &QuadraticSpec,
    grid: usize,
    n_samples: usize,
    seed: u64,
) -> Result<BruteForce, AnalysisError> {
    let problem = quadratic_problem(spec)?;
    check_size(spec.k(), 1)?;
    let s = mc_seed(seed);
    let n = n_samples.max(1);
    let noise: f64 = problem
        .nodes()
        .iter()
        .map(|node| (0..n).map(|k| node.sample_state(k as u64 + 1, s).value[0]).sum::<f64>() / n as f64)
        .sum();
    let budget = spec.b + noise;
    if budget < 0.0 {
        return Err(AnalysisError::Infeasible(format!(
            "budget {budget:.4} is negative and allocations are nonnegative"
        )));
    }
    let k = spec.k();
    let (x, p_star) = primal_grid(
        &vec![0.0; k],
        &vec![spec.x_max; k],
        grid.max(2),
        |x| x.iter().zip(&spec.a).map(|(x, a)| -(x - a).powi(2)).sum(),
        |x| x.iter().sum::<f64>() <= budget + 1e-12,
    )
    .ok_or_else(|| AnalysisError::Infeasible("no grid point meets the budget".into()))?;
    let (lambda, d_star) = dual_grid_min(&problem, n, seed)?;
    Ok(BruteForce {
        x,
        p_star,
        lambda,
        d_star,
        samples: n,
    })
}

/// Water-filling over a fixed set of channel gains. Gains are sorted and
/// prefix sums kept so that a level is evaluated in `O(log n)`.
#[derive(Clone, Debug)]
pub struct WaterFill {
    gains: Vec<f64>,
    p_max: f64,
    /// Prefix sums over the sorted gains of `ln h`, `1/h` and `ln(1 + h p_max)`.
    ln_h: Vec<f64>,
    inv_h: Vec<f64>,
    full: Vec<f64>,
}

fn prefix(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(values.map(|v| {
            acc += v;
            acc
        }))
        .collect()
}

impl WaterFill {
    pub fn new(channels: &[f64], p_max: f64) -> Self {
        let mut gains = channels.to_vec();
        gains.sort_by(f64::total_cmp);
        let ln_h = prefix(gains.iter().map(|h| h.ln()));
        let inv_h = prefix(gains.iter().map(|h| 1.0 / h));
        let full = prefix(gains.iter().map(|h| (h * p_max).ln_1p()));
        Self {
            gains,
            p_max,
            ln_h,
            inv_h,
            full,
        }
    }

    /// Mean capacity and mean power at level `nu`, with `p = clamp(nu - 1/h, 0, p_max)`.
    pub fn at(&self, nu: f64) -> (f64, f64) {
        let n = self.gains.len();
        if nu <= 0.0 {
            return (0.0, 0.0);
        }
        // active: h > 1/nu; saturated: h >= 1/(nu - p_max)
        let lo = self.gains.partition_point(|&h| h * nu <= 1.0);
        let hi = if nu > self.p_max {
            let th = 1.0 / (nu - self.p_max);
            self.gains.partition_point(|&h| h < th).max(lo)
        } else {
            n
        };
        let mid = (hi - lo) as f64;
        let cap = 0.5 * (mid * nu.ln() + self.ln_h[hi] - self.ln_h[lo]) + 0.5 * (self.full[n] - self.full[hi]);
        let pow = nu * mid - (self.inv_h[hi] - self.inv_h[lo]) + self.p_max * (n - hi) as f64;
        (cap / n as f64, pow / n as f64)
    }

    pub fn max_rate(&self) -> f64 {
        0.5 * self.full[self.gains.len()] / self.gains.len() as f64
    }

    /// Least mean power supporting rate `r`, or `None` when even full power
    /// falls short. Water-filling is the minimizer; its level is found by
    /// bisection.
    pub fn min_power(&self, r: f64) -> Option<f64> {
        if r > self.max_rate() {
            return None;
        }
        if r <= 0.0 {
            return Some(0.0);
        }
        let (mut lo, mut hi) = (0.0, self.p_max + 1.0 / self.gains[0]);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.at(mid).0 >= r {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(self.at(hi).1)
    }
}

/// Least mean power supporting rate `r` over `channels`.
pub fn min_power_for_rate(channels: &[f64], r: f64, p_max: f64) -> Option<f64> {
    WaterFill::new(channels, p_max).min_power(r)
}

/// NUM oracle: rates on a grid over `[r_min, r_max]^K`, each node's power
/// policy the least-power water-filling for its rate on the sampled
/// channels; the dual grid over the orthant in `R^2`.
pub fn brute_force_num(spec: &NumSpec, grid: usize, n_samples: usize, seed: u64) -> Result<BruteForce, AnalysisError> {
    let problem = num_problem(spec)?;
    check_size(spec.k(), 2)?;
    let s = mc_seed(seed);
    let n = n_samples.max(1);
    let fills: Vec<WaterFill> = problem
        .nodes()
        .iter()
        .map(|node| {
            let ch: Vec<f64> = (0..n).map(|k| node.sample_state(k as u64 + 1, s).value[0]).collect();
            WaterFill::new(&ch, spec.p_max)
        })
        .collect();
    let mut floor = 0.0;
    for (i, fill) in fills.iter().enumerate() {
        floor += fill.min_power(spec.r_min).ok_or_else(|| {
            AnalysisError::Infeasible(format!(
                "node {i} cannot support r_min = {} even at full power",
                spec.r_min
            ))
        })?;
    }
    if floor > spec.p_total {
        return Err(AnalysisError::Infeasible(format!(
            "rates r_min need mean power {floor:.4} above the budget {}",
            spec.p_total
        )));
    }
    let k = spec.k();
    let (x, p_star) = primal_grid(
        &vec![spec.r_min; k],
        &vec![spec.r_max; k],
        grid.max(2),
        |r| r.iter().zip(&spec.w).map(|(r, w)| w * r.ln()).sum(),
        |r| {
            let mut total = 0.0;
            for (fill, &ri) in fills.iter().zip(r) {
                match fill.min_power(ri) {
                    Some(p) => total += p,
                    None => return false,
                }
            }
            total <= spec.p_total
        },
    )
    .ok_or_else(|| AnalysisError::Infeasible("no rate grid point meets the power budget".into()))?;
    let (lambda, d_star) = dual_grid_min(&problem, n, seed)?;
    Ok(BruteForce {
        x,
        p_star,
        lambda,
        d_star,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_filling_meets_rate_exactly() {
        let ch = [2.0, 0.5, 4.0, 1.0];
        let fill = WaterFill::new(&ch, 5.0);
        for nu in [0.1, 0.7, 1.5, 3.0, 5.6, 9.0] {
            let (cap, pow) = fill.at(nu);
            let direct: Vec<f64> = ch.iter().map(|h| (nu - 1.0 / h).clamp(0.0, 5.0)).collect();
            let dcap = direct.iter().zip(&ch).map(|(p, h)| 0.5 * (h * p).ln_1p()).sum::<f64>() / 4.0;
            assert!((cap - dcap).abs() < 1e-12 && (pow - direct.iter().sum::<f64>() / 4.0).abs() < 1e-12);
        }
        let p = min_power_for_rate(&ch, 0.3, 5.0).unwrap();
        assert!(p > 0.0);
        assert!(min_power_for_rate(&ch, 10.0, 5.0).is_none());
        assert_eq!(min_power_for_rate(&ch, 0.0, 5.0), Some(0.0));
        // a uniform allocation with the same mean power cannot do better
        let uniform: f64 = ch.iter().map(|h| 0.5 * (h * p).ln_1p()).sum::<f64>() / 4.0;
        assert!(uniform <= 0.3 + 1e-9);
    }

    #[test]
    fn noise_free_quadratic_matches_kkt() {
        let spec = QuadraticSpec::new(vec![1.0, 2.0, 3.0], 3.0, 5.0, 0.0).unwrap();
        let bf = brute_force_quadratic(&spec, 201, 10, 0).unwrap();
        assert!((bf.p_star + 3.0).abs() < 1e-9, "{bf:?}");
        assert!((bf.lambda[0] - 2.0).abs() < 1e-3, "{bf:?}");
        assert!(bf.weak_duality_holds());
        assert!(bf.gap() < 1e-5);
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let spec = QuadraticSpec::new(vec![1.0; 4], 3.0, 5.0, 0.0).unwrap();
        assert!(matches!(
            brute_force_quadratic(&spec, 11, 10, 0),
            Err(AnalysisError::TooLarge { .. })
        ));
    }
}
