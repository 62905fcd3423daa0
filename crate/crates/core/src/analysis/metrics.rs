//! Trace-derived quantities: ergodic averages, feasibility gaps, fits.

use serde::{Deserialize, Serialize};

use super::dual::DualPoint;
use crate::engine::RunTrace;
use crate::problem::{norm, Problem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalAverage {
    /// Per node, the mean allocation over slots `1..=T`.
    pub x_bar: Vec<Vec<f64>>,
    /// `sum_i f_i(x_bar_i)`.
    pub objective: f64,
}

/// Ergodic average of the allocations over the first `t` slots.
pub fn running_primal_average(trace: &RunTrace, problem: &Problem, t: u64) -> PrimalAverage {
    assert!(t >= 1 && t <= trace.horizon, "average window outside the trace");
    let x_bar: Vec<Vec<f64>> = (0..trace.nodes)
        .map(|i| {
            let n = trace.x_dims[i];
            let mut acc = vec![0.0; n];
            for s in 1..=t {
                for (a, v) in acc.iter_mut().zip(trace.x_at(i, s)) {
                    *a += v;
                }
            }
            acc.into_iter().map(|a| a / t as f64).collect()
        })
        .collect();
    let objective = x_bar
        .iter()
        .enumerate()
        .map(|(i, x)| problem.node(i).objective(x))
        .sum();
    PrimalAverage { x_bar, objective }
}

/// `(1/T) sum_{t<=T}` of the summed gradients applied at each slot or cycle.
pub fn feasibility_gap(trace: &RunTrace, t: u64) -> Vec<f64> {
    assert!(t >= 1 && t <= trace.horizon, "window outside the trace");
    let mut acc = vec![0.0; trace.dim];
    for s in 1..=t {
        for (a, v) in acc.iter_mut().zip(trace.applied_at(s)) {
            *a += v;
        }
    }
    acc.into_iter().map(|a| a / t as f64).collect()
}

/// Feasibility gap at every slot, flattened `T x dim`.
pub fn feasibility_curve(trace: &RunTrace) -> Vec<f64> {
    let mut out = Vec::with_capacity(trace.applied.len());
    let mut acc = vec![0.0; trace.dim];
    for t in 1..=trace.horizon {
        for (a, v) in acc.iter_mut().zip(trace.applied_at(t)) {
            *a += v;
        }
        out.extend(acc.iter().map(|a| a / t as f64));
    }
    out
}

/// `(1/t) sum_{s<=t} series_s` for every `t`.
pub fn running_average(series: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Largest multiplier norm over the first and second half of the iterates `2..=T+1`.
pub fn dual_norm_halves(trace: &RunTrace) -> (f64, f64) {
    let norms: Vec<f64> = trace.lambda_iter().skip(1).map(norm).collect();
    let mid = norms.len() / 2;
    let max = |s: &[f64]| s.iter().cloned().fold(0.0, f64::max);
    (max(&norms[..mid]), max(&norms[mid..]))
}

pub fn max_dual_norm(trace: &RunTrace) -> f64 {
    trace.lambda_iter().map(norm).fold(0.0, f64::max)
}

/// First tracked iterate whose estimated gap to `d_star` is at most `threshold`.
pub fn first_within(points: &[DualPoint], d_star: f64, threshold: f64) -> Option<u64> {
    points
        .iter()
        .find(|p| p.estimate.mean - d_star <= threshold)
        .map(|p| p.t)
}

/// Least-squares fit `y ~ c / t` through the origin; returns `(c, R^2)`.
pub fn fit_inverse_t(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    (c, r2)
}

/// Mean and 95% normal half-width across runs.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_average_examples() {
        assert_eq!(running_average(&[2.0, 2.0, 2.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(running_average(&[0.0, 2.0, 0.0, 2.0])[3], 1.0);
    }

    #[test]
    fn inverse_fit_recovers_exact_law() {
        let ts: Vec<f64> = (1..20).map(|k| 100.0 * k as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 / t).collect();
        let (c, r2) = fit_inverse_t(&ts, &ys);
        assert!((c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let zeros = vec![0.0; ts.len()];
        assert_eq!(fit_inverse_t(&ts, &zeros), (0.0, 1.0));
    }

    #[test]
    fn confidence_interval() {
        let (m, h) = mean_ci95(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96).abs() < 1e-12);
    }
}
