//! Per-base-station beamformer design.
//!
//! The SINR constraint is imposed as `sqrt(gamma) ||(h^H w_k)_{k != j}, I, sigma|| <= Re(h^H w_j)`.
//! Requiring the real part rather than the modulus loses nothing: every
//! other term is invariant to the phase of `w_j`, so any solution can be
//! rotated onto the real axis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::network::{gain, inner, power, CellNetwork};
use super::socp::{Cone, Socp, SocpOutcome, SolverParams};

/// Radius of the ball the variables are confined to; keeps both barrier
/// phases bounded and is far outside any optimal beamformer.
const BALL: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsSolution {
    /// Beamformers of the base station's users, in `users_of` order.
    pub w: Vec<Vec<f64>>,
    /// Interference budgets `I_j` of the same users.
    pub interference: Vec<f64>,
    pub power: f64,
    /// Value of the subproblem objective at the returned point.
    pub objective: f64,
    /// False when the Newton budget ran out; the point is still feasible.
    pub converged: bool,
}

/// How the interference term of the SINR constraint is treated.
#[derive(Clone, Copy, Debug)]
enum Interference<'a> {
    /// Optimized against the multipliers of all users.
    Priced(&'a [f64]),
    /// Fixed at `rho^2 sum_{m != i} card(U_m)`.
    Threshold,
}

struct Layout {
    n2: usize,
    own: Vec<usize>,
    others: Vec<usize>,
    priced: bool,
    /// Other users whose leakage carries a positive price and gets an epigraph variable.
    epigraph: Vec<usize>,
}

impl Layout {
    fn w(&self, q: usize) -> usize {
        self.n2 * q
    }
    fn i_var(&self, q: usize) -> usize {
        self.n2 * self.own.len() + q
    }
    fn s_var(&self, e: usize, q: usize) -> usize {
        self.n2 * self.own.len() + if self.priced { self.own.len() } else { 0 } + e * self.own.len() + q
    }
    fn dim(&self) -> usize {
        self.s_var(self.epigraph.len(), 0)
    }
}

/// Rows `(re, im)` of `h^H w` as linear forms in the block of `w`.
fn rows(h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(h.len());
    let mut im = Vec::with_capacity(h.len());
    for k in (0..h.len()).step_by(2) {
        re.extend([h[k], h[k + 1]]);
        im.extend([-h[k + 1], h[k]]);
    }
    (re, im)
}

fn build(network: &CellNetwork, i: usize, channels: &[f64], mode: Interference) -> (Socp, Layout) {
    let own = network.users_of(i);
    let others: Vec<usize> = (0..network.user_count()).filter(|j| network.users[*j] != i).collect();
    let (priced, epigraph) = match mode {
        Interference::Priced(lambda) => (true, others.iter().copied().filter(|&j| lambda[j] > 0.0).collect()),
        Interference::Threshold => (false, Vec::new()),
    };
    let lay = Layout {
        n2: 2 * network.antennas[i],
        own,
        others,
        priced,
        epigraph,
    };
    let n = lay.dim();
    let m = lay.own.len();
    let mut quad = DMatrix::zeros(n, n);
    for k in 0..lay.n2 * m {
        quad[(k, k)] = 2.0;
    }
    let mut lin = DVector::zeros(n);
    if let Interference::Priced(lambda) = mode {
        for (q, &j) in lay.own.iter().enumerate() {
            lin[lay.i_var(q)] = -lambda[j];
        }
        for (e, &j) in lay.epigraph.iter().enumerate() {
            for q in 0..m {
                lin[lay.s_var(e, q)] = lambda[j];
            }
        }
    }
    let mut cones = Vec::new();
    let fixed = network.rho * (network.foreign_users(i) as f64).sqrt();
    for (q, &j) in lay.own.iter().enumerate() {
        let h = network.link(channels, i, j);
        let (re, im) = rows(h);
        let sg = network.gamma[j].sqrt();
        let extra = if lay.priced { 2 } else { 3 };
        let mut a = DMatrix::zeros(2 * (m - 1) + extra, n);
        let mut b = DVector::zeros(a.nrows());
        let mut r = 0;
        for k in (0..m).filter(|&k| k != q) {
            for c in 0..lay.n2 {
                a[(r, lay.w(k) + c)] = sg * re[c];
                a[(r + 1, lay.w(k) + c)] = sg * im[c];
            }
            r += 2;
        }
        if lay.priced {
            a[(r, lay.i_var(q))] = sg;
        } else {
            b[r] = sg * fixed;
        }
        b[a.nrows() - 1] = sg * network.sigma2.sqrt();
        let mut c = DVector::zeros(n);
        for col in 0..lay.n2 {
            c[lay.w(q) + col] = re[col];
        }
        cones.push(Cone { a, b, c, d: 0.0 });
    }
    for &j in &lay.others {
        let h = network.link(channels, i, j);
        let (re, im) = rows(h);
        let e = lay.epigraph.iter().position(|&u| u == j);
        for q in 0..m {
            let mut a = DMatrix::zeros(2, n);
            for col in 0..lay.n2 {
                a[(0, lay.w(q) + col)] = re[col];
                a[(1, lay.w(q) + col)] = im[col];
            }
            match e {
                Some(e) => {
                    let s = lay.s_var(e, q);
                    let mut c = DVector::zeros(n);
                    c[s] = 1.0;
                    cones.push(Cone {
                        a,
                        b: DVector::zeros(2),
                        c,
                        d: 0.0,
                    });
                    let mut cap = DVector::zeros(n);
                    cap[s] = -1.0;
                    cones.push(Cone {
                        a: DMatrix::zeros(0, n),
                        b: DVector::zeros(0),
                        c: cap,
                        d: network.rho,
                    });
                }
                None => cones.push(Cone {
                    a,
                    b: DVector::zeros(2),
                    c: DVector::zeros(n),
                    d: network.rho,
                }),
            }
        }
    }
    cones.push(Cone {
        a: DMatrix::identity(n, n),
        b: DVector::zeros(n),
        c: DVector::zeros(n),
        d: BALL,
    });
    (Socp { quad, lin, cones }, lay)
}

/// Largest `I` with `|h^H w_j|^2 >= gamma (intra + I^2 + sigma^2)`, clamped at zero.
pub fn interference_budget(network: &CellNetwork, i: usize, channels: &[f64], w: &[Vec<f64>], q: usize) -> f64 {
    let own = network.users_of(i);
    let j = own[q];
    let h = network.link(channels, i, j);
    let intra: f64 = (0..own.len()).filter(|&k| k != q).map(|k| gain(h, &w[k])).sum();
    (gain(h, &w[q]) / network.gamma[j] - intra - network.sigma2).max(0.0).sqrt()
}

/// `sum_{n in U_i} |h_ij^H w_n|` for a user `j` outside cell `i`.
pub fn leakage(network: &CellNetwork, i: usize, channels: &[f64], w: &[Vec<f64>], j: usize) -> f64 {
    let h = network.link(channels, i, j);
    w.iter()
        .map(|wn| {
            let (re, im) = inner(h, wn);
            re.hypot(im)
        })
        .sum()
}

fn finish(network: &CellNetwork, i: usize, channels: &[f64], lay: &Layout, x: &[f64], converged: bool, lambda: Option<&[f64]>) -> BsSolution {
    let m = lay.own.len();
    let w: Vec<Vec<f64>> = (0..m).map(|q| x[lay.w(q)..lay.w(q) + lay.n2].to_vec()).collect();
    let interference: Vec<f64> = match lambda {
        Some(_) => (0..m).map(|q| interference_budget(network, i, channels, &w, q)).collect(),
        None => vec![network.rho * (network.foreign_users(i) as f64).sqrt(); m],
    };
    let pw: f64 = w.iter().map(|v| power(v)).sum();
    let objective = match lambda {
        Some(l) => {
            pw - lay.own.iter().zip(&interference).map(|(&j, v)| l[j] * v).sum::<f64>()
                + lay
                    .others
                    .iter()
                    .map(|&j| l[j] * leakage(network, i, channels, &w, j))
                    .sum::<f64>()
        }
        None => pw,
    };
    BsSolution {
        w,
        interference,
        power: pw,
        objective,
        converged,
    }
}

fn idle() -> BsSolution {
    BsSolution {
        w: Vec::new(),
        interference: Vec::new(),
        power: 0.0,
        objective: 0.0,
        converged: true,
    }
}

/// Beamformers and interference budgets of base station `i` minimizing
/// `sum_{j in U_i} (||w_j||^2 - lambda_j I_j) + sum_{j not in U_i} lambda_j sum_n |h_ij^H w_n|`
/// subject to the SINR constraints and the leakage caps. `None` when no
/// beamformer meets the constraints.
pub fn solve_bs_subproblem(
    network: &CellNetwork,
    i: usize,
    lambda: &[f64],
    channels: &[f64],
    params: &SolverParams,
) -> Option<BsSolution> {
    if network.users_of(i).is_empty() {
        return Some(idle());
    }
    let (socp, lay) = build(network, i, channels, Interference::Priced(lambda));
    match socp.solve(params) {
        SocpOutcome::Solved { x, .. } => Some(finish(network, i, channels, &lay, &x, true, Some(lambda))),
        SocpOutcome::Budget { x, .. } => Some(finish(network, i, channels, &lay, &x, false, Some(lambda))),
        SocpOutcome::Infeasible => None,
    }
}

/// Uncoordinated design: the interference term is the fixed threshold
/// `rho^2 sum_{m != i} card(U_m)` and every leakage is capped by `rho`.
pub fn solve_uncoordinated(network: &CellNetwork, i: usize, channels: &[f64], params: &SolverParams) -> Option<BsSolution> {
    if network.users_of(i).is_empty() {
        return Some(idle());
    }
    let (socp, lay) = build(network, i, channels, Interference::Threshold);
    match socp.solve(params) {
        SocpOutcome::Solved { x, .. } => Some(finish(network, i, channels, &lay, &x, true, None)),
        SocpOutcome::Budget { x, .. } => Some(finish(network, i, channels, &lay, &x, false, None)),
        SocpOutcome::Infeasible => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: &[f64]) -> Vec<f64> {
        v.iter().flat_map(|&x| [x, 0.0]).collect()
    }

    #[test]
    fn single_user_gets_matched_filter() {
        let net = CellNetwork::uniform(1, 2, 1, 10.0, 1.0, 1.65);
        let h = vec![0.3, -0.4, 1.1, 0.2];
        let sol = solve_bs_subproblem(&net, 0, &[0.0], &h, &SolverParams::default()).unwrap();
        let expected = 10.0 / power(&h);
        assert!((sol.power - expected).abs() < 1e-6 * expected, "{sol:?}");
        assert!(sol.interference[0] < 1e-3);
        assert!(sol.converged);
    }

    #[test]
    fn scalar_unit_case() {
        let net = CellNetwork::uniform(1, 1, 1, 1.0, 1.0, 1.0);
        let sol = solve_bs_subproblem(&net, 0, &[0.0], &real(&[1.0]), &SolverParams::default()).unwrap();
        assert!((sol.power - 1.0).abs() < 1e-6);
        assert!((sol.w[0][0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn solves_are_deterministic() {
        let net = CellNetwork::uniform(3, 2, 1, 10.0, 1.0, 1.65);
        let ch = net.sample_channels(0, 3, 1);
        let l = [0.4, 0.7, 0.2];
        let a = solve_bs_subproblem(&net, 0, &l, &ch, &SolverParams::default());
        assert_eq!(a, solve_bs_subproblem(&net, 0, &l, &ch, &SolverParams::default()));
    }

    #[test]
    fn leakage_caps_and_sinr_hold() {
        let net = CellNetwork::uniform(3, 3, 1, 10.0, 1.0, 1.65);
        let params = SolverParams::default();
        let mut solved = 0;
        for t in 1..=40 {
            let ch = net.sample_channels(1, t, 2);
            if let Some(sol) = solve_bs_subproblem(&net, 1, &[0.5, 0.3, 0.8], &ch, &params) {
                solved += 1;
                for j in [0, 2] {
                    assert!(leakage(&net, 1, &ch, &sol.w, j) <= net.rho + 1e-6);
                }
                let h = net.link(&ch, 1, 1);
                let lhs = gain(h, &sol.w[0]);
                let rhs = 10.0 * (sol.interference[0].powi(2) + 1.0);
                assert!(lhs >= rhs * (1.0 - 1e-9));
            }
        }
        assert!(solved > 0);
    }

    #[test]
    fn tiny_cap_is_infeasible() {
        // N = 1: the only beam direction leaks into the other cell's user
        let net = CellNetwork::uniform(2, 1, 1, 10.0, 1.0, 1e-3);
        let ch = [real(&[1.0]), real(&[1.0])].concat();
        assert!(solve_bs_subproblem(&net, 0, &[0.0, 0.0], &ch, &SolverParams::default()).is_none());
        assert!(solve_uncoordinated(&net, 0, &ch, &SolverParams::default()).is_none());
    }
}
