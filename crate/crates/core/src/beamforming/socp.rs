//! Small dense second-order cone programs by a log-barrier Newton method.
//!
//! minimize `x' P x / 2 + p' x` subject to `||A_k x + b_k|| <= c_k' x + d_k`.

use nalgebra::{DMatrix, DVector};

/// One cone `||a x + b|| <= c' x + d`. An empty `a` gives the half-space `c' x + d >= 0`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl Cone {
    /// `v^2 - ||u||^2` and `v` at `x`; `x` is interior iff both are positive.
    fn slack(&self, x: &DVector<f64>) -> (f64, f64, DVector<f64>) {
        let u = &self.a * x + &self.b;
        let v = self.c.dot(x) + self.d;
        (v * v - u.norm_squared(), v, u)
    }

    fn interior(&self, x: &DVector<f64>) -> bool {
        let (q, v, _) = self.slack(x);
        if self.a.nrows() == 0 {
            v > 0.0
        } else {
            v > 0.0 && q > 0.0
        }
    }

    fn barrier_value(&self, x: &DVector<f64>) -> f64 {
        let (q, v, _) = self.slack(x);
        if self.a.nrows() == 0 {
            -v.ln()
        } else {
            -q.ln()
        }
    }

    /// Adds the barrier gradient and Hessian at `x`; returns the barrier value.
    fn accumulate(&self, x: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> f64 {
        let (q, v, u) = self.slack(x);
        if self.a.nrows() == 0 {
            // -log v
            *grad -= &self.c / v;
            hess.ger(1.0 / (v * v), &self.c, &self.c, 1.0);
            return -v.ln();
        }
        // -log(v^2 - |u|^2)
        let dq = &self.c * (2.0 * v) - self.a.transpose() * &u * 2.0;
        *grad -= &dq / q;
        hess.ger(1.0 / (q * q), &dq, &dq, 1.0);
        hess.ger(-2.0 / q, &self.c, &self.c, 1.0);
        *hess += self.a.transpose() * &self.a * (2.0 / q);
        -q.ln()
    }

    /// Barrier degree.
    fn degree(&self) -> f64 {
        if self.a.nrows() == 0 {
            1.0
        } else {
            2.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct Socp {
    pub quad: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub cones: Vec<Cone>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Bound on the barrier's duality gap at termination.
    pub tolerance: f64,
    /// Newton steps across both phases.
    pub max_newton: usize,
    /// Required slack of the strictly feasible start.
    pub feasibility_margin: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_newton: 500,
            feasibility_margin: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SocpOutcome {
    Solved { x: Vec<f64>, objective: f64 },
    Infeasible,
    /// Newton budget exhausted before the gap closed; `x` is feasible.
    Budget { x: Vec<f64>, objective: f64 },
}

impl Socp {
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.quad * x)) + self.lin.dot(x)
    }

    pub fn solve(&self, params: &SolverParams) -> SocpOutcome {
        let mut budget = params.max_newton;
        let Some(start) = self.phase_one(params, &mut budget) else {
            return SocpOutcome::Infeasible;
        };
        let (x, converged) = barrier(
            &self.quad,
            &self.lin,
            &self.cones,
            start,
            params.tolerance,
            &mut budget,
            |_| false,
        );
        let objective = self.objective(&x);
        let x = x.as_slice().to_vec();
        if converged {
            SocpOutcome::Solved { x, objective }
        } else {
            SocpOutcome::Budget { x, objective }
        }
    }

    /// Strictly feasible point from `min s` over `||A x + b|| <= c' x + d + s`.
    fn phase_one(&self, params: &SolverParams, budget: &mut usize) -> Option<DVector<f64>> {
        let n = self.dim();
        let x0 = DVector::zeros(n);
        if self.cones.iter().all(|c| c.interior(&x0)) {
            return Some(x0);
        }
        let s0 = self
            .cones
            .iter()
            .map(|c| {
                let (_, v, u) = c.slack(&x0);
                u.norm() - v
            })
            .fold(0.0, f64::max)
            + 1.0;
        let lift = |c: &Cone| -> Cone {
            let mut cc = c.c.clone().resize_vertically(n + 1, 0.0);
            cc[n] = 1.0;
            Cone {
                a: c.a.clone().resize_horizontally(n + 1, 0.0),
                b: c.b.clone(),
                c: cc,
                d: c.d,
            }
        };
        let mut cones: Vec<Cone> = self.cones.iter().map(lift).collect();
        // s >= -1 keeps the phase bounded
        let mut floor = DVector::zeros(n + 1);
        floor[n] = 1.0;
        cones.push(Cone {
            a: DMatrix::zeros(0, n + 1),
            b: DVector::zeros(0),
            c: floor,
            d: 1.0,
        });
        let mut lin = DVector::zeros(n + 1);
        lin[n] = 1.0;
        let mut start = DVector::zeros(n + 1);
        start[n] = s0;
        let margin = params.feasibility_margin;
        let (z, _) = barrier(
            &DMatrix::zeros(n + 1, n + 1),
            &lin,
            &cones,
            start,
            params.tolerance,
            budget,
            |z| z[n] < -margin,
        );
        let x = z.rows(0, n).into_owned();
        if z[n] < -margin && self.cones.iter().all(|c| c.interior(&x)) {
            Some(x)
        } else {
            None
        }
    }
}

const CENTERING_STEPS: usize = 50;

/// Barrier method from a strictly feasible `x`. Returns the final point and
/// whether the duality gap bound fell below `tolerance`.
fn barrier(
    quad: &DMatrix<f64>,
    lin: &DVector<f64>,
    cones: &[Cone],
    mut x: DVector<f64>,
    tolerance: f64,
    budget: &mut usize,
    stop: impl Fn(&DVector<f64>) -> bool,
) -> (DVector<f64>, bool) {
    let n = x.len();
    let degree: f64 = cones.iter().map(Cone::degree).sum();
    let mut t = 1.0;
    let value = |x: &DVector<f64>, t: f64| -> Option<f64> {
        if !cones.iter().all(|c| c.interior(x)) {
            return None;
        }
        let phi: f64 = cones.iter().map(|c| c.barrier_value(x)).sum();
        Some(t * (0.5 * x.dot(&(quad * x)) + lin.dot(x)) + phi)
    };
    loop {
        // centering
        for _ in 0..CENTERING_STEPS {
            if stop(&x) {
                return (x, true);
            }
            if *budget == 0 {
                return (x, false);
            }
            *budget -= 1;
            let mut g = quad * &x * t + lin * t;
            let mut h = quad * t;
            let mut f0: f64 = t * (0.5 * x.dot(&(quad * &x)) + lin.dot(&x));
            for c in cones {
                f0 += c.accumulate(&x, &mut g, &mut h);
            }
            let scale = h.diagonal().amax().max(1.0);
            for i in 0..n {
                h[(i, i)] += 1e-14 * scale;
            }
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match h.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => return (x, false),
                },
            };
            let decrement = -g.dot(&step);
            if !(decrement.is_finite()) || decrement / 2.0 <= 1e-9 {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial = &x + &step * alpha;
                if let Some(f) = value(&trial, t) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if degree / t < tolerance {
            return (x, true);
        }
        t *= 20.0;
    }
}
