//! End-to-end acceptance criteria. Runs as a plain binary so every criterion
//! prints its verdict; pass criterion numbers as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use aisdd::analysis::{
    brute_force_num, brute_force_quadratic, checkpoints, dual_grid_min, dual_norm_halves, dual_track,
    estimate_dual, estimate_v_b_l, feasibility_curve, feasibility_gap, first_within, fit_inverse_t,
    max_dual_norm, mean_ci95, running_primal_average, theorem1_bound, theorem2_bound, theory_constants_c,
};
use aisdd::beamforming::{
    db_to_linear, run_beamforming, solve_bs_subproblem, Baseline, BeamformingEngine, BeamformingRun,
    CellNetwork, SolverParams,
};
use aisdd::problems::{num_problem, quad_analytic_solution, quadratic_problem, slater_check, NumSpec, QuadraticSpec};
use aisdd::{
    budget_incremental_schedule, constant_delay, project_nonneg, run_aisdd, run_async_fc, run_synchronous,
    run_synchronous_with, subset_fc_delay, DelaySchedule, Problem, RunOptions, RunTrace, StepSchedule, SyncMode,
    UpdateBudget,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const D_STAR: f64 = -3.0;
const LAMBDA_STAR: [f64; 1] = [2.0];
const MC: usize = 2000;

struct Verdict {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

fn quad_spec() -> QuadraticSpec {
    QuadraticSpec::new(vec![1.0, 2.0, 3.0], 3.0, 5.0, 0.1).unwrap()
}

fn quad() -> Problem {
    quadratic_problem(&quad_spec()).unwrap()
}

fn budget(lo: usize, hi: usize, k: usize, tau: u64, seed: u64) -> DelaySchedule {
    budget_incremental_schedule(UpdateBudget::new(lo, hi).unwrap(), k, tau, seed)
}

fn seed_mean(values: &[f64]) -> (f64, f64) {
    let (m, ci) = mean_ci95(values);
    (m, ci / 1.96)
}

/// Seed-averaged steady-state gap: mean over the last 20% of iterates of the
/// paired estimate `D(lambda_t) - D(lambda*)`.
fn steady_gap(p: &Problem, traces: &[RunTrace]) -> f64 {
    let gaps: Vec<f64> = traces
        .par_iter()
        .map(|tr| {
            let from = tr.horizon * 4 / 5 + 1;
            let pts = dual_track(p, tr, 50, MC, tr.seed, Some(&LAMBDA_STAR)).unwrap();
            let tail: Vec<f64> = pts.iter().filter(|d| d.t >= from).map(|d| d.estimate.mean).collect();
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect();
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

fn c1_zero_delay_equivalence() -> Verdict {
    let p = quad();
    let mut mismatches = Vec::new();
    for step in [StepSchedule::constant(0.05).unwrap(), StepSchedule::power_decay(0.5, 0.6).unwrap()] {
        for seed in 1..=5 {
            let sync = run_synchronous(&p, &step, 1000, seed).unwrap();
            let fc = run_async_fc(&p, &step, &constant_delay(0, 3), 1000, seed, &RunOptions::default()).unwrap();
            if fc.lambdas != sync.lambdas {
                mismatches.push(format!("async_fc seed {seed}"));
            }
            let inc =
                run_synchronous_with(&p, &step, 1000, seed, SyncMode::Incremental, &RunOptions::default()).unwrap();
            let ring = run_aisdd(&p, &step, &budget(3, 3, 3, 0, seed), 1000, seed, &RunOptions::default()).unwrap();
            if ring.lambdas != inc.lambdas {
                mismatches.push(format!("aisdd seed {seed}"));
            }
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        format!("10 runs per engine, T=1000, mismatches: {mismatches:?}"),
    )
    .note("aisdd {K,K} budget is compared with the incremental synchronous recursion; async_fc with the aggregate one")
}

fn c2_diminishing_convergence() -> Verdict {
    let spec = quad_spec();
    let p = quad();
    let kkt = quad_analytic_solution(&spec).unwrap();
    let (_, grid) = dual_grid_min(&p, 20_000, 0).unwrap();
    let reference_ok = (kkt.objective - D_STAR).abs() < 1e-12 && (grid - D_STAR).abs() < 0.01;
    let step = StepSchedule::power_decay(0.5, 0.6).unwrap();
    let finals: Vec<f64> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            let tr = run_aisdd(&p, &step, &budget(2, 4, 3, 10, seed), 50_000, seed, &RunOptions::default()).unwrap();
            estimate_dual(&p, tr.last_lambda(), MC, seed).unwrap().mean
        })
        .collect();
    let (m, se) = seed_mean(&finals);
    let err = (m - D_STAR).abs();
    Verdict::new(
        reference_ok && err <= 0.05,
        format!("mean D(lambda_T) = {m:.5} (se {se:.1e}), |err| = {err:.2e} <= 0.05; KKT D* = {}, grid D* = {grid:.4}", kkt.objective),
    )
}

fn c3_constant_step_bound() -> Verdict {
    let p = quad();
    let (eps, eta, b0, tau) = (0.05, 0.05, 2.0, 10u64);
    let step = StepSchedule::constant(eps).unwrap();
    let pilot = run_aisdd(&p, &step, &budget(2, 4, 3, tau, 1), 2_000, 1, &RunOptions::default()).unwrap();
    let v = estimate_v_b_l(&p, &pilot, 200, 0).unwrap().v;
    let c = theory_constants_c(3, v, tau);
    let (gap_bound, t_bound) = theorem1_bound(eps, eta, c.c_of_tau, b0);
    let horizon = t_bound.ceil() as u64;
    let tracks: Vec<Vec<f64>> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            let tr = run_aisdd(&p, &step, &budget(2, 4, 3, tau, seed), horizon, seed, &RunOptions::default()).unwrap();
            dual_track(&p, &tr, 50, MC, seed, None).unwrap().iter().map(|d| d.estimate.mean).collect()
        })
        .collect();
    let ts = checkpoints(horizon, 50);
    let (mut best, mut best_se) = (f64::INFINITY, 0.0);
    for k in 0..ts.len() {
        let (m, se) = seed_mean(&tracks.iter().map(|tr| tr[k]).collect::<Vec<_>>());
        if m < best {
            best = m;
            best_se = se;
        }
    }
    let bound_ok = best <= D_STAR + gap_bound + 3.0 * best_se;

    let scaling = |engine: &str| -> (f64, f64) {
        let gap_at = |eps: f64| {
            let step = StepSchedule::constant(eps).unwrap();
            let traces: Vec<RunTrace> = (1..=20u64)
                .into_par_iter()
                .map(|seed| match engine {
                    "aisdd" => run_aisdd(&p, &step, &constant_delay(0, 3), 20_000, seed, &RunOptions::default()).unwrap(),
                    _ => run_synchronous(&p, &step, 20_000, seed).unwrap(),
                })
                .collect();
            steady_gap(&p, &traces)
        };
        (gap_at(0.1), gap_at(0.05))
    };
    let (a1, a2) = scaling("aisdd");
    let ratio = a1 / a2;
    let (s1, s2) = scaling("sync");
    let scaling_ok = (1.4..=2.9).contains(&ratio);
    Verdict::new(
        bound_ok && scaling_ok,
        format!(
            "min_t mean D = {best:.4} <= {:.4} (V {v:.3}, C(tau) {:.1}, T_bound {horizon}): {}; aisdd gap(0.1)/gap(0.05) = {a1:.3e}/{a2:.3e} = {ratio:.2}, required [1.4, 2.9]: {}",
            D_STAR + gap_bound + 3.0 * best_se,
            c.c_of_tau,
            if bound_ok { "ok" } else { "violated" },
            if scaling_ok { "ok" } else { "violated" },
        ),
    )
    .note(format!(
        "synchronous aggregate engine, same runs: gap(0.1)/gap(0.05) = {s1:.3e}/{s2:.3e} = {:.2}",
        s1 / s2
    ))
    .note("the cyclic incremental pass carries an O(eps) fixed-point offset, so its steady gap grows like eps^2, not eps")
}

fn c4_primal_near_optimality() -> Verdict {
    let p = quad();
    let (eps, tau) = (0.05, 5u64);
    let step = StepSchedule::constant(eps).unwrap();
    let traces: Vec<RunTrace> = (1..=20u64)
        .into_par_iter()
        .map(|seed| run_aisdd(&p, &step, &constant_delay(tau, 3), 20_000, seed, &RunOptions::default()).unwrap())
        .collect();
    let est = estimate_v_b_l(&p, &traces[0], 200, 0).unwrap();
    let bound = theorem2_bound(eps, tau, 3, est.v, est.b_hat, est.l_hat);
    let objs: Vec<f64> = traces
        .iter()
        .map(|tr| running_primal_average(tr, &p, tr.horizon).objective)
        .collect();
    let (m, se) = seed_mean(&objs);
    let p_star = quad_analytic_solution(&quad_spec()).unwrap().objective;
    Verdict::new(
        m >= p_star - bound && m >= p_star - 0.2,
        format!(
            "mean sum f(x_bar_T) = {m:.5} (se {se:.1e}); P* - bound = {:.3} (V {:.3}, B {:.3}, L {:.3}); P* - 0.2 = {:.1}",
            p_star - bound,
            est.v,
            est.b_hat,
            est.l_hat,
            p_star - 0.2
        ),
    )
}

fn c5_asymptotic_feasibility() -> Verdict {
    let spec = NumSpec::desk(5);
    let p = num_problem(&spec).unwrap();
    let eps = 0.1;
    let step = StepSchedule::constant(eps).unwrap();
    let horizon = 10_000u64;
    let traces: Vec<RunTrace> = (1..=5u64)
        .into_par_iter()
        .map(|seed| run_aisdd(&p, &step, &budget(3, 8, 5, 10, seed), horizon, seed, &RunOptions::default()).unwrap())
        .collect();
    let mut ok = true;
    let mut finals = Vec::new();
    let mut bound_violations = 0;
    for tr in &traces {
        let fg = feasibility_gap(tr, horizon);
        ok &= fg.iter().all(|v| *v >= -0.05);
        finals.push(fg);
        let b_hat = max_dual_norm(tr);
        let curve = feasibility_curve(tr);
        for t in 1..=horizon {
            for j in 0..2 {
                if curve[(t as usize - 1) * 2 + j] < -b_hat / (eps * t as f64) - 1e-12 {
                    bound_violations += 1;
                }
            }
        }
    }
    ok &= bound_violations == 0;
    let curves: Vec<Vec<f64>> = traces.iter().map(feasibility_curve).collect();
    let ts: Vec<f64> = (1..=100).map(|k| 100.0 * k as f64).collect();
    let mut fits = Vec::new();
    for j in 0..2 {
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let i = (t as usize - 1) * 2 + j;
                let mean = curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64;
                (-mean).max(0.0)
            })
            .collect();
        let (c, r2) = fit_inverse_t(&ts, &ys);
        ok &= r2 >= 0.8;
        fits.push((c, r2));
    }
    Verdict::new(
        ok,
        format!(
            "final gaps {:?} >= -0.05; negative part ~ c/T fits (c, R^2) = {:?}, need R^2 >= 0.8; -B/(eps t) bound violations {bound_violations}",
            finals.iter().map(|f| f.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()).collect::<Vec<_>>(),
            fits.iter().map(|(c, r)| format!("({c:.2}, {r:.4})")).collect::<Vec<_>>()
        ),
    )
}

fn c6_dual_boundedness() -> Verdict {
    let spec = NumSpec::desk(5);
    let slater = slater_check(&spec, 20_000, 0).unwrap();
    let p = num_problem(&spec).unwrap();
    let step = StepSchedule::constant(0.1).unwrap();
    let ratios: Vec<f64> = (1..=5u64)
        .into_par_iter()
        .map(|seed| {
            let tr = run_aisdd(&p, &step, &budget(3, 8, 5, 10, seed), 100_000, seed, &RunOptions::default()).unwrap();
            let (first, second) = dual_norm_halves(&tr);
            second / first
        })
        .collect();
    let ok = slater.margin() > 0.0 && ratios.iter().all(|r| *r <= 1.05);
    Verdict::new(
        ok,
        format!(
            "Slater margin {:.4}; second/first half max norm {:?} <= 1.05",
            slater.margin(),
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ),
    )
}

/// Non-decreasing, except for at most one adjacent drop of at most 10%.
fn trend_ok(means: &[f64]) -> bool {
    let drops: Vec<(f64, f64)> = means.windows(2).filter(|w| w[1] < w[0]).map(|w| (w[0], w[1])).collect();
    drops.is_empty() || (drops.len() == 1 && drops[0].1 >= 0.9 * drops[0].0)
}

fn c7_delay_trend() -> Verdict {
    let p = quad();
    let step = StepSchedule::power_decay(0.5, 0.6).unwrap();
    let horizon = 400;
    let mut means = Vec::new();
    let mut misses = 0;
    for c in [0u64, 2, 5, 10] {
        let slots: Vec<(f64, bool)> = (1..=20u64)
            .into_par_iter()
            .map(|seed| {
                let tr = run_aisdd(&p, &step, &constant_delay(c, 3), horizon, seed, &RunOptions::default()).unwrap();
                let pts = dual_track(&p, &tr, 1, MC, seed, Some(&LAMBDA_STAR)).unwrap();
                match first_within(&pts, 0.0, 0.1) {
                    Some(t) => (tr.lambda_ready[t as usize - 1] as f64, true),
                    None => (horizon as f64, false),
                }
            })
            .collect();
        misses += slots.iter().filter(|s| !s.1).count();
        means.push(slots.iter().map(|s| s.0).sum::<f64>() / slots.len() as f64);
    }
    Verdict::new(
        trend_ok(&means) && misses == 0,
        format!("mean wall slots to gap <= 0.1 for delays 0/2/5/10: {means:?}; runs that never reached it: {misses}"),
    )
    .note("step eps_t = 0.5 t^-0.6; with a constant step of 0.05 stale gradients act as momentum from lambda = 0 and the trend inverts")
}

fn beam(network: &CellNetwork, engine: BeamformingEngine, baseline: Baseline, delay: &DelaySchedule, seed: u64) -> Result<BeamformingRun, String> {
    let step = StepSchedule::constant(0.1).unwrap();
    run_beamforming(network, engine, baseline, &step, delay, 5_000, seed, &RunOptions::default(), SolverParams::default())
        .map_err(|e| e.to_string())
}

fn c8_beamforming() -> Verdict {
    let net = CellNetwork::uniform(3, 2, 1, db_to_linear(10.0), 1.0, 1.65);
    let delay = budget(1, 5, 3, 10, 1);
    let none = constant_delay(0, 3);
    let sync = beam(&net, BeamformingEngine::Synchronous, Baseline::None, &none, 1).unwrap();
    let ring = beam(&net, BeamformingEngine::Aisdd, Baseline::None, &delay, 1).unwrap();
    let (ps, pr) = (sync.metrics.avg_power, ring.metrics.avg_power);
    let a = (pr - ps).abs() <= 0.1 * ps;
    let unc = beam(&net, BeamformingEngine::Synchronous, Baseline::Uncoordinated, &none, 1);
    let (b, b_detail) = match &unc {
        Ok(u) => (ps <= u.metrics.avg_power, format!("{ps:.4} <= uncoordinated {:.4}", u.metrics.avg_power)),
        Err(e) => (false, format!("uncoordinated baseline could not run: {e}")),
    };
    let leak = sync.metrics.max_leakage.max(ring.metrics.max_leakage);
    let c = leak <= net.rho + 1e-6;
    let mut v = Verdict::new(
        a && b && c,
        format!(
            "(a) aisdd power {pr:.4} vs synchronous {ps:.4}, rel diff {:.3} <= 0.1: {}; (b) {b_detail}: {}; (c) max leakage {leak:.6} <= {}: {}",
            (pr - ps).abs() / ps,
            a,
            b,
            net.rho,
            c
        ),
    )
    .note(format!(
        "flagged BS-slots: synchronous {}/{}, aisdd {}/{}",
        sync.metrics.flagged, sync.metrics.bs_slots, ring.metrics.flagged, ring.metrics.bs_slots
    ));
    let net3 = CellNetwork::uniform(3, 3, 1, db_to_linear(10.0), 1.0, 1.65);
    let s3 = beam(&net3, BeamformingEngine::Synchronous, Baseline::None, &none, 1);
    let u3 = beam(&net3, BeamformingEngine::Synchronous, Baseline::Uncoordinated, &none, 1);
    if let (Ok(s3), Ok(u3)) = (s3, u3) {
        v = v.note(format!(
            "N=3 antennas: stochastic power {:.4} vs uncoordinated {:.4} ({} flagged of {})",
            s3.metrics.avg_power, u3.metrics.avg_power, u3.metrics.flagged, u3.metrics.bs_slots
        ));
    }
    v
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

/// Largest deficit of the library best response against a dense grid, per problem.
fn best_response_deficits() -> (f64, f64) {
    let qs = quad_spec();
    let qp = quad();
    let ns = NumSpec::desk(3);
    let np = num_problem(&ns).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut dq, mut dn) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..100u64 {
        let i = (k % 3) as usize;
        let lambda = [rng.random_range(0.0..8.0)];
        let node = qp.node(i);
        let state = node.sample_state(k + 1, 5);
        let lag = |x: f64| -(x - qs.a[i]).powi(2) + lambda[0] * (qs.share() - x + state.value[0]);
        let x = node.best_response(&lambda, &state).unwrap().x[0];
        let grid = linspace(0.0, qs.x_max, 40_000).map(lag).fold(f64::NEG_INFINITY, f64::max);
        dq = dq.max(grid - lag(x));

        let lambda = if k % 10 == 0 {
            [0.0, rng.random_range(0.0..3.0)]
        } else if k % 10 == 1 {
            [rng.random_range(0.0..3.0), 0.0]
        } else {
            [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]
        };
        let node = np.node(i);
        let state = node.sample_state(k + 1, 5);
        let h = state.value[0];
        let lag = |r: f64, p: f64| {
            ns.w[i] * r.ln() + lambda[0] * (0.5 * (h * p).ln_1p() - r) + lambda[1] * (ns.power_share() - p)
        };
        let a = node.best_response(&lambda, &state).unwrap();
        let mut grid = f64::NEG_INFINITY;
        for r in linspace(ns.r_min, ns.r_max, 200) {
            for p in linspace(0.0, ns.p_max, 200) {
                grid = grid.max(lag(r, p));
            }
        }
        dn = dn.max(grid - lag(a.x[0], a.p[0]));
    }
    (dq, dn)
}

/// Worst relative error of the SOCP against a grid over `(|w|, I)` for one
/// antenna, one user per cell, two cells.
fn subproblem_grid_error() -> (f64, usize, usize) {
    let net = CellNetwork::uniform(2, 1, 1, 10.0, 1.0, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut solved, mut infeasible) = (0.0f64, 0, 0);
    for t in 1..=30u64 {
        let ch = net.sample_channels(0, t, 4);
        let lambda = [rng.random_range(0.0..0.5), rng.random_range(0.0..2.0)];
        let h0 = net.link(&ch, 0, 0).iter().map(|v| v * v).sum::<f64>().sqrt();
        let h1 = net.link(&ch, 0, 1).iter().map(|v| v * v).sum::<f64>().sqrt();
        let (gamma, s2, rho) = (net.gamma[0], net.sigma2, net.rho);
        let a_lo = (gamma * s2).sqrt() / h0;
        let a_hi = (rho / h1).min(10.0 * a_lo);
        let sol = solve_bs_subproblem(&net, 0, &lambda, &ch, &SolverParams::default());
        if a_lo > rho / h1 {
            assert!(sol.is_none(), "grid finds no feasible point but the solver does");
            infeasible += 1;
            continue;
        }
        let sol = sol.expect("feasible instance");
        let i_hi = ((a_hi * h0).powi(2) / gamma - s2).max(0.0).sqrt();
        let mut grid = f64::INFINITY;
        for a in linspace(a_lo, a_hi, 1500) {
            for i in linspace(0.0, i_hi, 1500) {
                if (a * h0).powi(2) >= gamma * (i * i + s2) {
                    grid = grid.min(a * a - lambda[0] * i + lambda[1] * a * h1);
                }
            }
        }
        worst = worst.max((sol.objective - grid).abs() / grid.abs());
        solved += 1;
    }
    (worst, solved, infeasible)
}

fn c9_oracles() -> Verdict {
    let (dq, dn) = best_response_deficits();
    let (sub_err, solved, infeasible) = subproblem_grid_error();
    let bq = brute_force_quadratic(&quad_spec(), 301, 500, 1).unwrap();
    let tiny = NumSpec::desk(2);
    let bn = brute_force_num(&tiny, 201, 300, 1).unwrap();
    let weak = bq.weak_duality_holds() && bn.weak_duality_holds();
    let zero_gap = bn.check_zero_gap(0.02).is_ok();
    let ok = dq <= 1e-6 && dn <= 1e-6 && sub_err <= 0.01 && solved > 0 && weak && zero_gap;
    Verdict::new(
        ok,
        format!(
            "best-response deficits quadratic {dq:.1e}, num {dn:.1e} <= 1e-6; N=1 subproblem vs grid rel err {sub_err:.1e} <= 1% ({solved} solved, {infeasible} infeasible agreed); weak duality {weak}; tiny NUM D*-P* = {:.4} on |P*| = {:.4} <= 2%",
            bn.gap(),
            bn.p_star.abs()
        ),
    )
    .note(format!("quadratic grid: P* {:.5}, D* {:.5}", bq.p_star, bq.d_star))
}

fn trace_invariants(tr: &RunTrace, p: &Problem, step: &StepSchedule) -> Vec<String> {
    let mut bad = Vec::new();
    let v = p.gradient_bound().unwrap();
    if tr.lambdas.iter().any(|l| !(*l >= 0.0)) {
        bad.push("negative multiplier".into());
    }
    if tr.delays.displacement_violations > 0 {
        bad.push(format!("{} displacement violations", tr.delays.displacement_violations));
    }
    for u in &tr.updates {
        if u.displacement > step.at(u.cycle) * v * (1.0 + 1e-12) {
            bad.push(format!("displacement {} at cycle {}", u.displacement, u.cycle));
        }
        if u.tau > tr.tau_max || u.delta > u.tau {
            bad.push(format!("update delays delta {} tau {} > {}", u.delta, u.tau, tr.tau_max));
        }
    }
    if tr.allocations.iter().any(|a| a.pi > tr.tau_max) || tr.delays.max_tau > tr.tau_max {
        bad.push("staleness above tau_max".into());
    }
    bad
}

fn c10_invariants() -> Verdict {
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let pair = (prop::collection::vec(-10.0f64..10.0, 1..6), prop::collection::vec(-10.0f64..10.0, 1..6));
    let projection = runner.run(&pair, |(a, b)| {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dist(&project_nonneg(a), &project_nonneg(b)) <= dist(a, b) + 1e-12);
        Ok(())
    });

    let mut failures = Vec::new();
    if let Err(e) = projection {
        failures.push(format!("projection: {e}"));
    }
    let quad = quad();
    let num = num_problem(&NumSpec::desk(5)).unwrap();
    let opts = RunOptions::full();
    let step = StepSchedule::constant(0.1).unwrap();
    let decay = StepSchedule::power_decay(0.5, 0.6).unwrap();
    let mut runs = 0;
    for (name, p) in [("quadratic", &quad), ("num", &num)] {
        let k = p.len();
        for s in [&step, &decay] {
            let cases: Vec<(&str, RunTrace, RunTrace)> = vec![
                (
                    "aisdd budget",
                    run_aisdd(p, s, &budget(2, 8, k, 10, 3), 2_000, 3, &opts).unwrap(),
                    run_aisdd(p, s, &budget(2, 8, k, 10, 3), 2_000, 3, &opts).unwrap(),
                ),
                (
                    "aisdd constant",
                    run_aisdd(p, s, &constant_delay(5, k), 2_000, 3, &opts).unwrap(),
                    run_aisdd(p, s, &constant_delay(5, k), 2_000, 3, &opts).unwrap(),
                ),
                (
                    "async_fc subset",
                    run_async_fc(p, s, &subset_fc_delay(1, k, 10, 3).unwrap(), 2_000, 3, &opts).unwrap(),
                    run_async_fc(p, s, &subset_fc_delay(1, k, 10, 3).unwrap(), 2_000, 3, &opts).unwrap(),
                ),
                (
                    "synchronous",
                    run_synchronous_with(p, s, 2_000, 3, SyncMode::Aggregate, &opts).unwrap(),
                    run_synchronous_with(p, s, 2_000, 3, SyncMode::Aggregate, &opts).unwrap(),
                ),
            ];
            for (engine, a, b) in cases {
                runs += 1;
                if a != b {
                    failures.push(format!("{name} {engine}: rerun differs"));
                }
                for f in trace_invariants(&a, p, s) {
                    failures.push(format!("{name} {engine}: {f}"));
                }
            }
        }
    }
    failures.truncate(10);
    Verdict::new(
        failures.is_empty(),
        format!("projection 10^4 pairs; {runs} traces checked for lambda >= 0, displacement <= eps_t V, delay bounds, determinism; failures {failures:?}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "zero-delay equivalence", c1_zero_delay_equivalence),
    (2, "dual convergence, diminishing steps", c2_diminishing_convergence),
    (3, "constant-step bound and eps-scaling", c3_constant_step_bound),
    (4, "primal near-optimality", c4_primal_near_optimality),
    (5, "asymptotic feasibility", c5_asymptotic_feasibility),
    (6, "dual boundedness", c6_dual_boundedness),
    (7, "delay degradation trend", c7_delay_trend),
    (8, "beamforming desk scale", c8_beamforming),
    (9, "oracle suite", c9_oracles),
    (10, "invariant suite", c10_invariants),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} ({name}): {status} [{:.1}s] {}", start.elapsed().as_secs_f64(), verdict.detail);
        for note in &verdict.notes {
            println!("    note: {note}");
        }
        if !verdict.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
