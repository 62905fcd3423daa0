//! Experiment orchestration: every (variant, seed) pair runs independently
//! and writes its own subdirectory; per-variant plot tables and the report
//! are written once all runs finish.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aisdd::analysis::{
    dual_grid_min, dual_track, estimate_dual, feasibility_curve, max_dual_norm, mean_ci95, running_average,
    running_primal_average, DualPoint, Estimate,
};
use aisdd::beamforming::{beamforming_metrics, run_beamforming, BeamformingMetrics, SolverParams};
use aisdd::problems::{num_problem, quad_analytic_solution, quadratic_problem};
use aisdd::{
    budget_incremental_schedule, constant_delay, no_delay, run_aisdd, run_async_fc, run_synchronous,
    run_synchronous_with, subset_fc_delay, DelaySchedule, Problem, RunOptions, RunTrace, StepSchedule, SyncMode,
    TraceLevel, UpdateBudget,
};
use anyhow::{anyhow, Context, Result};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{DelayKind, EngineKind, ProblemConfig, ReferenceMode, RunConfig};
use crate::plot::{emit_plot_data, fmt_f64, Series};

/// Environment variable overriding `output.dir`; `--out` overrides both.
pub const OUT_ENV: &str = "AISDD_OUT_DIR";

/// Dual optimum used to report `D(lambda_t) - D*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub mode: ReferenceMode,
    pub label: String,
    pub d_star: f64,
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub mean_pi: f64,
    pub mean_delta: f64,
    pub mean_tau: f64,
    pub max_tau: u64,
    pub mean_delivery_gap: f64,
    pub forced_steps: u64,
    pub displacement_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformingSummary {
    pub avg_power: f64,
    pub flagged: u64,
    pub bs_slots: u64,
    pub mean_sinr: f64,
    pub mean_worst_sinr: f64,
    pub sinr_met: f64,
    pub max_leakage: f64,
    pub constraint_gap: Vec<f64>,
}

impl From<&BeamformingMetrics> for BeamformingSummary {
    fn from(m: &BeamformingMetrics) -> Self {
        Self {
            avg_power: m.avg_power,
            flagged: m.flagged,
            bs_slots: m.bs_slots,
            mean_sinr: m.mean_sinr,
            mean_worst_sinr: m.mean_worst_sinr,
            sinr_met: m.sinr_met,
            max_leakage: m.max_leakage,
            constraint_gap: m.constraint_gap.clone(),
        }
    }
}

/// Per-seed metrics, written as `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub variant: String,
    pub seed: u64,
    pub engine: String,
    pub horizon: u64,
    pub final_running_objective: f64,
    /// `sum_i f_i(x_bar_i)` at the horizon.
    pub primal_average_objective: f64,
    pub feasibility_gap: Vec<f64>,
    pub last_lambda: Vec<f64>,
    pub max_dual_norm: f64,
    pub skipped: u64,
    pub delays: DelaySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_dual_gap: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beamforming: Option<BeamformingSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
}

impl MeanCi {
    fn of(values: &[f64]) -> Self {
        let (mean, ci95) = mean_ci95(values);
        Self { mean, ci95 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub label: String,
    pub engine: String,
    pub delay: String,
    pub seeds: Vec<u64>,
    pub horizon: u64,
    pub final_running_objective: MeanCi,
    pub primal_average_objective: MeanCi,
    pub feasibility_gap: Vec<MeanCi>,
    pub mean_tau: f64,
    pub max_tau: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_dual_gap: Option<MeanCi>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_power: Option<MeanCi>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flagged_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub variant: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub config_hash: String,
    pub variants: Vec<VariantSummary>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

/// Output root: `--out`, else the environment override, else `output.dir`.
pub fn output_root(config: &RunConfig, cli_out: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&config.output.dir),
    }
}

enum Built {
    Generic(Problem),
    Beamforming,
}

fn build_problem(config: &RunConfig) -> Result<Built> {
    Ok(match &config.problem {
        ProblemConfig::Quadratic { .. } => {
            let spec = config.problem.quadratic_spec().expect("quadratic").map_err(|e| anyhow!(e))?;
            Built::Generic(quadratic_problem(&spec)?)
        }
        ProblemConfig::Num { .. } => {
            let spec = config.problem.num_spec().expect("num").map_err(|e| anyhow!(e))?;
            Built::Generic(num_problem(&spec)?)
        }
        ProblemConfig::Beamforming { .. } => Built::Beamforming,
    })
}

/// Delay schedule of one run; random schedules draw from the run seed.
pub fn delay_schedule(config: &RunConfig, seed: u64) -> Result<DelaySchedule> {
    let k = config.nodes();
    let d = &config.delay;
    Ok(match d.kind {
        DelayKind::None => no_delay(k),
        DelayKind::Constant => {
            let c = d.c.context("delay.c")?;
            let mut s = constant_delay(c, k);
            s.tau_max = d.tau_max.unwrap_or(c);
            s
        }
        DelayKind::SubsetFc => subset_fc_delay(d.m.context("delay.m")?, k, d.tau_max.context("delay.tau_max")?, seed)?,
        DelayKind::BudgetIncremental => budget_incremental_schedule(
            UpdateBudget::new(
                d.min_updates.context("delay.min_updates")?,
                d.max_updates.context("delay.max_updates")?,
            )?,
            k,
            d.tau_max.context("delay.tau_max")?,
            seed,
        ),
    })
}

fn delay_label(config: &RunConfig) -> String {
    let d = &config.delay;
    match d.kind {
        DelayKind::None => "none".into(),
        DelayKind::Constant => format!("constant(c={})", d.c.unwrap_or(0)),
        DelayKind::SubsetFc => format!("subset_fc(m={}, tau_max={})", d.m.unwrap_or(0), d.tau_max.unwrap_or(0)),
        DelayKind::BudgetIncremental => format!(
            "budget_incremental({}..={}, tau_max={})",
            d.min_updates.unwrap_or(0),
            d.max_updates.unwrap_or(0),
            d.tau_max.unwrap_or(0)
        ),
    }
}

fn run_engine(problem: &Problem, config: &RunConfig, step: &StepSchedule, seed: u64, opts: &RunOptions) -> Result<RunTrace> {
    let t = config.engine.horizon;
    let delay = delay_schedule(config, seed)?;
    Ok(match config.engine.kind {
        EngineKind::Synchronous => run_synchronous_with(problem, step, t, seed, SyncMode::Aggregate, opts)?,
        EngineKind::SynchronousIncremental => run_synchronous_with(problem, step, t, seed, SyncMode::Incremental, opts)?,
        EngineKind::AsyncFc => run_async_fc(problem, step, &delay, t, seed, opts)?,
        EngineKind::Aisdd => run_aisdd(problem, step, &delay, t, seed, opts)?,
    })
}

/// Dual reference for a generic problem, or `None` when disabled.
pub fn compute_reference(config: &RunConfig, problem: &Problem) -> Result<Option<Reference>> {
    let mode = config.reference_mode();
    let n = config.analysis.mc_samples;
    Ok(match mode {
        ReferenceMode::None | ReferenceMode::Auto => None,
        ReferenceMode::Analytic => {
            let spec = config
                .problem
                .quadratic_spec()
                .context("analytic reference needs the quadratic problem")?
                .map_err(|e| anyhow!(e))?;
            let sol = quad_analytic_solution(&spec)?;
            Some(Reference {
                mode,
                label: "analytic (KKT)".into(),
                d_star: sol.objective,
                lambda: vec![sol.lambda],
            })
        }
        ReferenceMode::Grid => {
            let (lambda, d_star) = dual_grid_min(problem, n, 0)?;
            Some(Reference {
                mode,
                label: format!("dual grid, {n} Monte Carlo samples"),
                d_star,
                lambda,
            })
        }
        ReferenceMode::LongRun => {
            let h = config.analysis.reference_horizon;
            let step = StepSchedule::power_decay(config.engine.epsilon, 0.6)?;
            let trace = run_synchronous(problem, &step, h, 0)?;
            let lambda = trace.last_lambda().to_vec();
            let d_star = estimate_dual(problem, &lambda, n, 0)?.mean;
            Some(Reference {
                mode,
                label: format!("synchronous run, {h} slots, eps_t = {} t^-0.6", config.engine.epsilon),
                d_star,
                lambda,
            })
        }
    })
}

struct RunResult {
    metrics: SeedMetrics,
    running_objective: Vec<f64>,
    feasibility: Vec<f64>,
    dim: usize,
    dual_gap: Option<Vec<DualPoint>>,
    running_power: Option<Vec<f64>>,
}

struct Job<'a> {
    label: &'a str,
    config: &'a RunConfig,
    problem: Option<&'a Problem>,
    reference: Option<&'a Reference>,
    seed: u64,
    dir: PathBuf,
    hash: &'a str,
}

fn delay_summary(trace: &RunTrace) -> DelaySummary {
    let d = &trace.delays;
    DelaySummary {
        mean_pi: d.mean_pi(),
        mean_delta: d.mean_delta(),
        mean_tau: d.mean_tau(),
        max_tau: d.max_tau,
        mean_delivery_gap: d.mean_delivery_gap(),
        forced_steps: d.forced_steps,
        displacement_violations: d.displacement_violations,
    }
}

fn execute(job: &Job<'_>) -> Result<RunResult> {
    let config = job.config;
    let step = config.engine.schedule().map_err(|e| anyhow!(e))?;
    let opts = RunOptions {
        trace: if config.output.jsonl { TraceLevel::Full } else { TraceLevel::Compact },
        ..RunOptions::default()
    };
    let (trace, beam) = match job.problem {
        Some(problem) => (run_engine(problem, config, &step, job.seed, &opts)?, None),
        None => {
            let net = config.problem.network().expect("beamforming network");
            let delay = delay_schedule(config, job.seed)?;
            let run = run_beamforming(
                &net,
                config.engine.kind.beamforming(),
                config.problem.baseline(),
                &step,
                &delay,
                config.engine.horizon,
                job.seed,
                &opts,
                SolverParams::default(),
            )?;
            debug_assert_eq!(run.metrics, beamforming_metrics(&net, &run.trace, job.seed));
            (run.trace, Some(run.metrics))
        }
    };
    let running_objective = running_average(&trace.objective);
    let feasibility = feasibility_curve(&trace);
    let d = trace.dim;
    let primal_average_objective = match job.problem {
        Some(p) => running_primal_average(&trace, p, trace.horizon).objective,
        None => beam.as_ref().map_or(f64::NAN, |m| -m.avg_power),
    };
    let dual_gap = match (job.problem, job.reference) {
        (Some(p), Some(r)) => Some(dual_track(
            p,
            &trace,
            config.analysis.cadence,
            config.analysis.mc_samples,
            job.seed,
            Some(&r.lambda),
        )?),
        _ => None,
    };
    let metrics = SeedMetrics {
        variant: job.label.to_string(),
        seed: job.seed,
        engine: config.engine.kind.name().into(),
        horizon: trace.horizon,
        final_running_objective: *running_objective.last().expect("horizon >= 1"),
        primal_average_objective,
        feasibility_gap: feasibility[feasibility.len() - d..].to_vec(),
        last_lambda: trace.last_lambda().to_vec(),
        max_dual_norm: max_dual_norm(&trace),
        skipped: trace.total_skipped(),
        delays: delay_summary(&trace),
        final_dual_gap: dual_gap.as_ref().and_then(|g| g.last()).map(|p| p.estimate),
        beamforming: beam.as_ref().map(BeamformingSummary::from),
    };
    fs::create_dir_all(&job.dir).with_context(|| format!("creating {}", job.dir.display()))?;
    write_trace_csv(
        &job.dir.join("trace.csv"),
        job,
        &trace,
        &running_objective,
        &feasibility,
        beam.as_ref().map(|m| m.running_power.as_slice()),
    )?;
    if config.output.jsonl {
        write_events(&job.dir.join("events.jsonl"), &trace, config.output.lambda_snapshots)?;
    }
    write_json(&job.dir.join("metrics.json"), &metrics)?;
    Ok(RunResult {
        metrics,
        running_objective,
        feasibility,
        dim: d,
        dual_gap,
        running_power: beam.map(|m| m.running_power),
    })
}

/// Column names of `trace.csv`.
pub fn trace_header(dim: usize, beamforming: bool) -> Vec<String> {
    let mut h: Vec<String> = ["t", "objective", "running_objective"].map(String::from).to_vec();
    h.extend((1..=dim).map(|j| format!("lambda_{j}")));
    h.extend((1..=dim).map(|j| format!("feasibility_{j}")));
    h.push("skipped".into());
    if beamforming {
        h.push("running_power".into());
    }
    h
}

fn write_trace_csv(
    path: &Path,
    job: &Job<'_>,
    trace: &RunTrace,
    running: &[f64],
    feasibility: &[f64],
    power: Option<&[f64]>,
) -> Result<()> {
    let d = trace.dim;
    let mut file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(file, "# config_hash={} variant={} seed={}", job.hash, job.label, job.seed)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(trace_header(d, power.is_some()))?;
    for t in 1..=trace.horizon {
        let i = (t - 1) as usize;
        let mut rec = vec![t.to_string(), fmt_f64(trace.objective[i]), fmt_f64(running[i])];
        rec.extend(trace.lambda(t + 1).iter().map(|v| fmt_f64(*v)));
        rec.extend(feasibility[i * d..(i + 1) * d].iter().map(|v| fmt_f64(*v)));
        rec.push(trace.skipped[i].to_string());
        if let Some(p) = power {
            rec.push(fmt_f64(p[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per allocation and per dual step, ordered by slot.
fn write_events(path: &Path, trace: &RunTrace, snapshots: bool) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let mut updates = trace.updates.iter().peekable();
    let mut emit_updates_until = |slot: u64, out: &mut BufWriter<File>| -> Result<()> {
        while let Some(u) = updates.next_if(|u| u.wall_slot <= slot) {
            let mut rec = json!({
                "event": "update",
                "t": u.wall_slot,
                "node": u.node,
                "cycle": u.cycle,
                "pi": null,
                "delta": u.delta,
                "tau": u.tau,
                "state_slot": u.state_slot,
                "dual_slot": u.dual_slot,
                "step": u.step,
                "displacement": u.displacement,
                "grad_norm": u.grad_norm,
                "forced": u.forced,
                "g": null,
                "x": null,
                "p": null,
            });
            if snapshots && u.cycle <= trace.horizon {
                rec["lambda_snapshot"] = json!(trace.lambda(u.cycle + 1));
            }
            writeln!(out, "{rec}")?;
        }
        Ok(())
    };
    for a in &trace.allocations {
        emit_updates_until(a.slot.saturating_sub(1), &mut out)?;
        let rec = json!({
            "event": "allocation",
            "t": a.slot,
            "node": a.node,
            "cycle": null,
            "pi": a.pi,
            "delta": null,
            "tau": null,
            "dual_slot": a.dual_slot,
            "skipped": a.skipped,
            "g": a.g,
            "x": a.x,
            "p": a.p,
        });
        writeln!(out, "{rec}")?;
    }
    emit_updates_until(u64::MAX, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn write_plot(path: &Path, runs: &[Series], hash: &str) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    emit_plot_data(runs, f, hash).with_context(|| format!("writing {}", path.display()))
}

fn curve_series(flat: &[f64], dim: usize) -> Series {
    Series {
        t: (1..=(flat.len() / dim) as u64).collect(),
        values: flat.chunks_exact(dim).map(<[f64]>::to_vec).collect(),
    }
}

fn summarize(label: &str, config: &RunConfig, reference: Option<&Reference>, results: &[RunResult]) -> VariantSummary {
    let m: Vec<&SeedMetrics> = results.iter().map(|r| &r.metrics).collect();
    let col = |f: &dyn Fn(&SeedMetrics) -> f64| MeanCi::of(&m.iter().map(|x| f(x)).collect::<Vec<_>>());
    let dim = results[0].dim;
    let beam = m[0].beamforming.is_some();
    VariantSummary {
        label: label.into(),
        engine: config.engine.kind.name().into(),
        delay: delay_label(config),
        seeds: m.iter().map(|x| x.seed).collect(),
        horizon: config.engine.horizon,
        final_running_objective: col(&|x| x.final_running_objective),
        primal_average_objective: col(&|x| x.primal_average_objective),
        feasibility_gap: (0..dim).map(|j| col(&|x| x.feasibility_gap[j])).collect(),
        mean_tau: m.iter().map(|x| x.delays.mean_tau).sum::<f64>() / m.len() as f64,
        max_tau: m.iter().map(|x| x.delays.max_tau).max().unwrap_or(0),
        reference: reference.cloned(),
        final_dual_gap: reference.map(|_| col(&|x| x.final_dual_gap.map_or(f64::NAN, |e| e.mean))),
        avg_power: beam.then(|| col(&|x| x.beamforming.as_ref().map_or(f64::NAN, |b| b.avg_power))),
        flagged_fraction: beam.then(|| {
            let (f, n) = m.iter().filter_map(|x| x.beamforming.as_ref()).fold((0, 0), |(f, n), b| (f + b.flagged, n + b.bs_slots));
            f as f64 / n as f64
        }),
    }
}

fn check_assertions(config: &RunConfig, s: &VariantSummary) -> Vec<Assertion> {
    let a = &config.analysis;
    let mut out = Vec::new();
    if let (Some(max), Some(gap)) = (a.assert_dual_gap_max, &s.final_dual_gap) {
        out.push(Assertion {
            name: "dual_gap_max".into(),
            variant: s.label.clone(),
            value: gap.mean.abs(),
            threshold: max,
            passed: gap.mean.abs() <= max,
        });
    }
    if let Some(min) = a.assert_feasibility_min {
        let worst = s.feasibility_gap.iter().map(|g| g.mean).fold(f64::INFINITY, f64::min);
        out.push(Assertion {
            name: "feasibility_min".into(),
            variant: s.label.clone(),
            value: worst,
            threshold: min,
            passed: worst >= min,
        });
    }
    if let (Some(max), Some(frac)) = (a.assert_flagged_max, s.flagged_fraction) {
        out.push(Assertion {
            name: "flagged_max".into(),
            variant: s.label.clone(),
            value: frac,
            threshold: max,
            passed: frac <= max,
        });
    }
    out
}

fn variant_dir(root: &Path, label: &str) -> PathBuf {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.=,".contains(c) { c } else { '_' })
        .collect();
    root.join(safe)
}

/// Runs every variant and seed, writes all artifacts under `root/<name>/`
/// and returns the aggregate report.
pub fn run_experiment(config: &RunConfig, root: &Path) -> Result<Report> {
    let hash = config.hash();
    let dir = root.join(&config.name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), config.emit())?;
    let variants = config.expand().map_err(|e| anyhow!("{e}"))?;
    let mut prepared = Vec::with_capacity(variants.len());
    for (label, cfg) in &variants {
        let built = build_problem(cfg)?;
        let reference = match &built {
            Built::Generic(p) => compute_reference(cfg, p).with_context(|| format!("variant {label}: dual reference"))?,
            Built::Beamforming => None,
        };
        if let Some(r) = &reference {
            info!("variant {label}: D* = {} ({})", r.d_star, r.label);
        }
        prepared.push((label.as_str(), cfg, built, reference));
    }
    let jobs: Vec<Job<'_>> = prepared
        .iter()
        .flat_map(|(label, cfg, built, reference)| {
            let problem = match built {
                Built::Generic(p) => Some(p),
                Built::Beamforming => None,
            };
            let vdir = variant_dir(&dir, label);
            let hash = hash.as_str();
            cfg.engine.seeds.iter().map(move |&seed| Job {
                label,
                config: cfg,
                problem,
                reference: reference.as_ref(),
                seed,
                dir: vdir.join(format!("seed_{seed}")),
                hash,
            })
        })
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|job| {
            info!("running variant {} seed {}", job.label, job.seed);
            execute(job).with_context(|| format!("variant {}, seed {}", job.label, job.seed))
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::new();
    let mut assertions = Vec::new();
    let mut offset = 0;
    for (label, cfg, _, reference) in &prepared {
        let n = cfg.engine.seeds.len();
        let group = &results[offset..offset + n];
        offset += n;
        let vdir = variant_dir(&dir, label);
        let objective: Vec<Series> = group.iter().map(|r| Series::scalar(&r.running_objective)).collect();
        write_plot(&vdir.join("plot_objective.csv"), &objective, &hash)?;
        let feas: Vec<Series> = group.iter().map(|r| curve_series(&r.feasibility, r.dim)).collect();
        write_plot(&vdir.join("plot_feasibility.csv"), &feas, &hash)?;
        if group.iter().all(|r| r.dual_gap.is_some()) && !group.is_empty() && group[0].dual_gap.is_some() {
            let gaps: Vec<Series> = group
                .iter()
                .map(|r| {
                    let pts = r.dual_gap.as_ref().expect("checked");
                    Series {
                        t: pts.iter().map(|p| p.t).collect(),
                        values: pts.iter().map(|p| vec![p.estimate.mean]).collect(),
                    }
                })
                .collect();
            write_plot(&vdir.join("plot_dual_gap.csv"), &gaps, &hash)?;
        }
        if let Some(powers) = group.iter().map(|r| r.running_power.as_deref()).collect::<Option<Vec<_>>>() {
            let series: Vec<Series> = powers.iter().map(|p| Series::scalar(p)).collect();
            write_plot(&vdir.join("plot_power.csv"), &series, &hash)?;
        }
        let summary = summarize(label, cfg, reference.as_ref(), group);
        assertions.extend(check_assertions(cfg, &summary));
        summaries.push(summary);
    }
    let report = Report {
        name: config.name.clone(),
        config_hash: hash,
        passed: assertions.iter().all(|a| a.passed),
        variants: summaries,
        assertions,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}
