use aisdd::beamforming::{
    power, run_beamforming, Baseline, BeamformingEngine, BeamformingError, CellNetwork, SolverParams,
};
use aisdd::{budget_incremental_schedule, constant_delay, RunOptions, StepSchedule, UpdateBudget};

fn run(net: &CellNetwork, engine: BeamformingEngine, baseline: Baseline, horizon: u64) -> Result<aisdd::beamforming::BeamformingRun, BeamformingError> {
    run_beamforming(
        net,
        engine,
        baseline,
        &StepSchedule::constant(0.1).unwrap(),
        &constant_delay(0, net.bs_count()),
        horizon,
        7,
        &RunOptions::default(),
        SolverParams::default(),
    )
}

#[test]
fn single_cell_keeps_zero_prices_and_matched_filter_power() {
    let net = CellNetwork::uniform(1, 2, 1, 10.0, 1.0, 1.65);
    let r = run(&net, BeamformingEngine::Synchronous, Baseline::None, 40).unwrap();
    assert!(r.trace.lambdas.iter().all(|l| *l == 0.0));
    for t in 1..=40 {
        let h = net.sample_channels(0, t, 7);
        let expected = 10.0 / power(&h);
        let x = r.trace.x_at(0, t);
        assert!((power(&x[..4]) - expected).abs() <= 1e-6 * expected, "slot {t}");
    }
    assert_eq!(r.metrics.flagged, 0);
    assert!((r.metrics.sinr_met - 1.0).abs() < 1e-12);
}

#[test]
fn zero_staleness_ring_matches_incremental_recursion() {
    let net = CellNetwork::uniform(3, 3, 1, 10.0, 1.0, 1.65);
    let inc = run(&net, BeamformingEngine::SynchronousIncremental, Baseline::None, 30).unwrap();
    let sched = budget_incremental_schedule(UpdateBudget::new(3, 3).unwrap(), 3, 0, 1);
    let ring = run_beamforming(
        &net,
        BeamformingEngine::Aisdd,
        Baseline::None,
        &StepSchedule::constant(0.1).unwrap(),
        &sched,
        30,
        7,
        &RunOptions::default(),
        SolverParams::default(),
    )
    .unwrap();
    assert_eq!(inc.trace.lambdas, ring.trace.lambdas);
}

#[test]
fn leakage_cap_holds_and_prices_stay_nonnegative() {
    let net = CellNetwork::uniform(3, 3, 1, 10.0, 1.0, 1.65);
    let r = run(&net, BeamformingEngine::Synchronous, Baseline::None, 60).unwrap();
    assert!(r.metrics.max_leakage <= net.rho + 1e-6);
    assert!(r.trace.lambdas.iter().all(|l| *l >= 0.0));
    assert_eq!(r.metrics.running_power.len(), 60);
    let u = run(&net, BeamformingEngine::Synchronous, Baseline::Uncoordinated, 60).unwrap();
    assert!(u.metrics.max_leakage <= net.rho + 1e-6);
    assert!(u.trace.lambdas.iter().all(|l| *l == 0.0));
}

#[test]
fn hopeless_leakage_cap_is_reported() {
    let net = CellNetwork::uniform(2, 1, 1, 10.0, 1.0, 1e-3);
    match run(&net, BeamformingEngine::Synchronous, Baseline::None, 10) {
        Err(BeamformingError::PersistentInfeasibility { flagged, total }) => assert_eq!((flagged, total), (20, 20)),
        other => panic!("{:?}", other.map(|r| r.metrics)),
    }
}
