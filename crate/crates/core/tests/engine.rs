mod common;

use qhistory::dsl::parse_scenario;
use qhistory::histories::{
    collapse_on_outcome, conditional_distribution, enumerate_history_vector, history_amplitude,
    marginal_probability, History, Scenario, ScheduleStep, DEFAULT_PRUNE_TOL,
};
use qhistory::linalg::c;
use qhistory::oracle::{compare_to_engine, sample_histories, Comparison};
use qhistory::quantum::{computational_basis_family, partial_trace, StateVector};
use qhistory::{gates, histories::state_before_measurement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    parse_scenario(&text).unwrap().to_scenario().unwrap()
}

#[test]
fn ghz_parity_histories() {
    let sc = load("ghz.qh");
    let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
    let brute = brute_force_amplitudes(&sc);
    let expected: Vec<History> = brute
        .iter()
        .filter(|(_, a)| a.norm() > 1e-12)
        .map(|(h, _)| h.clone())
        .collect();
    assert_eq!(hv.histories().cloned().collect::<Vec<_>>(), expected);
    assert_eq!(hv.len(), 2);
    for (_, p) in hv.probabilities() {
        assert!((p - 0.5).abs() < 1e-12);
    }
    assert!((marginal_probability(&hv, 2, "even").unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(marginal_probability(&hv, 2, "odd").unwrap(), 0.0);
}

#[test]
fn bell_reduced_state_is_maximally_mixed() {
    let sc = load("bell.qh");
    let rho = state_before_measurement(&sc, 1).unwrap();
    let r = partial_trace(&rho, &[1]).unwrap();
    assert!((r.purity() - 0.5).abs() < 1e-12);
    let full = partial_trace(&rho, &[0, 1]).unwrap();
    assert!((full.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn conditional_on_first_record_fixes_second() {
    let sc = load("bell.qh");
    let steps = vec![
        sc.steps()[0].clone(),
        ScheduleStep::measure_only(computational_basis_family(2)),
    ];
    let sc = Scenario::new(sc.initial().clone(), steps).unwrap();
    let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
    let dist = conditional_distribution(&hv, (1, "11")).unwrap();
    assert_eq!(dist, vec![(History::new(["11", "11"]), 1.0)]);
    assert!(collapse_on_outcome(&hv, 2, "01").is_err());
}

#[test]
fn sampling_matches_random_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for seed in 0..10 {
        let sc = random_computational_scenario(&mut rng, 2, 2);
        let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
        let report = sample_histories(&sc, 20_000, seed).unwrap();
        let rows = compare_to_engine(&report, &hv).unwrap();
        assert!(rows.iter().all(Comparison::passed), "{rows:?}");
    }
}

#[test]
fn sampling_handles_degenerate_final_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for seed in 0..5 {
        let sc = random_degenerate_scenario(&mut rng);
        let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
        let report = sample_histories(&sc, 20_000, seed).unwrap();
        let rows = compare_to_engine(&report, &hv).unwrap();
        assert!(rows.iter().all(Comparison::passed), "{rows:?}");
    }
}

#[test]
fn amplitude_ignores_global_phase_of_initial_state() {
    let psi = StateVector::new(qhistory::CVector::new(vec![c(0.0, 0.6), c(0.0, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap()).unwrap();
    let meas = computational_basis_family(2);
    let sc = Scenario::new(
        psi,
        vec![ScheduleStep::measure_only(meas.clone()), ScheduleStep::new(gates::cnot(), meas).unwrap()],
    )
    .unwrap();
    let a = history_amplitude(&sc, &History::new(["10", "11"])).unwrap();
    assert!((a - c(0.0, 0.8)).norm() < 1e-12);
}

#[test]
fn ghz_with_measurement_after_each_gate() {
    let meas = computational_basis_family(3);
    let lift = |g: qhistory::CMatrix, wires: Vec<usize>| {
        qhistory::quantum::lift_gate(&qhistory::GatePlacement::new(g, wires).unwrap(), 3).unwrap()
    };
    let steps = vec![
        ScheduleStep::new(lift(gates::ry(std::f64::consts::FRAC_PI_2), vec![0]), meas.clone()).unwrap(),
        ScheduleStep::new(lift(gates::cnot(), vec![0, 1]), meas.clone()).unwrap(),
        ScheduleStep::new(lift(gates::cnot(), vec![1, 2]), meas).unwrap(),
    ];
    let sc = Scenario::new(StateVector::basis(3, 0), steps).unwrap();
    let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
    let brute = brute_force_amplitudes(&sc);
    let surviving: Vec<&History> = brute.iter().filter(|(_, a)| a.norm() > 1e-12).map(|(h, _)| h).collect();
    assert_eq!(hv.histories().collect::<Vec<_>>(), surviving);
    assert_eq!(
        hv.histories().cloned().collect::<Vec<_>>(),
        vec![History::new(["000", "000", "000"]), History::new(["100", "110", "111"])]
    );
    for (h, a) in hv.iter() {
        assert!((brute[h] - a).norm() < 1e-12);
        assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
    }
}
