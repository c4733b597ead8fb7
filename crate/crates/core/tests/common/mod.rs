#![allow(dead_code)]

use std::collections::BTreeMap;

use qhistory::histories::{final_outcomes, History, Scenario, ScheduleStep};
use qhistory::linalg::{CMatrix, CVector, C64};
use qhistory::quantum::{computational_basis_family, subsystem_family, ProjectorFamily};
use qhistory::random::{random_state, random_unitary};
use rand::Rng;

pub fn random_computational_scenario<R: Rng>(rng: &mut R, max_qubits: usize, max_steps: usize) -> Scenario {
    let n = rng.random_range(1..=max_qubits);
    let steps = rng.random_range(1..=max_steps);
    let meas = computational_basis_family(n);
    let steps = (0..steps)
        .map(|_| ScheduleStep::new(random_unitary(1 << n, rng), meas.clone()).unwrap())
        .collect();
    Scenario::new(random_state(n, rng), steps).unwrap()
}

/// Computational measurement of a random nonempty proper subset of wires,
/// so every outcome projector has rank at least 2.
pub fn random_subsystem_family<R: Rng>(rng: &mut R, n: usize) -> ProjectorFamily {
    assert!(n >= 2);
    let k = rng.random_range(1..n);
    let mut wires: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        wires.swap(i, rng.random_range(0..=i));
    }
    wires.truncate(k);
    subsystem_family(&computational_basis_family(k), &wires, n).unwrap()
}

pub fn random_degenerate_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let n = rng.random_range(2..=3);
    let steps = rng.random_range(1..=3);
    let steps = (0..steps)
        .map(|_| {
            let fam = if rng.random_bool(0.5) {
                random_subsystem_family(rng, n)
            } else {
                computational_basis_family(n)
            };
            ScheduleStep::new(random_unitary(1 << n, rng), fam).unwrap()
        })
        .collect::<Vec<_>>();
    let mut steps = steps;
    let last = steps.len() - 1;
    steps[last] = ScheduleStep::new(random_unitary(1 << n, rng), random_subsystem_family(rng, n)).unwrap();
    Scenario::new(random_state(n, rng), steps).unwrap()
}

/// Every label tuple of the schedule with its amplitude, computed from
/// dense matrix products `<g_n| U_n P_{n-1} ... P_1 U_1 |psi>` over the
/// full Cartesian product of outcomes.
pub fn brute_force_amplitudes(sc: &Scenario) -> BTreeMap<History, C64> {
    let n = sc.num_steps();
    let psi = sc.initial().amplitudes();
    let mut out = BTreeMap::new();
    if n == 0 {
        out.insert(History::new(Vec::<String>::new()), C64::new(1.0, 0.0));
        return out;
    }
    let per_step: Vec<Vec<(String, CMatrix)>> = sc.steps()[..n - 1]
        .iter()
        .map(|s| s.measurement().outcomes().to_vec())
        .collect();
    let finals = final_outcomes(sc.steps()[n - 1].measurement());
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut op = CMatrix::identity(psi.dim());
        let mut labels = Vec::with_capacity(n);
        for (k, &i) in idx.iter().enumerate() {
            let (label, p) = &per_step[k][i];
            op = p.matmul(&sc.steps()[k].evolution().matmul(&op).unwrap()).unwrap();
            labels.push(label.clone());
        }
        let op = sc.steps()[n - 1].evolution().matmul(&op).unwrap();
        let v = op.apply(psi).unwrap();
        for (label, g) in &finals {
            let a: C64 = g.entries().iter().zip(v.entries()).map(|(x, y)| x.conj() * y).sum();
            let mut h = labels.clone();
            h.push(label.clone());
            out.insert(History::new(h), a);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < per_step[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn vec_close(a: &CVector, b: &CVector, tol: f64) -> bool {
    a.dim() == b.dim() && a.entries().iter().zip(b.entries()).all(|(x, y)| (x - y).norm() <= tol)
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}
