//! Measurement schedules, chain operators, history amplitudes and history
//! vectors.
//!
//! A [`Scenario`] starts from a pure state `|psi>` and alternates unitary
//! evolution with projective measurement. A [`History`] picks one outcome
//! label per step. Its chain operator is
//!
//! ```text
//! C = P_n U_n ... P_1 U_1 |psi><psi|
//! ```
//!
//! and its probability is `Tr(C C†)`. When the final projector has rank one,
//! `C = |g_n> A <psi|` and the scalar `A` is the history amplitude.
//!
//! Steps are numbered from 1, matching the discrete times `t_1, t_2, ...`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::linalg::{c, CMatrix, CVector, LinalgError, C64, ONE};
use crate::quantum::{
    projector_range_basis, projector_rank, DensityOperator, ProjectorFamily, QuantumError,
    StateVector, STRUCTURE_TOL, ZERO_PROBABILITY_FLOOR,
};

/// Histories whose amplitude modulus does not exceed this are dropped.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

/// Separator between an outcome label and the index of a rank-1 refinement
/// of a degenerate projector, as in `"0.1"`.
pub const REFINEMENT_SEPARATOR: char = '.';

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("step {step}: evolution is not unitary")]
    NotUnitary { step: usize },
    #[error("step {step}: operator dimension {found} does not match register dimension {expected}")]
    DimensionMismatch {
        step: usize,
        expected: usize,
        found: usize,
    },
    #[error("history has {found} labels but the schedule has {expected} steps")]
    LengthMismatch { expected: usize, found: usize },
    #[error("step {step}: unknown outcome label {label:?}")]
    UnknownLabel { step: usize, label: String },
    #[error("step {step}: final outcome {label:?} is degenerate (rank {rank}); use the trace probability")]
    DegenerateFinalOutcome {
        step: usize,
        label: String,
        rank: usize,
    },
    #[error("step {step} out of range (histories have {len} steps)")]
    StepOutOfRange { step: usize, len: usize },
    #[error("no history is compatible with outcome {label:?} at step {step}")]
    ImpossibleOutcome { step: usize, label: String },
    #[error("conditioning event at step {step} has zero probability")]
    ZeroMarginal { step: usize },
}

/// One time step: unitary evolution `U(t_k, t_{k-1})` followed by a
/// projective measurement, both on the full register.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleStep {
    evolution: CMatrix,
    measurement: ProjectorFamily,
}

impl ScheduleStep {
    pub fn new(evolution: CMatrix, measurement: ProjectorFamily) -> Result<Self, HistoryError> {
        let dim = measurement.dim();
        if evolution.rows() != dim || evolution.cols() != dim {
            return Err(HistoryError::DimensionMismatch {
                step: 0,
                expected: dim,
                found: evolution.rows(),
            });
        }
        if !evolution.is_unitary(STRUCTURE_TOL) {
            return Err(HistoryError::NotUnitary { step: 0 });
        }
        Ok(Self {
            evolution,
            measurement,
        })
    }

    /// A step with no evolution, measuring right away.
    pub fn measure_only(measurement: ProjectorFamily) -> Self {
        let dim = measurement.dim();
        Self {
            evolution: CMatrix::identity(dim),
            measurement,
        }
    }

    pub fn evolution(&self) -> &CMatrix {
        &self.evolution
    }

    pub fn measurement(&self) -> &ProjectorFamily {
        &self.measurement
    }
}

/// Initial pure state plus an ordered measurement schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    initial: StateVector,
    steps: Vec<ScheduleStep>,
}

impl Scenario {
    pub fn new(initial: StateVector, steps: Vec<ScheduleStep>) -> Result<Self, HistoryError> {
        let dim = initial.dim();
        for (i, s) in steps.iter().enumerate() {
            if s.measurement.dim() != dim {
                return Err(HistoryError::DimensionMismatch {
                    step: i + 1,
                    expected: dim,
                    found: s.measurement.dim(),
                });
            }
        }
        Ok(Self { initial, steps })
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.initial.num_qubits()
    }

    fn step(&self, step: usize) -> &ScheduleStep {
        &self.steps[step - 1]
    }

    fn check_history(&self, h: &History) -> Result<(), HistoryError> {
        if h.len() != self.steps.len() {
            return Err(HistoryError::LengthMismatch {
                expected: self.steps.len(),
                found: h.len(),
            });
        }
        Ok(())
    }

    /// Every history label tuple, refining degenerate final outcomes.
    pub fn all_histories(&self) -> Vec<History> {
        let mut out = vec![History::default()];
        for (k, step) in self.steps.iter().enumerate() {
            let labels: Vec<String> = if k + 1 == self.steps.len() {
                final_outcomes(step.measurement())
                    .into_iter()
                    .map(|(l, _)| l)
                    .collect()
            } else {
                step.measurement.labels().map(str::to_string).collect()
            };
            out = out
                .into_iter()
                .flat_map(|h| {
                    labels.iter().map(move |l| {
                        let mut next = h.0.clone();
                        next.push(l.clone());
                        History(next)
                    })
                })
                .collect();
        }
        out
    }
}

/// A sequence of outcome labels, one per schedule step.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History(Vec<String>);

impl History {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self(labels.into_iter().map(Into::into).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Label at a 1-based step.
    pub fn label(&self, step: usize) -> Option<&str> {
        step.checked_sub(1)
            .and_then(|i| self.0.get(i))
            .map(String::as_str)
    }

    /// True when the label at `step` is `label` or a rank-1 refinement of it.
    pub fn matches(&self, step: usize, label: &str) -> bool {
        self.label(step).is_some_and(|l| label_matches(l, label))
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(","))
    }
}

/// `actual` equals `wanted`, or is `wanted` refined as `wanted.k`.
pub fn label_matches(actual: &str, wanted: &str) -> bool {
    actual == wanted
        || actual
            .strip_prefix(wanted)
            .and_then(|rest| rest.strip_prefix(REFINEMENT_SEPARATOR))
            .is_some_and(|idx| !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()))
}

/// Formal superposition of histories: each distinct history is one
/// orthonormal basis element, so the collection is keyed by label tuple.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryVector {
    entries: BTreeMap<History, C64>,
}

impl HistoryVector {
    pub fn from_entries(entries: impl IntoIterator<Item = (History, C64)>) -> Self {
        Self {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by label tuple.
    pub fn iter(&self) -> impl Iterator<Item = (&History, &C64)> {
        self.entries.iter()
    }

    pub fn histories(&self) -> impl Iterator<Item = &History> {
        self.entries.keys()
    }

    pub fn amplitude(&self, h: &History) -> Option<C64> {
        self.entries.get(h).copied()
    }

    /// Squared norm `sum |A|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    /// Number of steps per history, or `None` when empty.
    pub fn history_len(&self) -> Option<usize> {
        self.entries.keys().next().map(History::len)
    }

    fn check_step(&self, step: usize) -> Result<(), HistoryError> {
        let len = self.history_len().unwrap_or(0);
        if step == 0 || step > len {
            return Err(HistoryError::StepOutOfRange { step, len });
        }
        Ok(())
    }

    /// `(history, |A|^2)` pairs in key order.
    pub fn probabilities(&self) -> Vec<(History, f64)> {
        self.entries
            .iter()
            .map(|(h, a)| (h.clone(), a.norm_sqr()))
            .collect()
    }
}

fn unknown_label(step: usize, label: &str) -> HistoryError {
    HistoryError::UnknownLabel {
        step,
        label: label.to_string(),
    }
}

/// Projector for a label, accepting `outcome.k` for the k-th rank-1
/// refinement of a degenerate outcome.
pub fn resolve_projector(
    family: &ProjectorFamily,
    label: &str,
    step: usize,
) -> Result<CMatrix, HistoryError> {
    if let Ok(p) = family.projector(label) {
        return Ok(p.clone());
    }
    let (base, idx) = label
        .rsplit_once(REFINEMENT_SEPARATOR)
        .ok_or_else(|| unknown_label(step, label))?;
    let idx: usize = idx.parse().map_err(|_| unknown_label(step, label))?;
    let p = family.projector(base).map_err(|_| unknown_label(step, label))?;
    if projector_rank(p) < 2 {
        return Err(unknown_label(step, label));
    }
    let basis = projector_range_basis(p);
    let g = basis.get(idx).ok_or_else(|| unknown_label(step, label))?;
    Ok(g.outer(g))
}

/// Outcomes of a final step as `(label, |g>)` with rank-1 projectors
/// `|g><g|`. Degenerate outcomes are split into `label.k`.
pub fn final_outcomes(family: &ProjectorFamily) -> Vec<(String, CVector)> {
    let mut out = Vec::new();
    for (label, p) in family.outcomes() {
        let basis = projector_range_basis(p);
        if basis.len() == 1 {
            out.extend(basis.into_iter().map(|g| (label.clone(), g)));
        } else {
            out.extend(
                basis
                    .into_iter()
                    .enumerate()
                    .map(|(k, g)| (format!("{label}{REFINEMENT_SEPARATOR}{k}"), g)),
            );
        }
    }
    out
}

/// `C = P_n U_n ... P_1 U_1 P_psi`.
pub fn chain_operator(sc: &Scenario, h: &History) -> Result<CMatrix, HistoryError> {
    sc.check_history(h)?;
    let psi = sc.initial.amplitudes();
    let mut chain = psi.outer(psi);
    for (k, label) in h.labels().iter().enumerate() {
        let step = &sc.steps[k];
        let p = resolve_projector(&step.measurement, label, k + 1)?;
        chain = &p * &(&step.evolution * &chain);
    }
    Ok(chain)
}

/// `Tr(C C†)`, defined for any projector rank.
pub fn history_probability(sc: &Scenario, h: &History) -> Result<f64, HistoryError> {
    let chain = chain_operator(sc, h)?;
    Ok((&chain * &chain.adjoint()).trace()?.re)
}

/// `P_n U_n ... P_1 U_1 |psi>` for the labels of `h`.
fn branch_vector(sc: &Scenario, h: &History) -> Result<CVector, HistoryError> {
    let mut v = sc.initial.amplitudes().clone();
    for (k, label) in h.labels().iter().enumerate() {
        let step = &sc.steps[k];
        let p = resolve_projector(&step.measurement, label, k + 1)?;
        v = p.apply(&step.evolution.apply(&v)?)?;
    }
    Ok(v)
}

/// Final-outcome ket `|g_n>` for a rank-1 final label.
fn final_ket(sc: &Scenario, h: &History) -> Result<CVector, HistoryError> {
    let n = sc.num_steps();
    let label = &h.labels()[n - 1];
    let p = resolve_projector(&sc.step(n).measurement, label, n)?;
    let rank = projector_rank(&p);
    if rank != 1 {
        return Err(HistoryError::DegenerateFinalOutcome {
            step: n,
            label: label.clone(),
            rank,
        });
    }
    Ok(projector_range_basis(&p).remove(0))
}

/// History amplitude `A = <g_n| U_n P_{n-1} U_{n-1} ... P_1 U_1 |psi>`.
///
/// The empty history has amplitude 1.
pub fn history_amplitude(sc: &Scenario, h: &History) -> Result<C64, HistoryError> {
    sc.check_history(h)?;
    if h.is_empty() {
        return Ok(ONE);
    }
    let g = final_ket(sc, h)?;
    let v = branch_vector(sc, h)?;
    Ok(g.inner(&v)?)
}

/// Builds the history vector by depth-first branch propagation, keeping the
/// histories with `|A| > prune_tol`.
///
/// A branch whose unnormalized vector already has norm `<= prune_tol` is cut,
/// since later projections and unitaries cannot increase it. Degenerate final
/// outcomes are split into rank-1 refinements labeled `outcome.k`.
pub fn enumerate_history_vector(sc: &Scenario, prune_tol: f64) -> HistoryVector {
    let mut entries = BTreeMap::new();
    let n = sc.num_steps();
    if n == 0 {
        let a = sc.initial.amplitudes().norm_sqr();
        if a > prune_tol {
            entries.insert(History::default(), c(a, 0.0));
        }
        return HistoryVector { entries };
    }
    let finals = final_outcomes(&sc.step(n).measurement);
    let mut labels = Vec::with_capacity(n);
    descend(
        sc,
        0,
        sc.initial.amplitudes().clone(),
        &finals,
        prune_tol,
        &mut labels,
        &mut entries,
    );
    HistoryVector { entries }
}

fn descend(
    sc: &Scenario,
    k: usize,
    v: CVector,
    finals: &[(String, CVector)],
    prune_tol: f64,
    labels: &mut Vec<String>,
    out: &mut BTreeMap<History, C64>,
) {
    let step = &sc.steps[k];
    let evolved = step.evolution.apply(&v).expect("dims checked");
    if k + 1 == sc.steps.len() {
        for (label, g) in finals {
            let a = g.inner(&evolved).expect("dims checked");
            if a.norm() > prune_tol {
                let mut h = labels.clone();
                h.push(label.clone());
                out.insert(History(h), a);
            }
        }
        return;
    }
    for (label, p) in step.measurement.outcomes() {
        let w = p.apply(&evolved).expect("dims checked");
        if w.norm() <= prune_tol {
            continue;
        }
        labels.push(label.clone());
        descend(sc, k + 1, w, finals, prune_tol, labels, out);
        labels.pop();
    }
}

/// Keeps the histories with label `label` (or a refinement of it) at
/// `step` and renormalizes. Relative phases are preserved.
pub fn collapse_on_outcome(
    hv: &HistoryVector,
    step: usize,
    label: &str,
) -> Result<HistoryVector, HistoryError> {
    collapse_where(hv, step, |l| label_matches(l, label)).map_err(|e| match e {
        HistoryError::ImpossibleOutcome { step, .. } => HistoryError::ImpossibleOutcome {
            step,
            label: label.to_string(),
        },
        other => other,
    })
}

/// Collapse onto every history whose label at `step` satisfies `pred`.
pub fn collapse_where(
    hv: &HistoryVector,
    step: usize,
    pred: impl Fn(&str) -> bool,
) -> Result<HistoryVector, HistoryError> {
    hv.check_step(step)?;
    let kept: BTreeMap<History, C64> = hv
        .entries
        .iter()
        .filter(|(h, _)| h.label(step).is_some_and(&pred))
        .map(|(h, a)| (h.clone(), *a))
        .collect();
    let weight: f64 = kept.values().map(|a| a.norm_sqr()).sum();
    if kept.is_empty() || weight < ZERO_PROBABILITY_FLOOR {
        return Err(HistoryError::ImpossibleOutcome {
            step,
            label: String::from("<predicate>"),
        });
    }
    let scale = 1.0 / weight.sqrt();
    Ok(HistoryVector {
        entries: kept.into_iter().map(|(h, a)| (h, a * scale)).collect(),
    })
}

/// `sum |A|^2` over histories with `label` at `step`. Absent labels give 0.
pub fn marginal_probability(
    hv: &HistoryVector,
    step: usize,
    label: &str,
) -> Result<f64, HistoryError> {
    marginal_where(hv, step, |l| label_matches(l, label))
}

pub fn marginal_where(
    hv: &HistoryVector,
    step: usize,
    pred: impl Fn(&str) -> bool,
) -> Result<f64, HistoryError> {
    hv.check_step(step)?;
    Ok(hv
        .entries
        .iter()
        .filter(|(h, _)| h.label(step).is_some_and(&pred))
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Distribution over histories conditioned on `label` at `step`, by Bayes
/// on the `|A|^2` weights. Only compatible histories are listed.
pub fn conditional_distribution(
    hv: &HistoryVector,
    given: (usize, &str),
) -> Result<Vec<(History, f64)>, HistoryError> {
    let (step, label) = given;
    conditional_where(hv, step, |l| label_matches(l, label))
}

pub fn conditional_where(
    hv: &HistoryVector,
    step: usize,
    pred: impl Fn(&str) -> bool,
) -> Result<Vec<(History, f64)>, HistoryError> {
    let marginal = marginal_where(hv, step, &pred)?;
    if marginal < ZERO_PROBABILITY_FLOOR {
        return Err(HistoryError::ZeroMarginal { step });
    }
    Ok(hv
        .entries
        .iter()
        .filter(|(h, _)| h.label(step).is_some_and(&pred))
        .map(|(h, a)| (h.clone(), a.norm_sqr() / marginal))
        .collect())
}

/// Unconditioned state after the evolution of step `step`, before its
/// measurement: earlier measurements act non-selectively, so this is the
/// mixture over all histories of steps `1..step`. Step 0 is the initial
/// state.
pub fn state_before_measurement(
    sc: &Scenario,
    step: usize,
) -> Result<DensityOperator, HistoryError> {
    if step > sc.num_steps() {
        return Err(HistoryError::StepOutOfRange {
            step,
            len: sc.num_steps(),
        });
    }
    let psi = sc.initial.amplitudes();
    let mut rho = psi.outer(psi);
    for k in 1..=step {
        let s = sc.step(k);
        if k > 1 {
            let prev = &sc.step(k - 1).measurement;
            let dim = rho.rows();
            rho = prev
                .outcomes()
                .iter()
                .fold(CMatrix::zeros(dim, dim), |acc, (_, p)| &acc + &(&(p * &rho) * p));
        }
        rho = &(&s.evolution * &rho) * &s.evolution.adjoint();
    }
    Ok(DensityOperator::from_matrix_unchecked(sc.num_qubits(), rho))
}
