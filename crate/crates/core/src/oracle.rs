//! Monte Carlo check of history probabilities.
//!
//! Each shot walks the schedule like a laboratory would: evolve, draw an
//! outcome with Born probabilities, collapse, record the label. Empirical
//! frequencies are then compared with the exact history weights.
//!
//! Shot `i` uses a ChaCha8 generator seeded with the run seed on stream `i`,
//! so the counts do not depend on how shots are spread across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::histories::{History, HistoryVector, Scenario, REFINEMENT_SEPARATOR};
use crate::linalg::{c, CVector};

/// Largest accepted per-history |z| score.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("at least one shot is required")]
    NoShots,
    #[error("history {0} was sampled but has no weight in the history vector")]
    EngineMismatch(History),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    shots: u64,
    seed: u64,
    counts: BTreeMap<History, u64>,
}

impl SampleReport {
    /// Builds a report from explicit counts; `shots` is their sum.
    pub fn from_counts(seed: u64, counts: BTreeMap<History, u64>) -> Self {
        let shots = counts.values().sum();
        Self {
            shots,
            seed,
            counts,
        }
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self) -> &BTreeMap<History, u64> {
        &self.counts
    }
}

/// One row of [`compare_to_engine`].
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub history: History,
    pub count: u64,
    pub empirical: f64,
    pub exact: f64,
    pub z_score: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.z_score.abs() <= Z_LIMIT
    }
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

fn run_shot(sc: &Scenario, rng: &mut ChaCha8Rng) -> History {
    let mut v = sc.initial().amplitudes().clone();
    let mut labels = Vec::with_capacity(sc.num_steps());
    for step in sc.steps() {
        let evolved = step.evolution().apply(&v).expect("dims checked");
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen: Option<(&str, CVector, f64)> = None;
        for (label, p) in step.measurement().outcomes() {
            let w = p.apply(&evolved).expect("dims checked");
            let prob = w.norm_sqr();
            if prob <= 0.0 {
                continue;
            }
            acc += prob;
            chosen = Some((label, w, prob));
            if r < acc {
                break;
            }
        }
        // Round-off can leave `acc` a hair below `r`; the last nonzero
        // outcome absorbs the remainder.
        let (label, w, prob) = chosen.expect("complete family has a nonzero outcome");
        v = w.scale(c(1.0 / prob.sqrt(), 0.0));
        labels.push(label.to_string());
    }
    History::new(labels)
}

/// Samples `shots` independent runs of the schedule.
pub fn sample_histories(sc: &Scenario, shots: u64, seed: u64) -> Result<SampleReport, OracleError> {
    if shots == 0 {
        return Err(OracleError::NoShots);
    }
    let counts = (0..shots)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<History, u64>, shot| {
            let h = run_shot(sc, &mut shot_rng(seed, shot));
            *acc.entry(h).or_default() += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (h, n) in b {
                *a.entry(h).or_default() += n;
            }
            a
        });
    Ok(SampleReport {
        shots,
        seed,
        counts,
    })
}

/// Drops the `.k` refinement suffix that enumeration adds to degenerate
/// final outcomes; sampling records the unrefined outcome.
fn unrefined(h: &History) -> History {
    History::new(h.labels().iter().map(|l| match l.split_once(REFINEMENT_SEPARATOR) {
        Some((base, _)) => base.to_string(),
        None => l.clone(),
    }))
}

/// Per-history binomial z-scores of sampled frequencies against `|A|^2`.
///
/// Rows cover every history that was sampled or carries weight in `hv`, in
/// label order.
pub fn compare_to_engine(
    report: &SampleReport,
    hv: &HistoryVector,
) -> Result<Vec<Comparison>, OracleError> {
    if report.shots == 0 {
        return Err(OracleError::NoShots);
    }
    let mut exact: BTreeMap<History, f64> = BTreeMap::new();
    for (h, a) in hv.iter() {
        *exact.entry(unrefined(h)).or_default() += a.norm_sqr();
    }
    for h in report.counts.keys() {
        if !exact.contains_key(h) {
            return Err(OracleError::EngineMismatch(h.clone()));
        }
    }
    let n = report.shots as f64;
    Ok(exact
        .into_iter()
        .map(|(history, p)| {
            let p = p.clamp(0.0, 1.0);
            let count = report.counts.get(&history).copied().unwrap_or(0);
            let empirical = count as f64 / n;
            let sigma = (p * (1.0 - p) / n).sqrt();
            let diff = empirical - p;
            let z_score = if sigma > 0.0 {
                diff / sigma
            } else if diff.abs() <= 1e-12 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            Comparison {
                history,
                count,
                empirical,
                exact: p,
                z_score,
            }
        })
        .collect())
}
