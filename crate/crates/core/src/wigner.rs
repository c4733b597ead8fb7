//! The Wigner's-friend circuit: system `S` on wire 0, friend `F` on wire 1.
//!
//! `F` starts in `|0>` and records its measurement of `S` through a CNOT
//! (control `S`, target `F`). Seen from outside, the lab evolves unitarily
//! into `a|00> + b|11>`. The schedule has two measurement slots on both
//! wires: one before the CNOT and one after it.

use thiserror::Error;

use crate::gates;
use crate::histories::{
    collapse_where, conditional_where, enumerate_history_vector, marginal_where, HistoryError,
    HistoryVector, Scenario, ScheduleStep, DEFAULT_PRUNE_TOL,
};
use crate::linalg::{CMatrix, CVector, C64};
use crate::quantum::{
    apply_gate, born_update, computational_basis_family, density_from_pure, partial_trace,
    subsystem_family, DensityOperator, GatePlacement, QuantumError, StateVector, NORM_TOL,
    ZERO_PROBABILITY_FLOOR,
};

pub const SYSTEM_WIRE: usize = 0;
pub const FRIEND_WIRE: usize = 1;
/// Step at which W observes the lab, after the friend's CNOT.
pub const W_STEP: usize = 2;

/// Agreement probabilities must equal 1 within this.
pub const AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WignerError {
    #[error("|alpha|^2 + |beta|^2 = {0}, expected 1")]
    NotNormalized(f64),
    #[error("outcome must be \"0\" or \"1\", got {0:?}")]
    BadOutcome(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    History(#[from] HistoryError),
}

fn system_state(alpha: C64, beta: C64) -> Result<StateVector, WignerError> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(WignerError::NotNormalized(n2));
    }
    Ok(StateVector::new(CVector::new(vec![alpha, beta]).map_err(QuantumError::from)?)?)
}

/// `(a|0> + b|1>) ⊗ |0>`.
pub fn initial_lab_state(alpha: C64, beta: C64) -> Result<StateVector, WignerError> {
    Ok(system_state(alpha, beta)?.tensor(&StateVector::basis(1, 0)))
}

fn friend_records() -> GatePlacement {
    GatePlacement::new(gates::cnot(), vec![SYSTEM_WIRE, FRIEND_WIRE]).expect("CNOT is unitary")
}

/// Two-step schedule: measure both wires at `t1`, then CNOT and measure
/// both wires at `t2`.
pub fn build_wigner_scenario(alpha: C64, beta: C64) -> Result<Scenario, WignerError> {
    let initial = initial_lab_state(alpha, beta)?;
    let meas = computational_basis_family(2);
    let steps = vec![
        ScheduleStep::measure_only(meas.clone()),
        ScheduleStep::new(gates::cnot(), meas)?,
    ];
    Ok(Scenario::new(initial, steps)?)
}

fn system_bit(label: &str) -> Option<char> {
    label.chars().nth(SYSTEM_WIRE)
}

fn friend_bit(label: &str) -> Option<char> {
    label.chars().nth(FRIEND_WIRE)
}

/// W measures only `S`, with the rank-2 family `{P0 ⊗ I, P1 ⊗ I}`, on the
/// entangled lab state.
pub fn w_measures_s(
    alpha: C64,
    beta: C64,
    outcome: &str,
) -> Result<(f64, StateVector), WignerError> {
    if outcome != "0" && outcome != "1" {
        return Err(WignerError::BadOutcome(outcome.to_string()));
    }
    let entangled = apply_gate(&initial_lab_state(alpha, beta)?, &friend_records())?;
    let family = subsystem_family(&computational_basis_family(1), &[SYSTEM_WIRE], 2)?;
    Ok(born_update(&entangled, &family, outcome)?)
}

/// One outcome of the friend's own measurement of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FriendOutcome {
    pub label: String,
    pub probability: f64,
    pub state: StateVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerReport {
    pub alpha: C64,
    pub beta: C64,
    /// `a|00> + b|11>` after the friend's CNOT.
    pub entangled_state: StateVector,
    pub rho_sf: DensityOperator,
    /// `Tr_F rho_SF`: W's description of `S` before looking.
    pub rho_s: DensityOperator,
    /// The friend's description of `S`: one collapsed state per possible result.
    pub friend_view: Vec<FriendOutcome>,
    pub hv: HistoryVector,
    /// History vector after W finds `F = 1` at step 2; `None` when that
    /// outcome is impossible.
    pub collapsed_hv_on_f1: Option<HistoryVector>,
    pub agreement_check: bool,
}

/// Whether W's reading of `S` always matches the friend's record.
///
/// Checked on the history vector (conditioning on the `S` bit at step 2
/// puts all weight on histories with the same `F` bit) and on the state
/// (after W's rank-2 measurement of `S`, measuring `F` repeats the result).
pub fn operational_agreement(alpha: C64, beta: C64, hv: &HistoryVector) -> Result<bool, WignerError> {
    let friend_family = subsystem_family(&computational_basis_family(1), &[FRIEND_WIRE], 2)?;
    for s in ['0', '1'] {
        let marginal = marginal_where(hv, W_STEP, |l| system_bit(l) == Some(s))?;
        if marginal < ZERO_PROBABILITY_FLOOR {
            continue;
        }
        let dist = conditional_where(hv, W_STEP, |l| system_bit(l) == Some(s))?;
        let agree: f64 = dist
            .iter()
            .filter(|(h, _)| h.label(W_STEP).and_then(friend_bit) == Some(s))
            .map(|(_, p)| p)
            .sum();
        if (agree - 1.0).abs() > AGREEMENT_TOL {
            return Ok(false);
        }

        let (_, post) = w_measures_s(alpha, beta, &s.to_string())?;
        let (p_same, _) = born_update(&post, &friend_family, &s.to_string())?;
        if (p_same - 1.0).abs() > AGREEMENT_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn run_wigner_report(alpha: C64, beta: C64) -> Result<WignerReport, WignerError> {
    let scenario = build_wigner_scenario(alpha, beta)?;
    let entangled_state = apply_gate(scenario.initial(), &friend_records())?;
    let rho_sf = density_from_pure(&entangled_state);
    let rho_s = partial_trace(&rho_sf, &[SYSTEM_WIRE])?;

    let s_alone = system_state(alpha, beta)?;
    let z_basis = computational_basis_family(1);
    let friend_view = z_basis
        .labels()
        .filter_map(|l| {
            born_update(&s_alone, &z_basis, l)
                .ok()
                .map(|(probability, state)| FriendOutcome {
                    label: l.to_string(),
                    probability,
                    state,
                })
        })
        .collect();

    let hv = enumerate_history_vector(&scenario, DEFAULT_PRUNE_TOL);
    let collapsed_hv_on_f1 = match collapse_where(&hv, W_STEP, |l| friend_bit(l) == Some('1')) {
        Ok(c) => Some(c),
        Err(HistoryError::ImpossibleOutcome { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let agreement_check = operational_agreement(alpha, beta, &hv)?;

    Ok(WignerReport {
        alpha,
        beta,
        entangled_state,
        rho_sf,
        rho_s,
        friend_view,
        hv,
        collapsed_hv_on_f1,
        agreement_check,
    })
}

/// `|a|^2 |0><0| + |b|^2 |1><1|`, the expected reduced state of `S`.
pub fn expected_rho_s(alpha: C64, beta: C64) -> CMatrix {
    CMatrix::diagonal(&[
        C64::new(alpha.norm_sqr(), 0.0),
        C64::new(beta.norm_sqr(), 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::History;
    use crate::linalg::{c, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn h(a: &str, b: &str) -> History {
        History::new([a, b])
    }

    #[test]
    fn no_superposition_gives_one_history() {
        let sc = build_wigner_scenario(c(1.0, 0.0), ZERO).unwrap();
        let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
        assert_eq!(hv.histories().collect::<Vec<_>>(), vec![&h("00", "00")]);
    }

    #[test]
    fn standard_amplitudes() {
        let sc = build_wigner_scenario(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
        assert_eq!(hv.len(), 2);
        assert!((hv.amplitude(&h("00", "00")).unwrap() - c(0.6, 0.0)).norm() < 1e-12);
        assert!((hv.amplitude(&h("10", "11")).unwrap() - c(0.8, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn balanced_superposition_is_fifty_fifty() {
        let s = c(FRAC_1_SQRT_2, 0.0);
        let hv = enumerate_history_vector(&build_wigner_scenario(s, s).unwrap(), DEFAULT_PRUNE_TOL);
        for (_, p) in hv.probabilities() {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalized_coefficients() {
        assert!(matches!(
            build_wigner_scenario(c(0.6, 0.0), c(0.6, 0.0)),
            Err(WignerError::NotNormalized(_))
        ));
    }

    #[test]
    fn report_for_three_four_five() {
        let r = run_wigner_report(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        assert_eq!(r.entangled_state.amplitudes(), &CVector::from_real(&[0.6, 0.0, 0.0, 0.8]));
        assert!(r.rho_s.matrix().max_abs_diff(&expected_rho_s(r.alpha, r.beta)).unwrap() < 1e-12);
        let collapsed = r.collapsed_hv_on_f1.as_ref().unwrap();
        assert_eq!(collapsed.histories().collect::<Vec<_>>(), vec![&h("10", "11")]);
        assert!((collapsed.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(r.agreement_check);
        assert_eq!(r.friend_view.len(), 2);
        assert!((r.friend_view[1].probability - 0.64).abs() < 1e-12);
        assert_eq!(r.friend_view[1].state, StateVector::basis(1, 1));
    }

    #[test]
    fn report_without_superposition() {
        let r = run_wigner_report(c(1.0, 0.0), ZERO).unwrap();
        assert_eq!(r.hv.len(), 1);
        assert!(r.collapsed_hv_on_f1.is_none());
        assert!(r.agreement_check);
        assert_eq!(r.friend_view.len(), 1);
    }

    #[test]
    fn w_measuring_s() {
        let (p, post) = w_measures_s(c(0.6, 0.0), c(0.8, 0.0), "0").unwrap();
        assert!((p - 0.36).abs() < 1e-12);
        assert_eq!(post, StateVector::from_bits("00").unwrap());
        let (p, post) = w_measures_s(c(0.6, 0.0), c(0.8, 0.0), "1").unwrap();
        assert!((p - 0.64).abs() < 1e-12);
        assert!(post.same_ray(&StateVector::from_bits("11").unwrap(), 1e-12));
        assert!(matches!(
            w_measures_s(ZERO, c(1.0, 0.0), "0"),
            Err(WignerError::Quantum(QuantumError::ZeroProbability { .. }))
        ));
        assert!(matches!(
            w_measures_s(ZERO, c(1.0, 0.0), "2"),
            Err(WignerError::BadOutcome(_))
        ));
    }

    #[test]
    fn s_marginal_keeps_alpha_weight_after_friend_branch() {
        let sc = build_wigner_scenario(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
        let p0 = marginal_where(&hv, W_STEP, |l| system_bit(l) == Some('0')).unwrap();
        assert!((p0 - 0.36).abs() <= 1e-12);
    }
}
