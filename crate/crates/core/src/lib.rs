//! History vectors for small qubit systems.
//!
//! A system is prepared in a pure state and then alternately evolved and
//! measured. Every sequence of measurement outcomes is a *history*; its
//! chain operator gives its probability, and for a nondegenerate final
//! outcome a complex amplitude. Collecting the amplitudes of all possible
//! histories gives the history vector, and observing an outcome collapses
//! that vector onto the compatible histories.
//!
//! The [`wigner`] module builds the Wigner's-friend circuit on top of this,
//! [`oracle`] checks the engine by Born-rule sampling, and [`dsl`] plus
//! [`cli`] expose everything through scenario files and the `qhistory`
//! command.

pub mod cli;
pub mod dsl;
pub mod gates;
pub mod histories;
pub mod linalg;
pub mod oracle;
pub mod quantum;
pub mod random;
pub mod wigner;

pub use histories::{
    chain_operator, collapse_on_outcome, conditional_distribution, enumerate_history_vector,
    history_amplitude, history_probability, marginal_probability, History, HistoryError,
    HistoryVector, Scenario, ScheduleStep, DEFAULT_PRUNE_TOL,
};
pub use linalg::{c, CMatrix, CVector, C64};
pub use quantum::{DensityOperator, GatePlacement, ProjectorFamily, QuantumError, StateVector};
