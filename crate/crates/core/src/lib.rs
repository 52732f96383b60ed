//! Functional-link adaptive filters with combined sparse regularization.
//!
//! The nonlinear branch expands the input window through a trigonometric
//! functional-link set and feeds two sparse filters: a proportionate filter
//! with a reweighted zero attractor ([`filters::ZaFlaf`]) and a classic
//! proportionate filter ([`filters::ProportionateFlaf`]). Their outputs are
//! mixed block by block ([`combiner`]) alongside a linear NLMS branch. The
//! [`plant`] and [`experiment`] modules reproduce Monte Carlo
//! nonlinear-system-identification runs.

// Negated comparisons are used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combiner;
pub mod config;
pub mod error;
pub mod expansion;
pub mod experiment;
pub mod filters;
pub mod plant;
pub mod selftest;

pub use combiner::{
    BranchOutputs, CombinedFilter, CombinerParams, CombinerState, StandaloneFilter,
};
pub use error::{FlafError, Result};
pub use expansion::{expand, BlockLayout, ExpansionConfig, StreamingExpander};
pub use experiment::{Algorithm, EmseTrace, ExperimentConfig, Hyperparams};
pub use filters::{LinearFilter, ProportionateFlaf, ZaFlaf};
pub use plant::{PlantSpec, SignalBundle, ZetaSchedule};
