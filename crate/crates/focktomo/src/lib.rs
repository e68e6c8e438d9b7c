//! Simulation and tomography of conditionally prepared one- and two-photon
//! states from a noisy pulsed parametric amplifier.
//!
//! The crate covers the full chain: exact phase-space algebra of the
//! preparation ([`phase_space`]), the closed-form conditioned-state model
//! and its reduced parameters ([`model`]), Monte-Carlo homodyne sampling
//! ([`sim`]), and reconstruction by filtered back-projection,
//! maximum-likelihood estimation and moment inversion ([`tomography`]).
//! [`selftest`] runs the end-to-end validation suite used by the CLI and
//! the acceptance tests.

mod dd;
mod scalar;

pub mod model;
pub mod phase_space;
pub mod selftest;
pub mod sim;
pub mod tomography;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("mode index {index} out of range for {n_modes}-mode state")]
    ModeIndex { index: usize, n_modes: usize },
    #[error("cannot remove the last remaining mode")]
    LastMode,
    #[error("point dimension {got} does not match expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid mixture components: {0}")]
    InvalidComponents(&'static str),
    #[error("no conditioning possible at g = 1: coincidence probability vanishes")]
    DegenerateConditioning,
    #[error("empty record set")]
    EmptyRecords,
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { got: usize, need: usize },
    #[error("histogram requires at least 2 phase bins, got {0}")]
    TooFewPhases(usize),
    #[error("histogram contains no counts")]
    EmptyHistogram,
    #[error("moments m2 = {m2}, m4 = {m4} inconsistent with the {channel} model")]
    MomentsInconsistent {
        m2: f64,
        m4: f64,
        channel: &'static str,
    },
}
