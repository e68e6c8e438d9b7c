//! Reconstruction of states from quadrature records: histogramming,
//! filtered back-projection, maximum-likelihood estimation with loss
//! correction, and the fast moment estimator.

pub mod critical;
mod histogram;
mod maxlik;
mod moments;
mod radon;

pub use critical::critical_values_model;
pub use histogram::QuadratureHistogram;
pub use maxlik::{
    bin_probabilities, loss_channel, loss_channel_adjoint, maxlik_from_histogram,
    maxlik_reconstruct, maxlik_with_start, DensityMatrixEstimate, MaxLikConfig,
};
pub use moments::{invert_moments, moment_estimate, MomentEstimate};
pub use radon::{radon_reconstruct, radon_reconstruct_on, WignerGrid};
