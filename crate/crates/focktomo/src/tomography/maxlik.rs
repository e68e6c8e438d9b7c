//! Iterative maximum-likelihood density-matrix reconstruction with
//! detector-loss correction.
//!
//! Records are binned per phase and amplitude; each bin's POVM element is
//! the quadrature projector |x><x| dx at the bin center transported
//! through the loss channel of transmission eta. The fixed-point
//! iteration rho <- N[R rho R] with R = sum_j (f_j/p_j) Pi_j increases
//! the log-likelihood monotonically.

use super::QuadratureHistogram;
use crate::model::FockDensityDiagonal;
use crate::sim::QuadratureRecord;
use crate::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct MaxLikConfig {
    /// Detection efficiency corrected for; 1 disables the correction.
    pub eta: f64,
    /// Fock cutoff; matrices are (n_max+1) square.
    pub n_max: usize,
    pub max_iterations: usize,
    /// Relative log-likelihood change that counts as converged.
    pub tol: f64,
    /// Amplitude bins used to compress the records.
    pub n_bins: usize,
}

impl Default for MaxLikConfig {
    fn default() -> Self {
        MaxLikConfig {
            eta: 1.0,
            n_max: 12,
            max_iterations: 2000,
            tol: 1e-9,
            n_bins: 128,
        }
    }
}

/// Reconstructed density matrix in the Fock basis.
#[derive(Clone, Debug)]
pub struct DensityMatrixEstimate {
    pub rho: DMatrix<Complex64>,
    pub eta: f64,
    /// Per-record average log-likelihood after each iteration.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl DensityMatrixEstimate {
    pub fn diagonal(&self) -> FockDensityDiagonal {
        let values: Vec<f64> = (0..self.rho.nrows()).map(|n| self.rho[(n, n)].re).collect();
        FockDensityDiagonal {
            n_max: values.len() - 1,
            values,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rho.nrows()).map(|n| self.rho[(n, n)].re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Harmonic-oscillator eigenfunctions psi_0..psi_nmax at x, with
/// psi_0(x) = pi^{-1/4} exp(-x^2/2) (vacuum quadrature variance 1/2).
pub(crate) fn oscillator_wavefunctions(x: f64, n_max: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max >= 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for n in 2..=n_max {
        let nf = n as f64;
        let v = (2.0 / nf).sqrt() * x * psi[n - 1] - ((nf - 1.0) / nf).sqrt() * psi[n - 2];
        psi.push(v);
    }
    psi
}

/// Binomial (beamsplitter) loss channel on a Fock-basis density matrix.
pub fn loss_channel(rho: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = rho.nrows();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        for m in 0..d - k {
            for n in 0..d - k {
                let amp = kraus_amp(m + k, k, eta) * kraus_amp(n + k, k, eta);
                out[(m, n)] += rho[(m + k, n + k)] * Complex64::from(amp);
            }
        }
    }
    out
}

/// Adjoint of the loss channel (acts on POVM elements).
pub fn loss_channel_adjoint(x: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = x.nrows();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        for m in k..d {
            for n in k..d {
                let amp = kraus_amp(m, k, eta) * kraus_amp(n, k, eta);
                out[(m, n)] += x[(m - k, n - k)] * Complex64::from(amp);
            }
        }
    }
    out
}

/// <n-k| A_k |n> for the loss Kraus operator: sqrt(C(n,k) eta^{n-k} (1-eta)^k).
fn kraus_amp(n: usize, k: usize, eta: f64) -> f64 {
    let mut binom = 1.0f64;
    for i in 0..k {
        binom *= (n - i) as f64 / (i + 1) as f64;
    }
    (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
}

struct Bin {
    frequency: f64,
    povm: DMatrix<Complex64>,
}

/// POVM element for one (theta, x) bin: the quadrature projector times the
/// bin width, pulled back through the loss channel.
fn povm_element(theta: f64, x: f64, dx: f64, cfg: &MaxLikConfig) -> DMatrix<Complex64> {
    let d = cfg.n_max + 1;
    let phases: Vec<Complex64> = (0..d)
        .map(|n| Complex64::from_polar(1.0, n as f64 * theta))
        .collect();
    let psi = oscillator_wavefunctions(x, cfg.n_max);
    let mut povm = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            // <m|x_theta><x_theta|n> dx
            povm[(m, n)] = phases[m].conj() * phases[n] * Complex64::from(psi[m] * psi[n] * dx);
        }
    }
    if cfg.eta < 1.0 {
        loss_channel_adjoint(&povm, cfg.eta)
    } else {
        povm
    }
}

fn build_bins(h: &QuadratureHistogram, cfg: &MaxLikConfig) -> Vec<Bin> {
    let dx = h.bin_width();
    let mut bins = Vec::new();
    for (k, &theta) in h.phases.iter().enumerate() {
        for b in 0..h.n_bins() {
            let c = h.counts[k][b];
            if c <= 0.0 {
                continue;
            }
            bins.push(Bin {
                frequency: c / h.total,
                povm: povm_element(theta, h.bin_center(b), dx, cfg),
            });
        }
    }
    bins
}

/// Bin probabilities Tr(rho Pi_kb) under the same POVM discretization the
/// iteration uses; indexed `[phase][bin]`.
pub fn bin_probabilities(
    h: &QuadratureHistogram,
    cfg: &MaxLikConfig,
    rho: &DMatrix<Complex64>,
) -> Vec<Vec<f64>> {
    let dx = h.bin_width();
    h.phases
        .iter()
        .map(|&theta| {
            (0..h.n_bins())
                .map(|b| {
                    let povm = povm_element(theta, h.bin_center(b), dx, cfg);
                    (rho * povm).trace().re
                })
                .collect()
        })
        .collect()
}

/// Run the MaxLik iteration on a set of records.
pub fn maxlik_reconstruct(
    records: &[QuadratureRecord],
    cfg: &MaxLikConfig,
) -> Result<DensityMatrixEstimate, Error> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: cfg.eta,
            constraint: "0 < eta <= 1",
        });
    }
    let k_phases = {
        let mut seen: Vec<u64> = records.iter().map(|r| r.theta.to_bits()).collect();
        seen.sort_unstable();
        seen.dedup();
        // data with continuously spread phases still gets a sane binning
        seen.len().min(64)
    };
    let h = QuadratureHistogram::from_records(records, k_phases, cfg.n_bins)?;
    maxlik_from_histogram(&h, cfg)
}

/// Same iteration starting from a pre-binned histogram (used by tests
/// that feed exact probabilities).
pub fn maxlik_from_histogram(
    h: &QuadratureHistogram,
    cfg: &MaxLikConfig,
) -> Result<DensityMatrixEstimate, Error> {
    maxlik_with_start(h, cfg, None)
}

/// Iteration with an explicit starting state (defaults to the maximally
/// mixed state on the truncated space).
pub fn maxlik_with_start(
    h: &QuadratureHistogram,
    cfg: &MaxLikConfig,
    start: Option<DMatrix<Complex64>>,
) -> Result<DensityMatrixEstimate, Error> {
    if h.total <= 0.0 {
        return Err(Error::EmptyHistogram);
    }
    let bins = build_bins(h, cfg);
    let d = cfg.n_max + 1;
    let mut rho: DMatrix<Complex64> = start
        .unwrap_or_else(|| DMatrix::from_diagonal_element(d, d, Complex64::from(1.0 / d as f64)));
    let mut log_likelihood: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let mut r_op: DMatrix<Complex64> = DMatrix::zeros(d, d);
        let mut ll = 0.0;
        for bin in &bins {
            let mut p = 0.0;
            for m in 0..d {
                for n in 0..d {
                    p += (rho[(m, n)] * bin.povm[(n, m)]).re;
                }
            }
            let p = p.max(1e-300);
            ll += bin.frequency * p.ln();
            let scale = Complex64::from(bin.frequency / p);
            r_op.zip_apply(&bin.povm, |r, b| *r += scale * b);
        }
        if let Some(&prev) = log_likelihood.last() {
            assert!(
                ll >= prev - prev.abs() * 1e-12,
                "log-likelihood decreased: {prev} -> {ll}"
            );
            if (ll - prev).abs() <= cfg.tol * prev.abs() {
                log_likelihood.push(ll);
                converged = true;
                break;
            }
        }
        log_likelihood.push(ll);
        let next = &r_op * &rho * &r_op;
        let trace: f64 = (0..d).map(|n| next[(n, n)].re).sum();
        rho = next / Complex64::from(trace);
        // keep exact Hermiticity against rounding drift
        for m in 0..d {
            for n in 0..m {
                let avg = 0.5 * (rho[(m, n)] + rho[(n, m)].conj());
                rho[(m, n)] = avg;
                rho[(n, m)] = avg.conj();
            }
            rho[(m, m)] = Complex64::from(rho[(m, m)].re);
        }
    }
    Ok(DensityMatrixEstimate {
        rho,
        eta: cfg.eta,
        log_likelihood,
        converged,
        iterations,
    })
}
