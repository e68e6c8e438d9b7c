//! Closed-form model of the unconditioned (n=0), single-click (n=1) and
//! coincidence (n=2) conditioned states, plus the exact conditioning
//! pipeline built on the phase-space algebra.
//!
//! Every conditioned state is described by two reduced parameters:
//! sigma2, the quadrature-variance parameter of the unconditioned thermal
//! state, and delta, the non-classicality parameter (0 = thermal, 2 =
//! ideal Fock state, delta > 1 iff the Wigner function goes negative).

use crate::dd::Dd;
use crate::phase_space::{GMixture, SignedGaussianMixture};
use crate::scalar::Scalar;
use crate::Error;

/// Physical parameters of the preparation and detection chain.
///
/// Defaults are the reference operating point: g = 1.07, gamma = 0.4, xi = 0.9, eta = 0.80, e = 0, mu = 6%.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Parametric gain of the amplifier (>= 1).
    pub g: f64,
    /// Ratio of undesired to desired amplification; excess gain is
    /// h = cosh^2(gamma * r).
    pub gamma: f64,
    /// Modal overlap: probability that a conditioning click heralds a
    /// photon in the analyzed mode.
    pub xi: f64,
    /// Homodyne detection efficiency (0, 1].
    pub eta: f64,
    /// Homodyne excess noise, additive variance e/2 per quadrature.
    pub e: f64,
    /// APD channel efficiency (0, 1].
    pub mu: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            g: 1.07,
            gamma: 0.4,
            xi: 0.9,
            eta: 0.80,
            e: 0.0,
            mu: 0.06,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), Error> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            ("g", self.g, self.g >= 1.0, "g >= 1"),
            ("gamma", self.gamma, self.gamma >= 0.0, "gamma >= 0"),
            (
                "xi",
                self.xi,
                (0.0..=1.0).contains(&self.xi),
                "0 <= xi <= 1",
            ),
            (
                "eta",
                self.eta,
                self.eta > 0.0 && self.eta <= 1.0,
                "0 < eta <= 1",
            ),
            ("e", self.e, self.e >= 0.0, "e >= 0"),
            (
                "mu",
                self.mu,
                self.mu > 0.0 && self.mu <= 1.0,
                "0 < mu <= 1",
            ),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    constraint,
                });
            }
        }
        Ok(())
    }

    /// Squeezing parameter r with cosh^2 r = g.
    pub fn r(&self) -> f64 {
        self.g.sqrt().acosh()
    }

    /// Excess gain h = cosh^2(gamma r) >= 1.
    pub fn h(&self) -> f64 {
        let c = (self.gamma * self.r()).cosh();
        c * c
    }

    /// Two-mode variance squeezing factor s = exp(-2r).
    pub fn s(&self) -> f64 {
        (-2.0 * self.r()).exp()
    }

    /// Same chain with an ideal homodyne detector (eta = 1, e = 0): the
    /// generated state rather than the measured one.
    pub fn corrected(&self) -> Self {
        PhysicalParams {
            eta: 1.0,
            e: 0.0,
            ..*self
        }
    }
}

/// Reduced description (sigma2, delta) of every conditioned state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedParams {
    pub sigma2: f64,
    pub delta: f64,
}

impl ReducedParams {
    pub fn new(sigma2: f64, delta: f64) -> Self {
        ReducedParams { sigma2, delta }
    }

    /// The ideal limit: pure Fock states.
    pub fn ideal() -> Self {
        ReducedParams {
            sigma2: 1.0,
            delta: 2.0,
        }
    }
}

/// sigma^2 = 2 eta (h g - 1) + 1 + e and
/// delta = 2 xi eta h^2 g (g - 1) / [sigma^2 (h g - 1)].
///
/// At g = 1 both numerator and denominator of delta vanish; the physical
/// limit of no conditioning is thermal, so delta is defined as 0 there.
pub fn reduce(p: &PhysicalParams) -> ReducedParams {
    let h = p.h();
    let sigma2 = 2.0 * p.eta * (h * p.g - 1.0) + 1.0 + p.e;
    let delta = if p.g == 1.0 {
        0.0
    } else {
        2.0 * p.xi * p.eta * h * h * p.g * (p.g - 1.0) / (sigma2 * (h * p.g - 1.0))
    };
    ReducedParams { sigma2, delta }
}

/// Two-photon conditioned Wigner function as a function of R^2 = x^2 + p^2.
pub fn w2_radial(rp: &ReducedParams, r2: f64) -> f64 {
    let s2 = rp.sigma2;
    let d = rp.delta;
    let u = r2 / s2;
    ((1.0 - d) * (1.0 - d) + 2.0 * (1.0 - d) * d * u + 0.5 * d * d * u * u) * (-u).exp()
        / (std::f64::consts::PI * s2)
}

/// Single-photon conditioned Wigner function as a function of R^2.
pub fn w1_radial(rp: &ReducedParams, r2: f64) -> f64 {
    let s2 = rp.sigma2;
    let d = rp.delta;
    let u = r2 / s2;
    (1.0 - d + d * u) * (-u).exp() / (std::f64::consts::PI * s2)
}

pub fn wigner_w2(rp: &ReducedParams, x: f64, p: f64) -> f64 {
    w2_radial(rp, x * x + p * p)
}

pub fn wigner_w1(rp: &ReducedParams, x: f64, p: f64) -> f64 {
    w1_radial(rp, x * x + p * p)
}

/// Quadrature distribution of the two-photon conditioned state; the same
/// at every local-oscillator phase.
pub fn quad_p2(rp: &ReducedParams, x: f64) -> f64 {
    let s2 = rp.sigma2;
    let d = rp.delta;
    let y = x * x / s2;
    let poly = 1.0 - d + 3.0 * d * d / 8.0 + 0.5 * (4.0 - 3.0 * d) * d * y + 0.5 * d * d * y * y;
    poly * (-y).exp() / (std::f64::consts::PI * s2).sqrt()
}

/// Quadrature distribution of the single-photon conditioned state.
pub fn quad_p1(rp: &ReducedParams, x: f64) -> f64 {
    let s2 = rp.sigma2;
    let d = rp.delta;
    let y = x * x / s2;
    (1.0 - 0.5 * d + d * y) * (-y).exp() / (std::f64::consts::PI * s2).sqrt()
}

/// Thermal (unconditioned) quadrature distribution.
pub fn quad_p0(rp: &ReducedParams, x: f64) -> f64 {
    let s2 = rp.sigma2;
    (-x * x / s2).exp() / (std::f64::consts::PI * s2).sqrt()
}

/// Conditioning channel: which click pattern prepared the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Conditioning {
    /// No conditioning: thermal state.
    None,
    /// Single APD click.
    Single,
    /// APD coincidence.
    Coincidence,
}

impl Conditioning {
    pub fn quad_density(&self, rp: &ReducedParams, x: f64) -> f64 {
        match self {
            Conditioning::None => quad_p0(rp, x),
            Conditioning::Single => quad_p1(rp, x),
            Conditioning::Coincidence => quad_p2(rp, x),
        }
    }
}

/// Closed-form second and fourth moments of the quadrature distributions.
pub fn moments(rp: &ReducedParams, which: Conditioning) -> (f64, f64) {
    let s2 = rp.sigma2;
    let d = rp.delta;
    match which {
        Conditioning::None => (s2 / 2.0, 0.75 * s2 * s2),
        Conditioning::Single => (s2 * (1.0 + d) / 2.0, 0.75 * s2 * s2 * (1.0 + 2.0 * d)),
        Conditioning::Coincidence => (
            s2 * (1.0 + 2.0 * d) / 2.0,
            0.75 * s2 * s2 * (1.0 + 4.0 * d + d * d),
        ),
    }
}

/// Diagonal density-matrix coefficients <n|rho|n> up to a cutoff.
#[derive(Clone, Debug)]
pub struct FockDensityDiagonal {
    pub values: Vec<f64>,
    pub n_max: usize,
}

impl FockDensityDiagonal {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean_photons(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| n as f64 * v)
            .sum()
    }

    /// Indices of (numerically) negative entries; nonempty only for
    /// unphysical (sigma2, delta) combinations.
    pub fn negative_entries(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -1e-12)
            .map(|(n, _)| n)
            .collect()
    }
}

/// S_n = sigma^4 (1 - delta) + sigma^2 delta (1 + 2n) - 1, written in
/// t = sigma^2 - 1 so the conditioned diagonals stay finite at sigma2 = 1:
/// S_n = 2 n delta + t (2 - delta + 2 n delta) + t^2 (1 - delta).
fn s_n(t: f64, d: f64, n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * d + t * (2.0 - d + 2.0 * nf * d) + t * t * (1.0 - d)
}

/// Fock-basis diagonals of the conditioned states.
///
/// The raw closed forms carry (sigma^2-1)^(n-2) and (sigma^2-1)^(n-1)
/// poles at small n which cancel against factors of S_n; the cancelled
/// polynomial forms are used for those entries, valid for every sigma2.
pub fn fock_diagonals(
    rp: &ReducedParams,
    which: Conditioning,
    n_max: usize,
) -> Result<FockDensityDiagonal, Error> {
    if n_max < 2 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            value: n_max as f64,
            constraint: "n_max >= 2",
        });
    }
    let s2 = rp.sigma2;
    let d = rp.delta;
    let t = s2 - 1.0;
    let sp = s2 + 1.0; // sigma^2 + 1
    let mut values = Vec::with_capacity(n_max + 1);
    match which {
        Conditioning::None => {
            for n in 0..=n_max {
                values.push(2.0 * powi(t, n as i32) / powi(sp, n as i32 + 1));
            }
        }
        Conditioning::Single => {
            // n = 0: S_0 / t = (2 - d) + t (1 - d) exactly.
            values.push(2.0 * ((2.0 - d) + t * (1.0 - d)) / powi(sp, 2));
            for n in 1..=n_max {
                values.push(2.0 * s_n(t, d, n) * powi(t, n as i32 - 1) / powi(sp, n as i32 + 2));
            }
        }
        Conditioning::Coincidence => {
            // n = 0: bracket = S_0^2, and S_0 / t is polynomial.
            let s0_over_t = (2.0 - d) + t * (1.0 - d);
            values.push(2.0 * s0_over_t * s0_over_t / powi(sp, 3));
            // n = 1: bracket = S_1^2 - 4 d^2 sigma^4; divided by t:
            // 4d(2-d) + t(4 + 8d - 7d^2) + 2t^2(2+d)(1-d) + t^3(1-d)^2.
            let b1_over_t = 4.0 * d * (2.0 - d)
                + t * (4.0 + 8.0 * d - 7.0 * d * d)
                + 2.0 * t * t * (2.0 + d) * (1.0 - d)
                + t * t * t * (1.0 - d) * (1.0 - d);
            values.push(2.0 * b1_over_t / powi(sp, 4));
            for n in 2..=n_max {
                let nf = n as f64;
                let sn = s_n(t, d, n);
                let bracket = sn * sn - 2.0 * nf * (nf + 1.0) * d * d * s2 * s2;
                values.push(2.0 * powi(t, n as i32 - 2) * bracket / powi(sp, n as i32 + 3));
            }
        }
    }
    Ok(FockDensityDiagonal { values, n_max })
}

fn powi(x: f64, n: i32) -> f64 {
    // 0^0 = 1 keeps the n = 2 coincidence entry finite at sigma2 = 1.
    x.powi(n)
}

/// Output of the exact conditioning pipeline.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// Conditioned single-mode state of the homodyne arm. At APD
    /// efficiencies well below ~1e-2 the component weights grow like the
    /// inverse coincidence probability and direct f64 evaluation loses
    /// accuracy; use [`exact_pipeline_wigner`] for tight comparisons there.
    pub state: SignedGaussianMixture,
    /// Single-click probability, 1/N1.
    pub click_probability: f64,
    /// Coincidence probability, 1/N2.
    pub coincidence_probability: f64,
}

/// Run the full conditioning chain and return the two-photon conditioned
/// state of the homodyne mode.
///
/// Steps: two-mode squeezed state with excess gain; homodyne loss eta and
/// excess noise e on the analyzed mode; APD channel loss mu; 50/50 split
/// of the conditioning mode; combination of the click/no-click projections
/// weighted by the modal overlap xi; trace over the APD modes.
pub fn exact_pipeline(p: &PhysicalParams) -> Result<PipelineResult, Error> {
    p.validate()?;
    if p.g == 1.0 {
        return Err(Error::DegenerateConditioning);
    }
    let (mix, click, coincidence) = pipeline_core::<Dd>(p);
    let state = SignedGaussianMixture {
        inner: mix.map_f64(),
    }
    .pruned(1e-15);
    Ok(PipelineResult {
        state,
        click_probability: click.to_f64(),
        coincidence_probability: coincidence.to_f64(),
    })
}

/// Evaluate the pipeline's conditioned Wigner function at the given (x, p)
/// points entirely in extended precision.
///
/// The conditioned mixture is a sum of Gaussians whose weights diverge as
/// the coincidence probability shrinks (~mu^2) while the values stay O(1);
/// this path keeps the cancellation exact to well below 1e-12 even at
/// mu = 1e-4.
pub fn exact_pipeline_wigner(p: &PhysicalParams, points: &[(f64, f64)]) -> Result<Vec<f64>, Error> {
    p.validate()?;
    if p.g == 1.0 {
        return Err(Error::DegenerateConditioning);
    }
    let (mix, _, _) = pipeline_core::<Dd>(p);
    let prep = mix.prepare();
    Ok(points
        .iter()
        .map(|&(x, p)| prep.eval(&[Dd::from_f64(x), Dd::from_f64(p)]).to_f64())
        .collect())
}

/// The appendix chain on generic scalars. Returns (conditioned mixture,
/// click probability 1/N1, coincidence probability 1/N2).
fn pipeline_core<T: Scalar>(p: &PhysicalParams) -> (GMixture<T>, T, T) {
    let one = T::ONE;
    let half = T::from_f64(0.5);
    let g = T::from_f64(p.g);
    let h = T::from_f64(p.h());
    let eta = T::from_f64(p.eta);
    let xi = T::from_f64(p.xi);
    let mu = T::from_f64(p.mu);

    // Mode 0: homodyne arm. Mode 1: conditioning arm.
    let mut state = GMixture::two_mode_squeezed(g, h).apply_loss(0, eta);
    if p.e != 0.0 {
        // Excess homodyne noise: additive variance e/2 per quadrature.
        let e_half = T::from_f64(p.e) * half;
        for comp in &mut state.components {
            let v0 = comp.cov.get(0, 0);
            let v1 = comp.cov.get(1, 1);
            comp.cov.set(0, 0, v0 + e_half);
            comp.cov.set(1, 1, v1 + e_half);
        }
    }
    // APD channel loss, then 50/50 split -> modes (H, A, B).
    let mix = state.apply_loss(1, mu).balanced_split(1);

    // Vacuum projections of the APD modes.
    let (proj_a, p_a) = mix.project_vacuum(1); // leaves (H, B)
    let (proj_b, p_b) = mix.project_vacuum(2); // leaves (H, A)
    let (proj_ab, p_ab) = proj_b.project_vacuum(1); // leaves (H)

    let t0 = mix.trace_out(2).trace_out(1);
    let ta = proj_a.trace_out(1);
    let tb = proj_b.trace_out(1);

    // N1^-1 = 1 - p_vac(A); N2^-1 = 1 - p_A - p_B + p_AB.
    let click = one - p_a;
    let coincidence = one - p_a - p_b + p_ab;
    let n1 = one / click;
    let n2 = one / coincidence;

    let c_full = n2 * xi * xi + (one + one) * n1 * xi * (one - xi) + (one - xi) * (one - xi);
    let c_single = n2 * xi * xi + n1 * xi * (one - xi);

    let mut out = t0.scaled(c_full);
    out.append(ta.scaled(-c_single));
    out.append(tb.scaled(-c_single));
    out.append(proj_ab.scaled(n2 * xi * xi));
    let out = out.merged(1e-13);
    (out, click, coincidence)
}
