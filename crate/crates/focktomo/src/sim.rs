//! Monte-Carlo generation of pulsed homodyne quadrature records from the
//! conditioned-state quadrature distributions.
//!
//! The distributions are phase-independent, so records are i.i.d. draws
//! with local-oscillator phases assigned round-robin from a schedule.
//! Generation is chunked: each chunk derives its own RNG stream from
//! (seed, channel, chunk index), so output is deterministic regardless of
//! thread count.

use crate::model::{moments, Conditioning, ReducedParams};
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// One homodyne sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureRecord {
    /// Local-oscillator phase in [0, pi).
    pub theta: f64,
    /// Measured quadrature value.
    pub x: f64,
    pub channel: Conditioning,
}

/// Local-oscillator phase schedule.
#[derive(Clone, Debug)]
pub enum PhaseSchedule {
    /// K phases uniformly spaced on [0, pi).
    Uniform(usize),
    Explicit(Vec<f64>),
}

impl PhaseSchedule {
    pub fn phases(&self) -> Vec<f64> {
        match self {
            PhaseSchedule::Uniform(k) => (0..*k)
                .map(|i| i as f64 * std::f64::consts::PI / *k as f64)
                .collect(),
            PhaseSchedule::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: ReducedParams,
    /// Records to draw per channel, in order (n0, n1, n2).
    pub counts: [usize; 3],
    pub phases: PhaseSchedule,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let k = self.phases.phases().len();
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "phases",
                value: 0.0,
                constraint: "K >= 1",
            });
        }
        if self.counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidParameter {
                name: "counts",
                value: 0.0,
                constraint: "at least one channel count > 0",
            });
        }
        Ok(())
    }
}

const CHUNK: usize = 8192;

/// Draw all configured channels. Records are ordered n0, n1, n2 and by
/// index within each channel; the stream is a pure function of the seed.
pub fn sample(config: &SimConfig) -> Result<Vec<QuadratureRecord>, Error> {
    config.validate()?;
    let phases = config.phases.phases();
    let mut out = Vec::with_capacity(config.counts.iter().sum());
    for (ci, &channel) in [
        Conditioning::None,
        Conditioning::Single,
        Conditioning::Coincidence,
    ]
    .iter()
    .enumerate()
    {
        let count = config.counts[ci];
        if count == 0 {
            continue;
        }
        let sampler = DensitySampler::new(&config.params, channel);
        let n_chunks = count.div_ceil(CHUNK);
        let chunks: Vec<Vec<QuadratureRecord>> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let start = chunk * CHUNK;
                let len = CHUNK.min(count - start);
                let mut rng = chunk_rng(config.seed, ci as u64, chunk as u64);
                (0..len)
                    .map(|i| {
                        let idx = start + i;
                        QuadratureRecord {
                            theta: phases[idx % phases.len()],
                            x: sampler.draw(&mut rng),
                            channel,
                        }
                    })
                    .collect()
            })
            .collect();
        for c in chunks {
            out.extend(c);
        }
    }
    Ok(out)
}

/// Substream derivation: splitmix64 over (seed, channel, chunk) expands to
/// the 32-byte ChaCha key.
fn chunk_rng(seed: u64, channel: u64, chunk: u64) -> ChaCha8Rng {
    let mut state =
        seed ^ channel.wrapping_mul(0x9e3779b97f4a7c15) ^ chunk.wrapping_mul(0xbf58476d1ce4e5b9);
    let mut key = [0u8; 32];
    for word in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        word.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Exact sampler for the channel quadrature densities.
///
/// The densities are (polynomial in x^2) times a Gaussian, so rejection
/// against a Gaussian whose variance equals the target's second moment has
/// an analytically bounded ratio. The thermal channel is a plain Gaussian
/// transform of uniforms.
pub struct DensitySampler {
    params: ReducedParams,
    channel: Conditioning,
    env_std: f64,
    /// Rejection bound M = sup density/envelope; 1 for the thermal channel.
    bound: f64,
}

impl DensitySampler {
    pub fn new(params: &ReducedParams, channel: Conditioning) -> Self {
        let (m2, _) = moments(params, channel);
        let env_var = m2; // envelope constant c = 1
        let bound = match channel {
            Conditioning::None => 1.0,
            _ => sup_ratio(params, channel, env_var),
        };
        DensitySampler {
            params: *params,
            channel,
            env_std: env_var.sqrt(),
            bound,
        }
    }

    /// Acceptance probability of the rejection loop, 1/M.
    pub fn acceptance(&self) -> f64 {
        1.0 / self.bound
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if let Conditioning::None = self.channel {
            let z: f64 = rng.sample(StandardNormal);
            return z * self.env_std;
        }
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let x = z * self.env_std;
            let ratio = self.ratio(x);
            assert!(
                ratio <= self.bound * (1.0 + 1e-9),
                "rejection envelope violated: ratio {ratio} > bound {} at x = {x}",
                self.bound
            );
            let u: f64 = rng.gen();
            if u * self.bound <= ratio {
                return x;
            }
        }
    }

    fn ratio(&self, x: f64) -> f64 {
        let env_var = self.env_std * self.env_std;
        let g = (-x * x / (2.0 * env_var)).exp() / (2.0 * std::f64::consts::PI * env_var).sqrt();
        self.channel.quad_density(&self.params, x) / g
    }
}

/// Draw one value from the exact density of the given channel.
pub fn sample_density<R: Rng>(rp: &ReducedParams, which: Conditioning, rng: &mut R) -> f64 {
    DensitySampler::new(rp, which).draw(rng)
}

/// Analytic sup of density/envelope for the polynomial-times-Gaussian
/// channels. With q(u) = A + B u + C u^2 in u = x^2 and envelope variance
/// v, the ratio is K q(u) exp(-k u); its stationary points solve a
/// quadratic, so the sup is exact.
fn sup_ratio(rp: &ReducedParams, channel: Conditioning, env_var: f64) -> f64 {
    let s2 = rp.sigma2;
    let d = rp.delta;
    // density = q(u) exp(-u/s2)/sqrt(pi s2), envelope = exp(-u/(2v))/sqrt(2 pi v)
    let (a, b, c) = match channel {
        Conditioning::Single => (1.0 - 0.5 * d, d / s2, 0.0),
        Conditioning::Coincidence => (
            1.0 - d + 3.0 * d * d / 8.0,
            0.5 * (4.0 - 3.0 * d) * d / s2,
            0.5 * d * d / (s2 * s2),
        ),
        Conditioning::None => return 1.0,
    };
    let k = 1.0 / s2 - 1.0 / (2.0 * env_var);
    assert!(k >= -1e-15, "envelope narrower than target");
    let prefactor = (2.0 * env_var / s2).sqrt();
    let phi = |u: f64| (a + b * u + c * u * u) * (-k * u).exp();
    let mut best = phi(0.0);
    // stationary points: -kC u^2 + (2C - kB) u + (B - kA) = 0
    let (qa, qb, qc) = (-k * c, 2.0 * c - k * b, b - k * a);
    if qa.abs() < 1e-300 {
        if qb.abs() > 1e-300 {
            let u = -qc / qb;
            if u > 0.0 {
                best = best.max(phi(u));
            }
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for u in [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)] {
                if u > 0.0 {
                    best = best.max(phi(u));
                }
            }
        }
    }
    prefactor * best
}
