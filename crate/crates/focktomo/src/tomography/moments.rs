//! Fast (sigma2, delta) estimation from the second and fourth moments of
//! the measured quadrature distributions.

use crate::model::{Conditioning, ReducedParams};
use crate::sim::QuadratureRecord;
use crate::Error;

/// Result of a moment inversion.
#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub params: ReducedParams,
    /// For the single-photon channel the quadratic has a second root,
    /// reported as a diagnostic.
    pub rejected_root: Option<ReducedParams>,
    pub m2: f64,
    pub m4: f64,
}

/// Statistical noise can push an estimate slightly past the model's
/// delta in [0, 2]; anything further out is reported as inconsistent.
const DELTA_SLACK: f64 = 0.25;

/// Invert the closed-form moment relations.
///
/// Single-photon channel: m2 = s2 (1+d)/2, m4 = 3 s2^2 (1+2d)/4 give a
/// quadratic in s2; the root with delta in [0, 2] is kept. Coincidence
/// channel: delta is eliminated via d = (2 m2/s2 - 1)/2 and the quartic
/// relation is solved for s2 by bisection on (0, 2 m2].
pub fn invert_moments(m2: f64, m4: f64, which: Conditioning) -> Result<MomentEstimate, Error> {
    match which {
        Conditioning::None => Ok(MomentEstimate {
            params: ReducedParams::new(2.0 * m2, 0.0),
            rejected_root: None,
            m2,
            m4,
        }),
        Conditioning::Single => {
            let mut disc = 4.0 * m2 * m2 - 4.0 * m4 / 3.0;
            // exact Gaussian kurtosis lands at disc = 0 up to rounding
            if disc < 0.0 && disc > -1e-12 * m2 * m2 {
                disc = 0.0;
            }
            if disc < 0.0 {
                return Err(Error::MomentsInconsistent {
                    m2,
                    m4,
                    channel: "single-photon",
                });
            }
            let root = disc.sqrt();
            let s2 = 2.0 * m2 - root;
            let s2_other = 2.0 * m2 + root;
            if s2 <= 0.0 {
                return Err(Error::MomentsInconsistent {
                    m2,
                    m4,
                    channel: "single-photon",
                });
            }
            let delta = 2.0 * m2 / s2 - 1.0;
            let other = ReducedParams::new(s2_other, 2.0 * m2 / s2_other - 1.0);
            if !(-DELTA_SLACK..=2.0 + DELTA_SLACK).contains(&delta) {
                return Err(Error::MomentsInconsistent {
                    m2,
                    m4,
                    channel: "single-photon",
                });
            }
            Ok(MomentEstimate {
                params: ReducedParams::new(s2, delta),
                rejected_root: Some(other),
                m2,
                m4,
            })
        }
        Conditioning::Coincidence => {
            let delta_of = |s2: f64| (2.0 * m2 / s2 - 1.0) / 2.0;
            let f = |s2: f64| {
                let d = delta_of(s2);
                0.75 * s2 * s2 * (1.0 + 4.0 * d + d * d) - m4
            };
            let hi = 2.0 * m2;
            let mut lo = hi * 1e-9;
            // f(0+) = 3 m2^2/4 - m4 < 0 for conditioned data, f(2 m2) =
            // 3 m2^2 - m4 >= 0; expand the bracket if noise flipped an end.
            if f(lo) > 0.0 || f(hi) < 0.0 {
                return Err(Error::MomentsInconsistent {
                    m2,
                    m4,
                    channel: "coincidence",
                });
            }
            let mut a = lo;
            let mut b = hi;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if (b - a) < 1e-14 * hi {
                    break;
                }
            }
            lo = 0.5 * (a + b);
            let s2 = lo;
            let delta = delta_of(s2);
            if !(-DELTA_SLACK..=2.0 + DELTA_SLACK).contains(&delta) {
                return Err(Error::MomentsInconsistent {
                    m2,
                    m4,
                    channel: "coincidence",
                });
            }
            Ok(MomentEstimate {
                params: ReducedParams::new(s2, delta),
                rejected_root: None,
                m2,
                m4,
            })
        }
    }
}

/// Estimate (sigma2, delta) from records of one channel.
pub fn moment_estimate(
    records: &[QuadratureRecord],
    which: Conditioning,
) -> Result<MomentEstimate, Error> {
    if records.len() < 1000 {
        return Err(Error::TooFewRecords {
            got: records.len(),
            need: 1000,
        });
    }
    let n = records.len() as f64;
    let m2 = records.iter().map(|r| r.x * r.x).sum::<f64>() / n;
    let m4 = records.iter().map(|r| r.x.powi(4)).sum::<f64>() / n;
    invert_moments(m2, m4, which)
}
