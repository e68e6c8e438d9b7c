//! Critical Wigner-function values: the global minimum and the value at
//! the origin.

use crate::model::{w1_radial, w2_radial, Conditioning, ReducedParams};

/// Critical values of a closed-form conditioned state: coarse radial scan
/// followed by golden-section refinement. The Wigner functions decay to
/// zero at infinity, so a positive interior minimum reports as 0.
pub fn critical_values_model(rp: &ReducedParams, which: Conditioning) -> (f64, f64) {
    let profile = |r: f64| -> f64 {
        match which {
            Conditioning::None => w2_radial(&ReducedParams::new(rp.sigma2, 0.0), r * r),
            Conditioning::Single => w1_radial(rp, r * r),
            Conditioning::Coincidence => w2_radial(rp, r * r),
        }
    };
    let r_hi = 8.0 * rp.sigma2.sqrt();
    let n_scan = 2048;
    let mut best_k: usize = 0;
    let mut best = f64::INFINITY;
    for k in 0..=n_scan {
        let v = profile(r_hi * k as f64 / n_scan as f64);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let lo = r_hi * best_k.saturating_sub(1) as f64 / n_scan as f64;
    let hi = r_hi * (best_k + 1).min(n_scan) as f64 / n_scan as f64;
    let refined = golden_min(profile, lo, hi, 1e-10);
    (refined.min(0.0), profile(0.0))
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}
