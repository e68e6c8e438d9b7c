//! Inverse Radon transform by filtered back-projection.
//!
//! Per-phase empirical densities are convolved with the discrete ramp
//! filter (hard frequency cutoff at the bin Nyquist, k_c = pi/dx) and
//! back-projected with linear interpolation over theta in [0, pi). The
//! grid is normalized to integrate to 1 at the end, which absorbs the
//! transform's constant factors.

use super::QuadratureHistogram;
use crate::Error;
use rayon::prelude::*;

/// Wigner function sampled on a uniform square grid, with its critical
/// values (interpolated value at the origin and grid minimum refined by
/// bicubic interpolation).
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major over x: `values[i * ps.len() + j] = W(xs[i], ps[j])`.
    pub values: Vec<f64>,
    pub min_value: f64,
    pub value_at_origin: f64,
}

impl WignerGrid {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>, values: Vec<f64>) -> Self {
        let mut g = WignerGrid {
            xs,
            ps,
            values,
            min_value: 0.0,
            value_at_origin: 0.0,
        };
        g.min_value = g.refined_minimum();
        g.value_at_origin = g.interpolate(0.0, 0.0);
        g
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ps.len() + j]
    }

    pub fn step(&self) -> (f64, f64) {
        (self.xs[1] - self.xs[0], self.ps[1] - self.ps[0])
    }

    /// Integral of the sampled grid.
    pub fn integral(&self) -> f64 {
        let (dx, dp) = self.step();
        self.values.iter().sum::<f64>() * dx * dp
    }

    /// Catmull-Rom bicubic interpolation at an interior point.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let (dx, dp) = self.step();
        let fx = (x - self.xs[0]) / dx;
        let fp = (p - self.ps[0]) / dp;
        let i = (fx.floor() as isize).clamp(1, self.xs.len() as isize - 3) as usize;
        let j = (fp.floor() as isize).clamp(1, self.ps.len() as isize - 3) as usize;
        let tx = fx - i as f64;
        let tp = fp - j as f64;
        let mut rows = [0.0f64; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let vi = i + r - 1;
            let c = [
                self.at(vi, j - 1),
                self.at(vi, j),
                self.at(vi, j + 1),
                self.at(vi, j + 2),
            ];
            *row = catmull_rom(c, tp);
        }
        catmull_rom(rows, tx)
    }

    /// Grid minimum refined on a finer local bicubic patch.
    fn refined_minimum(&self) -> f64 {
        let (mut mi, mut mj, mut best) = (0usize, 0usize, f64::INFINITY);
        for i in 0..self.xs.len() {
            for j in 0..self.ps.len() {
                let v = self.at(i, j);
                if v < best {
                    best = v;
                    mi = i;
                    mj = j;
                }
            }
        }
        let (dx, dp) = self.step();
        let x0 = self.xs[mi.clamp(1, self.xs.len() - 2)];
        let p0 = self.ps[mj.clamp(1, self.ps.len() - 2)];
        let mut refined = best;
        let steps = 24;
        for a in -steps..=steps {
            for b in -steps..=steps {
                let x = x0 + dx * a as f64 / steps as f64;
                let p = p0 + dp * b as f64 / steps as f64;
                if x < self.xs[1] || x > self.xs[self.xs.len() - 2] {
                    continue;
                }
                if p < self.ps[1] || p > self.ps[self.ps.len() - 2] {
                    continue;
                }
                refined = refined.min(self.interpolate(x, p));
            }
        }
        refined
    }

    /// Critical values (minimum, value at origin).
    pub fn critical_values(&self) -> (f64, f64) {
        (self.min_value, self.value_at_origin)
    }

    /// Angular average of the interpolated grid at fine radial steps;
    /// returns (radii, mean values). Step is half the grid step, angles
    /// 128 per ring.
    pub fn radial_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let (dx, _) = self.step();
        let r_max = self.xs[self.xs.len() - 2]
            .abs()
            .min(self.ps[self.ps.len() - 2].abs());
        let dr = dx / 2.0;
        let n = (r_max / dr) as usize;
        let n_ang = 128;
        let mut radii = Vec::with_capacity(n);
        let mut means = Vec::with_capacity(n);
        for k in 0..n {
            let r = k as f64 * dr;
            let mut acc = 0.0;
            for a in 0..n_ang {
                let phi = std::f64::consts::TAU * a as f64 / n_ang as f64;
                acc += self.interpolate(r * phi.cos(), r * phi.sin());
            }
            radii.push(r);
            means.push(acc / n_ang as f64);
        }
        (radii, means)
    }

    /// Critical values of a phase-symmetric state from the angular-averaged
    /// radial profile, smoothed by a sliding local quadratic in u = r^2.
    ///
    /// Angular averaging plus the local fit suppresses the high-frequency
    /// noise the ramp filter admits above the signal band, without biasing
    /// the smooth profile; the raw grid extremum, by contrast, rides the
    /// deepest noise spike.
    pub fn critical_values_radial(&self) -> (f64, f64) {
        let (radii, means) = self.radial_profile();
        // per-ring statistical weight ~ ring circumference (the origin
        // counts once)
        let weights: Vec<f64> = radii.iter().map(|&r| r.max(radii[1] / 2.0)).collect();
        let u: Vec<f64> = radii.iter().map(|&r| r * r).collect();
        let dr = radii[1] - radii[0];
        // the u-window must span enough rings; du = 2 r dr per ring
        let smoothed_at = |u0: f64| -> f64 {
            let half_window = (20.0 * dr * u0.sqrt().max(dr)).max(0.55);
            let mut a = [[0.0f64; 3]; 3];
            let mut rhs = [0.0f64; 3];
            for i in 0..u.len() {
                let du = u[i] - u0;
                if du.abs() > half_window {
                    continue;
                }
                let basis = [1.0, du, du * du];
                for r in 0..3 {
                    for c in 0..3 {
                        a[r][c] += weights[i] * basis[r] * basis[c];
                    }
                    rhs[r] += weights[i] * basis[r] * means[i];
                }
            }
            solve3(a, rhs)[0]
        };
        // Origin: one-sided cubic fit in u over a wider window, which
        // averages more rings without the cubic extrapolation bias of the
        // quadratic.
        let origin = {
            let h0 = 1.0;
            let mut a = [[0.0f64; 4]; 4];
            let mut rhs = [0.0f64; 4];
            for i in 0..u.len() {
                if u[i] > h0 {
                    continue;
                }
                let basis = [1.0, u[i], u[i] * u[i], u[i] * u[i] * u[i]];
                for r in 0..4 {
                    for c in 0..4 {
                        a[r][c] += weights[i] * basis[r] * basis[c];
                    }
                    rhs[r] += weights[i] * basis[r] * means[i];
                }
            }
            solve4(a, rhs)[0]
        };
        // the states' interior minimum sits well inside the grid; beyond
        // the scan the Wigner function has decayed to zero, covered by the
        // final clamp
        let r_scan = 0.7 * radii[radii.len() - 1];
        let u_hi = r_scan * r_scan;
        let mut min_val = origin;
        let mut uu = 0.0;
        while uu < u_hi {
            min_val = min_val.min(smoothed_at(uu));
            uu += 0.05;
        }
        (min_val.min(0.0), origin)
    }
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for r in (0..4).rev() {
        let mut s = b[r];
        for c in r + 1..4 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for c in r + 1..3 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

fn catmull_rom(c: [f64; 4], t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * c[1])
        + (-c[0] + c[2]) * t
        + (2.0 * c[0] - 5.0 * c[1] + 4.0 * c[2] - c[3]) * t2
        + (-c[0] + 3.0 * c[1] - 3.0 * c[2] + c[3]) * t3)
}

/// Reconstruct a Wigner function from a phase-binned histogram by
/// filtered back-projection onto an `n_grid` x `n_grid` square grid.
///
/// The grid half-width defaults to 3 sqrt(m2) + 1 (clamped into the
/// projection support), which keeps the state's structure well resolved
/// at 64 points while the normalization integral stays complete.
pub fn radon_reconstruct(h: &QuadratureHistogram, n_grid: usize) -> Result<WignerGrid, Error> {
    radon_reconstruct_on(h, n_grid, None)
}

/// Same reconstruction with an explicit grid half-width.
pub fn radon_reconstruct_on(
    h: &QuadratureHistogram,
    n_grid: usize,
    half_width: Option<f64>,
) -> Result<WignerGrid, Error> {
    if h.n_phases() < 2 {
        return Err(Error::TooFewPhases(h.n_phases()));
    }
    if h.total <= 0.0 {
        return Err(Error::EmptyHistogram);
    }
    let n_bins = h.n_bins();
    let dx = h.bin_width();
    let k = h.n_phases();

    // Per-phase normalized densities and ramp-filtered projections.
    // Ram-Lak kernel for cutoff at the Nyquist pi/dx:
    //   h[0] = 1/(4 dx^2), h[odd n] = -1/(pi^2 n^2 dx^2), h[even] = 0.
    let mut kernel = vec![0.0f64; n_bins];
    kernel[0] = 0.25 / (dx * dx);
    for (n, kv) in kernel.iter_mut().enumerate().skip(1) {
        if n % 2 == 1 {
            *kv = -1.0 / (std::f64::consts::PI.powi(2) * (n * n) as f64 * dx * dx);
        }
    }
    let filtered: Vec<Vec<f64>> = (0..k)
        .map(|ki| {
            let total = if h.totals[ki] > 0.0 {
                h.totals[ki]
            } else {
                1.0
            };
            let density: Vec<f64> = h.counts[ki].iter().map(|c| c / (total * dx)).collect();
            (0..n_bins)
                .map(|i| {
                    let mut acc = 0.0;
                    for (m, d) in density.iter().enumerate() {
                        let offset = i.abs_diff(m);
                        acc += d * kernel[offset];
                    }
                    acc * dx
                })
                .collect()
        })
        .collect();

    // Grid geometry.
    let m2 = h.second_moment();
    let span = h.edges[h.edges.len() - 1];
    let half = half_width
        .unwrap_or(3.0 * m2.sqrt() + 1.0)
        .min(span / std::f64::consts::SQRT_2);
    let axis: Vec<f64> = (0..n_grid)
        .map(|i| -half + 2.0 * half * i as f64 / (n_grid - 1) as f64)
        .collect();

    let trig: Vec<(f64, f64)> = h.phases.iter().map(|t| (t.cos(), t.sin())).collect();
    let x0 = h.edges[0];
    let values: Vec<f64> = axis
        .par_iter()
        .flat_map_iter(|&x| axis.iter().map(move |&p| (x, p)))
        .map(|(x, p)| {
            let mut acc = 0.0;
            for (ki, &(c, s)) in trig.iter().enumerate() {
                let proj = x * c + p * s;
                // linear interpolation into the filtered projection
                let pos = (proj - x0) / dx - 0.5;
                if pos <= 0.0 || pos >= (n_bins - 1) as f64 {
                    continue;
                }
                let i = pos as usize;
                let frac = pos - i as f64;
                acc += filtered[ki][i] * (1.0 - frac) + filtered[ki][i + 1] * frac;
            }
            acc / k as f64
        })
        .collect();

    let mut grid = WignerGrid::new(axis.clone(), axis, values);
    let integral = grid.integral();
    if integral.abs() < 1e-300 {
        return Err(Error::EmptyHistogram);
    }
    for v in &mut grid.values {
        *v /= integral;
    }
    grid.min_value /= integral;
    grid.value_at_origin /= integral;
    Ok(grid)
}
