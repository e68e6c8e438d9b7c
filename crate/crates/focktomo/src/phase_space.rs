//! Signed Gaussian mixtures over N phase-space modes.
//!
//! States are represented as weighted sums of zero-mean Gaussians in the
//! quadrature coordinates (x1, p1, ..., xN, pN), vacuum variance 1/2 per
//! quadrature, so the vacuum Wigner function is exp(-x^2-p^2)/pi. Weights
//! may be negative; each component integrates to its weight, so a
//! normalized state has weights summing to 1.
//!
//! The algebra is generic over the scalar so the conditioning pipeline can
//! run it in double-double precision; the public types are `f64`.

use crate::scalar::Scalar;
use crate::Error;
use rayon::prelude::*;

/// Dense symmetric matrix, sizes up to 2*4 modes.
#[derive(Clone, Debug)]
pub(crate) struct SymMat<T> {
    pub n: usize,
    pub a: Vec<T>,
}

impl<T: Scalar> SymMat<T> {
    pub fn zero(n: usize) -> Self {
        SymMat {
            n,
            a: vec![T::ZERO; n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, s);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.set(i, j, v);
        self.set(j, i, v);
    }

    /// Lower Cholesky factor; `None` if not positive definite.
    pub fn cholesky(&self) -> Option<Vec<T>> {
        let n = self.n;
        let mut l = vec![T::ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > T::ZERO) {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(l)
    }

    fn map_f64(&self) -> SymMat<f64> {
        SymMat {
            n: self.n,
            a: self.a.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GComponent<T> {
    pub weight: T,
    pub cov: SymMat<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct GMixture<T> {
    pub n_modes: usize,
    pub components: Vec<GComponent<T>>,
}

fn half<T: Scalar>() -> T {
    T::from_f64(0.5)
}

fn tau<T: Scalar>() -> T {
    T::from_f64(std::f64::consts::TAU)
}

impl<T: Scalar> GMixture<T> {
    pub fn vacuum() -> Self {
        GMixture {
            n_modes: 1,
            components: vec![GComponent {
                weight: T::ONE,
                cov: SymMat::scaled_identity(2, half()),
            }],
        }
    }

    /// Two-mode squeezed state with excess gain; g and h are assumed >= 1.
    ///
    /// Variance of the correlated combinations (x1-x2), (p1+p2) is
    /// hs + h - 1 with s = exp(-2r), cosh^2 r = g; the anticorrelated
    /// combinations get h/s + h - 1.
    pub fn two_mode_squeezed(g: T, h: T) -> Self {
        let one = T::ONE;
        let gf = g.to_f64();
        // r = arccosh(sqrt(g)); s computed in f64 and promoted: the two
        // branches below only need s consistent between them.
        let r = gf.sqrt().acosh();
        let s = T::from_f64((-2.0 * r).exp());
        let a = h * s + h - one; // var(x1 - x2) = var(p1 + p2)
        let b = h / s + h - one; // var(x1 + x2) = var(p1 - p2)
        let quarter = T::from_f64(0.25);
        let diag = (a + b) * quarter;
        let cov_x = (b - a) * quarter;
        let cov_p = (a - b) * quarter;
        let mut m = SymMat::zero(4);
        m.set(0, 0, diag);
        m.set(1, 1, diag);
        m.set(2, 2, diag);
        m.set(3, 3, diag);
        m.set_sym(0, 2, cov_x);
        m.set_sym(1, 3, cov_p);
        GMixture {
            n_modes: 2,
            components: vec![GComponent {
                weight: T::ONE,
                cov: m,
            }],
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let na = 2 * self.n_modes;
        let nb = 2 * other.n_modes;
        let n = na + nb;
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for ca in &self.components {
            for cb in &other.components {
                let mut cov = SymMat::zero(n);
                for i in 0..na {
                    for j in 0..na {
                        cov.set(i, j, ca.cov.get(i, j));
                    }
                }
                for i in 0..nb {
                    for j in 0..nb {
                        cov.set(na + i, na + j, cb.cov.get(i, j));
                    }
                }
                components.push(GComponent {
                    weight: ca.weight * cb.weight,
                    cov,
                });
            }
        }
        GMixture {
            n_modes: self.n_modes + other.n_modes,
            components,
        }
    }

    /// Beamsplitter with vacuum, transmission t, reflected port traced out.
    pub fn apply_loss(&self, mode: usize, t: T) -> Self {
        let st = t.sqrt();
        let c0 = 2 * mode;
        let vac = (T::ONE - t) * half();
        let mut out = self.clone();
        for comp in &mut out.components {
            let n = comp.cov.n;
            let old = comp.cov.clone();
            for c in [c0, c0 + 1] {
                for o in 0..n {
                    if o != c0 && o != c0 + 1 {
                        comp.cov.set(c, o, old.get(c, o) * st);
                        comp.cov.set(o, c, old.get(o, c) * st);
                    }
                }
            }
            for c in [c0, c0 + 1] {
                for d in [c0, c0 + 1] {
                    let mut v = t * old.get(c, d);
                    if c == d {
                        v = v + vac;
                    }
                    comp.cov.set(c, d, v);
                }
            }
        }
        out
    }

    /// 50/50 beamsplitter between `mode` and a fresh vacuum mode appended
    /// at the end. Output A replaces `mode`, output B is the new mode.
    pub fn balanced_split(&self, mode: usize) -> Self {
        let n_new = 2 * (self.n_modes + 1);
        let isq = (half::<T>()).sqrt(); // 1/sqrt(2)
        let mut components = Vec::with_capacity(self.components.len());
        for comp in &self.components {
            let n_old = comp.cov.n;
            let mut cov = SymMat::zero(n_new);
            for i in 0..n_old {
                for j in 0..n_old {
                    cov.set(i, j, comp.cov.get(i, j));
                }
            }
            cov.set(n_old, n_old, half());
            cov.set(n_old + 1, n_old + 1, half());
            // row/column mixing for x and p of (mode, new vacuum)
            for q in 0..2 {
                let i = 2 * mode + q;
                let j = n_old + q;
                for col in 0..n_new {
                    let vi = cov.get(i, col);
                    let vj = cov.get(j, col);
                    cov.set(i, col, (vi + vj) * isq);
                    cov.set(j, col, (vi - vj) * isq);
                }
                for row in 0..n_new {
                    let vi = cov.get(row, i);
                    let vj = cov.get(row, j);
                    cov.set(row, i, (vi + vj) * isq);
                    cov.set(row, j, (vi - vj) * isq);
                }
            }
            components.push(GComponent {
                weight: comp.weight,
                cov,
            });
        }
        GMixture {
            n_modes: self.n_modes + 1,
            components,
        }
    }

    /// Marginalize one mode out (zero-mean: delete its rows/columns).
    pub fn trace_out(&self, mode: usize) -> Self {
        let keep: Vec<usize> = (0..2 * self.n_modes)
            .filter(|&c| c != 2 * mode && c != 2 * mode + 1)
            .collect();
        let components = self
            .components
            .iter()
            .map(|comp| {
                let mut cov = SymMat::zero(keep.len());
                for (i, &ci) in keep.iter().enumerate() {
                    for (j, &cj) in keep.iter().enumerate() {
                        cov.set(i, j, comp.cov.get(ci, cj));
                    }
                }
                GComponent {
                    weight: comp.weight,
                    cov,
                }
            })
            .collect();
        GMixture {
            n_modes: self.n_modes - 1,
            components,
        }
    }

    /// Multiply by 2*pi*W_vac on `mode` and integrate that mode out.
    ///
    /// Per component this is a Gaussian overlap: the weight picks up
    /// 1/sqrt(det(C + I/2)) with C the mode's 2x2 block, and the remaining
    /// covariance is the Schur complement A - B (C + I/2)^-1 B^T.
    /// Returns the unnormalized mixture plus its total weight (the vacuum
    /// projection probability for a normalized input).
    pub fn project_vacuum(&self, mode: usize) -> (Self, T) {
        let keep: Vec<usize> = (0..2 * self.n_modes)
            .filter(|&c| c != 2 * mode && c != 2 * mode + 1)
            .collect();
        let (k0, k1) = (2 * mode, 2 * mode + 1);
        let mut components = Vec::with_capacity(self.components.len());
        let mut total = T::ZERO;
        for comp in &self.components {
            let m00 = comp.cov.get(k0, k0) + half();
            let m01 = comp.cov.get(k0, k1);
            let m11 = comp.cov.get(k1, k1) + half();
            let det = m00 * m11 - m01 * m01;
            // inverse of the 2x2 [m00 m01; m01 m11]
            let i00 = m11 / det;
            let i01 = -m01 / det;
            let i11 = m00 / det;
            let weight = comp.weight / det.sqrt();
            let mut cov = SymMat::zero(keep.len());
            for (i, &ci) in keep.iter().enumerate() {
                let bi0 = comp.cov.get(ci, k0);
                let bi1 = comp.cov.get(ci, k1);
                for (j, &cj) in keep.iter().enumerate() {
                    let bj0 = comp.cov.get(cj, k0);
                    let bj1 = comp.cov.get(cj, k1);
                    let corr = bi0 * (i00 * bj0 + i01 * bj1) + bi1 * (i01 * bj0 + i11 * bj1);
                    cov.set(i, j, comp.cov.get(ci, cj) - corr);
                }
            }
            total = total + weight;
            components.push(GComponent { weight, cov });
        }
        (
            GMixture {
                n_modes: self.n_modes - 1,
                components,
            },
            total,
        )
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.weight = c.weight * factor;
        }
        out
    }

    pub fn append(&mut self, other: Self) {
        assert_eq!(self.n_modes, other.n_modes);
        self.components.extend(other.components);
    }

    pub fn weight_sum(&self) -> T {
        let mut s = T::ZERO;
        for c in &self.components {
            s = s + c.weight;
        }
        s
    }

    /// Mixture second moment <z_i z_j> (zero-mean, weights summing to 1).
    pub fn second_moment(&self, i: usize, j: usize) -> T {
        let mut s = T::ZERO;
        for c in &self.components {
            s = s + c.weight * c.cov.get(i, j);
        }
        s
    }

    /// Merge components whose covariances agree within `rel_tol` entrywise.
    pub fn merged(&self, rel_tol: f64) -> Self {
        let mut out: Vec<GComponent<T>> = Vec::new();
        'comp: for c in &self.components {
            for o in out.iter_mut() {
                let mut same = true;
                for (x, y) in c.cov.a.iter().zip(o.cov.a.iter()) {
                    let d = (*x - *y).abs().to_f64();
                    let scale = x.abs().to_f64().max(y.abs().to_f64()).max(1e-300);
                    if d > rel_tol * scale.max(1.0) {
                        same = false;
                        break;
                    }
                }
                if same {
                    o.weight = o.weight + c.weight;
                    continue 'comp;
                }
            }
            out.push(c.clone());
        }
        GMixture {
            n_modes: self.n_modes,
            components: out,
        }
    }

    pub fn evaluate(&self, point: &[T]) -> T {
        let prep = self.prepare();
        prep.eval(point)
    }

    pub fn prepare(&self) -> PreparedMixture<T> {
        let dim = 2 * self.n_modes;
        let norm_pow = {
            // (2*pi)^n_modes
            let mut p = T::ONE;
            for _ in 0..self.n_modes {
                p = p * tau();
            }
            p
        };
        let terms = self
            .components
            .iter()
            .map(|c| {
                let l = c
                    .cov
                    .cholesky()
                    .expect("component covariance must be positive definite");
                let mut sqrt_det = T::ONE;
                for i in 0..dim {
                    sqrt_det = sqrt_det * l[i * dim + i];
                }
                let coef = c.weight / (norm_pow * sqrt_det);
                (coef, l)
            })
            .collect();
        PreparedMixture { dim, terms }
    }

    pub fn map_f64(&self) -> GMixture<f64> {
        GMixture {
            n_modes: self.n_modes,
            components: self
                .components
                .iter()
                .map(|c| GComponent {
                    weight: c.weight.to_f64(),
                    cov: c.cov.map_f64(),
                })
                .collect(),
        }
    }
}

/// Cholesky-factored form for repeated evaluation.
pub(crate) struct PreparedMixture<T> {
    dim: usize,
    terms: Vec<(T, Vec<T>)>,
}

impl<T: Scalar> PreparedMixture<T> {
    pub fn eval(&self, point: &[T]) -> T {
        debug_assert_eq!(point.len(), self.dim);
        let n = self.dim;
        let mut total = T::ZERO;
        let mut v = vec![T::ZERO; n];
        for (coef, l) in &self.terms {
            // forward solve L v = z, then q = |v|^2
            for i in 0..n {
                let mut s = point[i];
                for k in 0..i {
                    s = s - l[i * n + k] * v[k];
                }
                v[i] = s / l[i * n + i];
            }
            let mut q = T::ZERO;
            for vi in &v {
                q = q + *vi * *vi;
            }
            total = total + *coef * (-(q * half())).exp();
        }
        total
    }
}

// ---------------------------------------------------------------------------
// Public f64 interface
// ---------------------------------------------------------------------------

/// One zero-mean Gaussian term of a [`SignedGaussianMixture`].
#[derive(Clone, Debug)]
pub struct GaussianComponent {
    /// Dimensionless weight; may be negative.
    pub weight: f64,
    /// Symmetric positive-definite 2N x 2N covariance, row-major, in
    /// coordinates (x1, p1, ..., xN, pN).
    pub covariance: Vec<f64>,
}

/// A state's Wigner function as a signed sum of zero-mean Gaussians.
#[derive(Clone, Debug)]
pub struct SignedGaussianMixture {
    pub(crate) inner: GMixture<f64>,
}

impl SignedGaussianMixture {
    /// Single-mode vacuum, W(0,0) = 1/pi.
    pub fn vacuum() -> Self {
        SignedGaussianMixture {
            inner: GMixture::vacuum(),
        }
    }

    /// Two-mode squeezed state of an amplifier with gain `g` and
    /// phase-independent excess gain `h`.
    pub fn two_mode_squeezed(g: f64, h: f64) -> Result<Self, Error> {
        if !(g >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                constraint: "g >= 1",
            });
        }
        if !(h >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                constraint: "h >= 1",
            });
        }
        Ok(SignedGaussianMixture {
            inner: GMixture::two_mode_squeezed(g, h),
        })
    }

    /// Assemble a mixture from explicit components, validating shape,
    /// symmetry and positive-definiteness.
    pub fn from_components(
        n_modes: usize,
        components: Vec<GaussianComponent>,
    ) -> Result<Self, Error> {
        if n_modes == 0 || components.is_empty() {
            return Err(Error::InvalidComponents("empty mixture"));
        }
        let n = 2 * n_modes;
        let mut inner = Vec::with_capacity(components.len());
        for c in components {
            if c.covariance.len() != n * n {
                return Err(Error::InvalidComponents("covariance size mismatch"));
            }
            let cov = SymMat { n, a: c.covariance };
            for i in 0..n {
                for j in 0..i {
                    let d = (cov.get(i, j) - cov.get(j, i)).abs();
                    if d > 1e-12 * cov.get(i, i).abs().max(1.0) {
                        return Err(Error::InvalidComponents("covariance not symmetric"));
                    }
                }
            }
            if cov.cholesky().is_none() {
                return Err(Error::NotPositiveDefinite);
            }
            inner.push(GComponent {
                weight: c.weight,
                cov,
            });
        }
        Ok(SignedGaussianMixture {
            inner: GMixture {
                n_modes,
                components: inner,
            },
        })
    }

    pub fn n_modes(&self) -> usize {
        self.inner.n_modes
    }

    pub fn n_components(&self) -> usize {
        self.inner.components.len()
    }

    pub fn components(&self) -> Vec<GaussianComponent> {
        self.inner
            .components
            .iter()
            .map(|c| GaussianComponent {
                weight: c.weight,
                covariance: c.cov.a.clone(),
            })
            .collect()
    }

    /// Tensor product; component count multiplies, covariances are
    /// block-diagonal.
    pub fn tensor(&self, other: &Self) -> Self {
        SignedGaussianMixture {
            inner: self.inner.tensor(&other.inner),
        }
    }

    /// Mix `mode` with vacuum on a beamsplitter of transmission `t` and
    /// trace out the reflected port.
    pub fn apply_loss(&self, mode: usize, t: f64) -> Result<Self, Error> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter {
                name: "transmission",
                value: t,
                constraint: "0 <= T <= 1",
            });
        }
        Ok(SignedGaussianMixture {
            inner: self.inner.apply_loss(mode, t),
        })
    }

    /// 50/50 split of `mode` against vacuum; the second output port is
    /// appended as a new last mode.
    pub fn balanced_split(&self, mode: usize) -> Result<Self, Error> {
        self.check_mode(mode)?;
        Ok(SignedGaussianMixture {
            inner: self.inner.balanced_split(mode),
        })
    }

    /// Marginalize `mode` out.
    pub fn trace_out(&self, mode: usize) -> Result<Self, Error> {
        self.check_mode(mode)?;
        if self.inner.n_modes < 2 {
            return Err(Error::LastMode);
        }
        Ok(SignedGaussianMixture {
            inner: self.inner.trace_out(mode),
        })
    }

    /// Project `mode` on vacuum (multiply by 2 pi W_vac and integrate the
    /// mode out). Returns the unnormalized remainder and the projection
    /// probability.
    pub fn project_vacuum(&self, mode: usize) -> Result<(Self, f64), Error> {
        self.check_mode(mode)?;
        if self.inner.n_modes < 2 {
            return Err(Error::LastMode);
        }
        let (m, p) = self.inner.project_vacuum(mode);
        Ok((SignedGaussianMixture { inner: m }, p))
    }

    /// Evaluate the Wigner function at a 2N-dimensional phase-space point.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, Error> {
        let want = 2 * self.inner.n_modes;
        if point.len() != want {
            return Err(Error::DimensionMismatch {
                got: point.len(),
                want,
            });
        }
        Ok(self.inner.evaluate(point))
    }

    /// Evaluate a single-mode mixture on an (x, p) grid, row-major over x.
    pub fn evaluate_grid(&self, xs: &[f64], ps: &[f64]) -> Result<Vec<f64>, Error> {
        if self.inner.n_modes != 1 {
            return Err(Error::DimensionMismatch {
                got: 2,
                want: 2 * self.inner.n_modes,
            });
        }
        let prep = self.inner.prepare();
        Ok(xs
            .par_iter()
            .flat_map_iter(|&x| ps.iter().map(move |&p| (x, p)))
            .map(|(x, p)| prep.eval(&[x, p]))
            .collect())
    }

    pub fn weight_sum(&self) -> f64 {
        self.inner.weight_sum()
    }

    /// Second moment <z_i z_j> of the (normalized) mixture.
    pub fn second_moment(&self, i: usize, j: usize) -> f64 {
        self.inner.second_moment(i, j)
    }

    /// (<x^2>, <p^2>) of one mode.
    pub fn marginal_variances(&self, mode: usize) -> (f64, f64) {
        (
            self.inner.second_moment(2 * mode, 2 * mode),
            self.inner.second_moment(2 * mode + 1, 2 * mode + 1),
        )
    }

    /// Mean photon number of one mode: (<x^2> + <p^2> - 1) / 2.
    pub fn mean_photons(&self, mode: usize) -> f64 {
        let (vx, vp) = self.marginal_variances(mode);
        (vx + vp - 1.0) / 2.0
    }

    /// Drop components with |weight| below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        SignedGaussianMixture {
            inner: GMixture {
                n_modes: self.inner.n_modes,
                components: self
                    .inner
                    .components
                    .iter()
                    .filter(|c| c.weight.abs() >= tol)
                    .cloned()
                    .collect(),
            },
        }
    }

    /// Smallest covariance eigenvalue across components (via Cholesky on
    /// shifted matrices; used by validity checks).
    pub fn is_positive_definite(&self) -> bool {
        self.inner
            .components
            .iter()
            .all(|c| c.cov.cholesky().is_some())
    }

    fn check_mode(&self, mode: usize) -> Result<(), Error> {
        if mode >= self.inner.n_modes {
            Err(Error::ModeIndex {
                index: mode,
                n_modes: self.inner.n_modes,
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// d-dimensional trapezoid integration of a mixture over [-w, w]^d.
    fn integrate(m: &SignedGaussianMixture, w: f64, n: usize) -> f64 {
        let d = 2 * m.n_modes();
        let h = 2.0 * w / (n - 1) as f64;
        let prep = m.inner.prepare();
        let mut idx = vec![0usize; d];
        let mut z = vec![0.0f64; d];
        let mut total = 0.0;
        loop {
            let mut wgt = 1.0;
            for k in 0..d {
                z[k] = -w + idx[k] as f64 * h;
                if idx[k] == 0 || idx[k] == n - 1 {
                    wgt *= 0.5;
                }
            }
            total += wgt * prep.eval(&z);
            // odometer
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return total * h.powi(d as i32);
                }
            }
        }
    }

    #[test]
    fn vacuum_at_origin_is_one_over_pi() {
        let v = SignedGaussianMixture::vacuum();
        let w0 = v.evaluate(&[0.0, 0.0]).unwrap();
        assert!((w0 - 1.0 / PI).abs() < 1e-15);
        // second moment <x^2> = 1/2
        assert!((v.second_moment(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vacuum_normalized() {
        let v = SignedGaussianMixture::vacuum();
        let total = integrate(&v, 6.0, 256);
        assert!((total - 1.0).abs() < 1e-6, "integral = {total}");
    }

    #[test]
    fn vacuum_decays_along_rays() {
        let v = SignedGaussianMixture::vacuum();
        let mut last = f64::INFINITY;
        for k in 0..30 {
            let r = 0.3 * k as f64;
            let w = v.evaluate(&[r * 0.6, r * 0.8]).unwrap();
            assert!(w <= last);
            last = w;
        }
        assert!(last < 1e-30);
    }

    #[test]
    fn squeezed_rejects_bad_gain() {
        assert!(SignedGaussianMixture::two_mode_squeezed(0.9, 1.0).is_err());
        assert!(SignedGaussianMixture::two_mode_squeezed(1.1, 0.5).is_err());
    }

    #[test]
    fn squeezed_g1_is_two_mode_vacuum() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.0, 1.0).unwrap();
        let w0 = s.evaluate(&[0.0; 4]).unwrap();
        assert!((w0 - 1.0 / (PI * PI)).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((s.second_moment(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezed_variance_parameter() {
        // r = arccosh(sqrt(1.07)), s = exp(-2r) ~ 0.5923; with h = 1 the
        // correlated combination variance equals s.
        let g: f64 = 1.07;
        let r = g.sqrt().acosh();
        let s = (-2.0 * r).exp();
        assert!((s - 0.5923).abs() < 5e-4);
        assert!((s * (1.0 / s) - 1.0).abs() < 1e-15);
        let m = SignedGaussianMixture::two_mode_squeezed(g, 1.0).unwrap();
        // var(x1 - x2) = <x1^2> + <x2^2> - 2<x1 x2>
        let v_minus = m.second_moment(0, 0) + m.second_moment(2, 2) - 2.0 * m.second_moment(0, 2);
        assert!((v_minus - s).abs() < 1e-12);
        let v_plus = m.second_moment(0, 0) + m.second_moment(2, 2) + 2.0 * m.second_moment(0, 2);
        assert!((v_plus - 1.0 / s).abs() < 1e-12);
    }

    #[test]
    fn squeezed_normalized() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.07, 1.011).unwrap();
        let total = integrate(&s, 6.0, 41);
        assert!((total - 1.0).abs() < 1e-6, "integral = {total}");
    }

    #[test]
    fn tensor_factorizes() {
        let v = SignedGaussianMixture::vacuum();
        let vv = v.tensor(&v);
        assert_eq!(vv.n_modes(), 2);
        assert_eq!(vv.n_components(), 1);
        let z = [0.3, -0.2, 0.7, 0.1];
        let wa = v.evaluate(&z[..2]).unwrap();
        let wb = v.evaluate(&z[2..]).unwrap();
        let w = vv.evaluate(&z).unwrap();
        assert!((w - wa * wb).abs() < 1e-15);
    }

    #[test]
    fn loss_identity_and_total() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.07, 1.0).unwrap();
        let same = s.apply_loss(0, 1.0).unwrap();
        for (a, b) in s.components()[0]
            .covariance
            .iter()
            .zip(same.components()[0].covariance.iter())
        {
            assert_eq!(a, b);
        }
        let v = SignedGaussianMixture::vacuum();
        let dead = v.apply_loss(0, 0.0).unwrap();
        assert!((dead.second_moment(0, 0) - 0.5).abs() < 1e-15);
        assert!(s.apply_loss(0, 1.2).is_err());
        assert!(s.apply_loss(2, 0.5).is_err());
    }

    #[test]
    fn loss_marginal_matches_numerical_convolution() {
        // x_out = sqrt(T) x_in + sqrt(1-T) x_vac; compare the lossy
        // marginal density against an explicit convolution on a grid.
        let s = SignedGaussianMixture::two_mode_squeezed(1.07, 1.0).unwrap();
        let t = 0.8;
        let lossy = s.apply_loss(0, t).unwrap();
        let v_in = s.second_moment(0, 0);
        let v_out = lossy.second_moment(0, 0);
        assert!((v_out - (t * v_in + 0.1)).abs() < 1e-12);

        // marginal density of x1: integrate W over p1, x2, p2 numerically
        let marginal = |m: &SignedGaussianMixture, x: f64| -> f64 {
            let n = 61;
            let w = 6.0;
            let h = 2.0 * w / (n - 1) as f64;
            let prep = m.inner.prepare();
            let mut tot = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut wgt = 1.0;
                        for idx in [a, b, c] {
                            if idx == 0 || idx == n - 1 {
                                wgt *= 0.5;
                            }
                        }
                        let p1 = -w + a as f64 * h;
                        let x2 = -w + b as f64 * h;
                        let p2 = -w + c as f64 * h;
                        tot += wgt * prep.eval(&[x, p1, x2, p2]);
                    }
                }
            }
            tot * h.powi(3)
        };
        // convolution kernel: N(0, (1-T)/2) against input marginal scaled
        // by sqrt(T); tabulate the input marginal once
        let kernel_var = (1.0 - t) / 2.0;
        let n = 241;
        let w = 6.0;
        let h = 2.0 * w / (n - 1) as f64;
        let p_in: Vec<f64> = (0..n).map(|k| marginal(&s, -w + k as f64 * h)).collect();
        for &x in &[0.0, 0.5, 1.3] {
            let direct = marginal(&lossy, x);
            let mut conv = 0.0;
            for k in 0..n {
                let u = -w + k as f64 * h;
                let wgt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                let v = x - t.sqrt() * u;
                let g = (-v * v / (2.0 * kernel_var)).exp() / (2.0 * PI * kernel_var).sqrt();
                conv += wgt * p_in[k] * g * h;
            }
            assert!(
                (direct - conv).abs() < 2e-4,
                "x={x}: direct {direct} vs conv {conv}"
            );
        }
    }

    #[test]
    fn loss_composition_law() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.3, 1.05).unwrap();
        let a = s.apply_loss(0, 0.7).unwrap().apply_loss(0, 0.6).unwrap();
        let b = s.apply_loss(0, 0.42).unwrap();
        for (x, y) in a.components()[0]
            .covariance
            .iter()
            .zip(b.components()[0].covariance.iter())
        {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_on_disjoint_modes_commutes() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.2, 1.02).unwrap();
        let a = s.apply_loss(0, 0.8).unwrap().apply_loss(1, 0.3).unwrap();
        let b = s.apply_loss(1, 0.3).unwrap().apply_loss(0, 0.8).unwrap();
        for (x, y) in a.components()[0]
            .covariance
            .iter()
            .zip(b.components()[0].covariance.iter())
        {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn split_vacuum_gives_two_mode_vacuum() {
        let v = SignedGaussianMixture::vacuum();
        let vv = v.balanced_split(0).unwrap();
        assert_eq!(vv.n_modes(), 2);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((vv.second_moment(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn split_conserves_photon_flux() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.4, 1.1).unwrap();
        let lossy = s.apply_loss(1, 0.5).unwrap();
        let before = lossy.mean_photons(1);
        let split = lossy.balanced_split(1).unwrap();
        let after = split.mean_photons(1) + split.mean_photons(2);
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn split_matches_substitution_formula() {
        // Splitting mode 1 of the lossy squeezed state: W_out(zH, zA, zB)
        // = W_in(zH, (zA+zB)/sqrt2) * W_vac((zA-zB)/sqrt2), checked at
        // random points.
        let s = SignedGaussianMixture::two_mode_squeezed(1.07, 1.011)
            .unwrap()
            .apply_loss(1, 0.06)
            .unwrap();
        let split = s.balanced_split(1).unwrap();
        let vac = SignedGaussianMixture::vacuum();
        let mut st = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            st = st
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((st >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..10 {
            let z: Vec<f64> = (0..6).map(|_| rnd()).collect();
            let (xh, ph, xa, pa, xb, pb) = (z[0], z[1], z[2], z[3], z[4], z[5]);
            let s2 = std::f64::consts::SQRT_2;
            let direct = split.evaluate(&[xh, ph, xa, pa, xb, pb]).unwrap();
            let w_in = s
                .evaluate(&[xh, ph, (xa + xb) / s2, (pa + pb) / s2])
                .unwrap();
            let w_v = vac.evaluate(&[(xa - xb) / s2, (pa - pb) / s2]).unwrap();
            assert!((direct - w_in * w_v).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_out_two_mode_vacuum() {
        let v = SignedGaussianMixture::vacuum();
        let vv = v.tensor(&v);
        let back = vv.trace_out(1).unwrap();
        assert_eq!(back.n_modes(), 1);
        assert!(
            (back.evaluate(&[0.1, -0.4]).unwrap() - v.evaluate(&[0.1, -0.4]).unwrap()).abs()
                < 1e-15
        );
        assert!(v.trace_out(0).is_err());
    }

    #[test]
    fn trace_out_squeezed_gives_thermal() {
        let (g, h) = (1.07, 1.011);
        let s = SignedGaussianMixture::two_mode_squeezed(g, h).unwrap();
        let th = s.trace_out(1).unwrap();
        let want = (2.0 * (h * g - 1.0) + 1.0) / 2.0;
        let (vx, vp) = th.marginal_variances(0);
        assert!((vx - want).abs() < 1e-12);
        assert!((vp - want).abs() < 1e-12);
        assert!((th.weight_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_then_evaluate_matches_numerical_marginal() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.2, 1.05).unwrap();
        let traced = s.trace_out(1).unwrap();
        for &(x, p) in &[(0.0, 0.0), (0.7, -0.3)] {
            let direct = traced.evaluate(&[x, p]).unwrap();
            // numerically marginalize modes 2 over a grid
            let n = 257;
            let w = 7.0;
            let h = 2.0 * w / (n - 1) as f64;
            let mut tot = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let mut wgt = 1.0;
                    if a == 0 || a == n - 1 {
                        wgt *= 0.5;
                    }
                    if b == 0 || b == n - 1 {
                        wgt *= 0.5;
                    }
                    tot += wgt
                        * s.evaluate(&[x, p, -w + a as f64 * h, -w + b as f64 * h])
                            .unwrap();
                }
            }
            tot *= h * h;
            assert!((direct - tot).abs() < 1e-8, "{direct} vs {tot}");
        }
    }

    #[test]
    fn project_vacuum_on_two_mode_vacuum() {
        let v = SignedGaussianMixture::vacuum();
        let vv = v.tensor(&v);
        let (rest, p) = vv.project_vacuum(1).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(
            (rest.evaluate(&[0.2, 0.1]).unwrap() - v.evaluate(&[0.2, 0.1]).unwrap()).abs() < 1e-15
        );
    }

    #[test]
    fn project_vacuum_probability_is_inverse_gain() {
        for &g in &[1.01, 1.07, 1.5, 3.0] {
            let s = SignedGaussianMixture::two_mode_squeezed(g, 1.0).unwrap();
            let (_, p) = s.project_vacuum(1).unwrap();
            assert!((p - 1.0 / g).abs() < 1e-12, "g={g}: p={p}");
            assert!(p > 0.0 && p <= 1.0);
            // cross-check against the thermal Fock expansion: the traced
            // mode is thermal with sigma2 = 2g - 1, whose vacuum weight is
            // 2/(sigma2 + 1) = 1/g
            let rp = crate::model::ReducedParams::new(2.0 * g - 1.0, 0.0);
            let diag =
                crate::model::fock_diagonals(&rp, crate::model::Conditioning::None, 2).unwrap();
            assert!((diag.values[0] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn three_gaussian_mixture_evaluates_by_direct_sum() {
        // signed mixture in the exact-conditioning shape: weights
        // (alpha, -beta, 1 - alpha + beta) with three widths
        let (alpha, beta) = (1.8, 1.1);
        let widths = [0.9f64, 0.6, 1.3]; // sigma^2 parameters, var = s/2
        let weights = [alpha, -beta, 1.0 - alpha + beta];
        let comps: Vec<GaussianComponent> = weights
            .iter()
            .zip(widths.iter())
            .map(|(&w, &s)| GaussianComponent {
                weight: w,
                covariance: vec![s / 2.0, 0.0, 0.0, s / 2.0],
            })
            .collect();
        let m = SignedGaussianMixture::from_components(1, comps).unwrap();
        let expect: f64 = weights
            .iter()
            .zip(widths.iter())
            .map(|(&w, &s)| w / (PI * s))
            .sum();
        assert!((m.evaluate(&[0.0, 0.0]).unwrap() - expect).abs() < 1e-14);
        assert!((m.weight_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_components_validates() {
        let asym = GaussianComponent {
            weight: 1.0,
            covariance: vec![0.5, 0.2, -0.2, 0.5],
        };
        assert!(SignedGaussianMixture::from_components(1, vec![asym]).is_err());
        let indef = GaussianComponent {
            weight: 1.0,
            covariance: vec![0.5, 0.9, 0.9, 0.5],
        };
        assert!(matches!(
            SignedGaussianMixture::from_components(1, vec![indef]),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn covariances_stay_positive_definite_through_pipeline() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.07, 1.011)
            .unwrap()
            .apply_loss(0, 0.8)
            .unwrap()
            .apply_loss(1, 0.06)
            .unwrap()
            .balanced_split(1)
            .unwrap();
        assert!(s.is_positive_definite());
        let (after, _) = s.project_vacuum(1).unwrap();
        assert!(after.is_positive_definite());
    }

    #[test]
    fn heisenberg_bound_on_physical_marginals() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.5, 1.1)
            .unwrap()
            .apply_loss(0, 0.8)
            .unwrap();
        for mode in 0..2 {
            let (vx, vp) = s.marginal_variances(mode);
            assert!(vx * vp >= 0.25 - 1e-12);
        }
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let v = SignedGaussianMixture::vacuum();
        assert!(v.evaluate(&[0.0]).is_err());
        assert!(v.evaluate(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn weights_sum_preserved_by_structure_ops() {
        let s = SignedGaussianMixture::two_mode_squeezed(1.3, 1.02).unwrap();
        let t = s.balanced_split(1).unwrap();
        assert!((t.weight_sum() - 1.0).abs() < 1e-15);
        let u = t.trace_out(2).unwrap();
        assert!((u.weight_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_parameter_sweep_preserves_invariants() {
        // seeded sweep over the physical parameter ranges: every pipeline
        // stage keeps weights summing to 1, covariances positive definite,
        // and single-mode marginals above the Heisenberg bound
        let mut st = 0x243f6a8885a308d3u64;
        let mut rnd = |lo: f64, hi: f64| {
            st = st
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            lo + ((st >> 11) as f64 / (1u64 << 53) as f64) * (hi - lo)
        };
        for _ in 0..50 {
            let g = rnd(1.0, 2.5);
            let h = rnd(1.0, 1.3);
            let eta = rnd(0.05, 1.0);
            let mu = rnd(0.001, 1.0);
            let state = SignedGaussianMixture::two_mode_squeezed(g, h)
                .unwrap()
                .apply_loss(0, eta)
                .unwrap()
                .apply_loss(1, mu)
                .unwrap()
                .balanced_split(1)
                .unwrap();
            assert!((state.weight_sum() - 1.0).abs() < 1e-12);
            assert!(state.is_positive_definite());
            for mode in 0..state.n_modes() {
                let (vx, vp) = state.marginal_variances(mode);
                assert!(vx * vp >= 0.25 - 1e-12, "g={g} h={h} eta={eta} mu={mu}");
            }
            let (projected, prob) = state.project_vacuum(1).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&prob));
            assert!(projected.is_positive_definite());
            let traced = state.trace_out(2).unwrap().trace_out(1).unwrap();
            assert!((traced.weight_sum() - 1.0).abs() < 1e-12);
        }
    }
}
