//! End-to-end validation suite: eight numbered criteria covering the
//! closed-form critical values, the conditioning-pipeline equivalence,
//! and the full simulate-and-reconstruct chain at the reference operating
//! point. Run by `focktomo selftest` and by the acceptance test target.

use crate::model::{
    exact_pipeline_wigner, fock_diagonals, moments, quad_p1, quad_p2, reduce, w1_radial, w2_radial,
    wigner_w1, wigner_w2, Conditioning, PhysicalParams, ReducedParams,
};
use crate::phase_space::SignedGaussianMixture;
use crate::sim::{sample, PhaseSchedule, SimConfig};
use crate::tomography::{
    critical_values_model, invert_moments, maxlik_reconstruct, moment_estimate, radon_reconstruct,
    MaxLikConfig, QuadratureHistogram,
};
use std::time::{Duration, Instant};

/// Deterministic seed used by every data-driven criterion.
pub const SELFTEST_SEED: u64 = 42;

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<22} [{:>7.2?}] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed,
            self.detail
        )
    }
}

struct Checks {
    parts: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            parts: Vec::new(),
            ok: true,
        }
    }

    /// |value - target| <= tol
    fn near(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        let pass = (value - target).abs() <= tol;
        self.ok &= pass;
        self.parts.push(format!(
            "{what}={value:.5} (target {target} +- {tol}){}",
            if pass { "" } else { " FAIL" }
        ));
    }

    fn below(&mut self, what: &str, value: f64, limit: f64) {
        let pass = value < limit;
        self.ok &= pass;
        self.parts.push(format!(
            "{what}={value:.3e} (< {limit:.0e}){}",
            if pass { "" } else { " FAIL" }
        ));
    }

    fn holds(&mut self, what: &str, pass: bool) {
        self.ok &= pass;
        self.parts
            .push(format!("{what}{}", if pass { "" } else { " FAIL" }));
    }

    fn runtime(&mut self, elapsed: Duration, budget: Duration) {
        let pass = elapsed <= budget;
        self.ok &= pass;
        if !pass {
            self.parts
                .push(format!("runtime {elapsed:?} exceeds {budget:?} FAIL"));
        }
    }

    fn finish(self, name: &'static str, elapsed: Duration) -> CriterionResult {
        CriterionResult {
            name,
            passed: self.ok,
            detail: self.parts.join("; "),
            elapsed,
        }
    }
}

fn raw_params() -> PhysicalParams {
    PhysicalParams::default()
}

/// Criterion 1: critical values of the ideal states.
pub fn criterion_ideal_row() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let ideal = ReducedParams::ideal();
    let (min2, w2o) = critical_values_model(&ideal, Conditioning::Coincidence);
    let (min1, w1o) = critical_values_model(&ideal, Conditioning::Single);
    c.near("min_W2", min2, -0.13, 0.005);
    c.near("W2_origin", w2o, 0.32, 0.005);
    c.near("W1_origin", w1o, -0.32, 0.005);
    c.holds("min_W1 = W1(0)", (min1 - w1o).abs() < 1e-9);
    c.runtime(t0.elapsed(), Duration::from_secs(1));
    c.finish("ideal-table-row", t0.elapsed())
}

/// Criterion 2: raw row at the reference parameters.
pub fn criterion_raw_row() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let rp = reduce(&raw_params());
    let (min2, w2o) = critical_values_model(&rp, Conditioning::Coincidence);
    let (_, w1o) = critical_values_model(&rp, Conditioning::Single);
    c.near("W1_origin", w1o, -0.052, 0.005);
    c.near("W2_origin", w2o, 0.012, 0.005);
    c.near("min_W2", min2, -0.009, 0.005);
    c.runtime(t0.elapsed(), Duration::from_secs(1));
    c.finish("raw-table-row", t0.elapsed())
}

/// Criterion 3: corrected row (ideal detection, all else unchanged).
pub fn criterion_corrected_row() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let rp = reduce(&raw_params().corrected());
    let (min2, w2o) = critical_values_model(&rp, Conditioning::Coincidence);
    let (_, w1o) = critical_values_model(&rp, Conditioning::Single);
    c.near("W1_origin", w1o, -0.123, 0.005);
    c.near("min_W2", min2, -0.034, 0.005);
    c.near("W2_origin", w2o, 0.062, 0.01);
    c.finish("corrected-table-row", t0.elapsed())
}

/// Criterion 4: agreement between the exact conditioning pipeline and the
/// closed form it limits to as the APD efficiency goes to zero.
///
/// The second leg's target is not attainable: the conditioned state's genuine
/// dependence on the APD efficiency is linear, sup|W(mu) - W(0)| ~
/// 5.7e-3 * mu at the reference operating point, so at mu = 0.06 the
/// distance to the closed form is ~3.4e-4, above the 1e-4 target. The
/// mu -> 0 leg converging like mu pins the limit itself as exact.
pub fn criterion_pipeline_equivalence() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let rp = reduce(&raw_params());
    let grid: Vec<(f64, f64)> = (0..64)
        .flat_map(|i| {
            (0..64).map(move |j| (-4.0 + 8.0 * i as f64 / 63.0, -4.0 + 8.0 * j as f64 / 63.0))
        })
        .collect();
    let sup_vs_closed = |mu: f64| -> f64 {
        let p = PhysicalParams { mu, ..raw_params() };
        let vals = exact_pipeline_wigner(&p, &grid).unwrap();
        grid.iter()
            .zip(vals.iter())
            .map(|(&(x, pp), &v)| (v - wigner_w2(&rp, x, pp)).abs())
            .fold(0.0f64, f64::max)
    };
    let d_small = sup_vs_closed(1e-4);
    let d_exp = sup_vs_closed(0.06);
    c.below("sup-norm at mu=1e-4", d_small, 1e-6);
    c.below("sup-norm at mu=0.06", d_exp, 1e-4);
    c.parts.push(format!(
        "measured slope d(sup)/d(mu) = {:.2e}",
        (d_exp - d_small) / (0.06 - 1e-4)
    ));
    c.runtime(t0.elapsed(), Duration::from_secs(5));
    c.finish("pipeline-equivalence", t0.elapsed())
}

fn simulate_reference_counts(
    seed: u64,
) -> (
    Vec<crate::sim::QuadratureRecord>,
    Vec<crate::sim::QuadratureRecord>,
) {
    let rp = reduce(&raw_params());
    let cfg = SimConfig {
        params: rp,
        counts: [0, 180_000, 105_000],
        phases: PhaseSchedule::Uniform(12),
        seed,
    };
    let recs = sample(&cfg).unwrap();
    let n1 = recs
        .iter()
        .filter(|r| r.channel == Conditioning::Single)
        .cloned()
        .collect();
    let n2 = recs
        .iter()
        .filter(|r| r.channel == Conditioning::Coincidence)
        .cloned()
        .collect();
    (n1, n2)
}

/// Criterion 5: end-to-end filtered back-projection at the reference
/// event counts. Critical values are read off the angular-averaged radial
/// profile, the noise-robust estimator appropriate for phase-symmetric
/// states (the raw grid extremum rides the deepest ramp-filter noise
/// spike and its values are reported alongside).
pub fn criterion_radon_end_to_end() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let rp = reduce(&raw_params());
    let (amin2, aw2o) = critical_values_model(&rp, Conditioning::Coincidence);
    let (_, aw1o) = critical_values_model(&rp, Conditioning::Single);
    let (n1, n2) = simulate_reference_counts(SELFTEST_SEED);
    let g2 = radon_reconstruct(
        &QuadratureHistogram::from_records(&n2, 12, 128).unwrap(),
        64,
    )
    .unwrap();
    let g1 = radon_reconstruct(
        &QuadratureHistogram::from_records(&n1, 12, 128).unwrap(),
        64,
    )
    .unwrap();
    let (rmin2, rw2o) = g2.critical_values_radial();
    let (rmin1, rw1o) = g1.critical_values_radial();
    c.near("n2 min_W", rmin2, amin2, 0.006);
    c.near("n2 W(0)", rw2o, aw2o, 0.006);
    c.near("n1 W(0)", rw1o, aw1o, 0.006);
    c.near("n1 min_W", rmin1, aw1o, 0.006);
    c.parts.push(format!(
        "raw grid extrema: n2 ({:.4}, {:.4}), n1 ({:.4}, {:.4})",
        g2.min_value, g2.value_at_origin, g1.min_value, g1.value_at_origin
    ));
    c.runtime(t0.elapsed(), Duration::from_secs(30));
    c.finish("radon-end-to-end", t0.elapsed())
}

/// Criterion 6: end-to-end loss-corrected MaxLik reconstruction recovers
/// the generated-state diagonals.
pub fn criterion_maxlik_end_to_end() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    let corrected = reduce(&raw_params().corrected());
    let want1 = fock_diagonals(&corrected, Conditioning::Single, 12).unwrap();
    let want2 = fock_diagonals(&corrected, Conditioning::Coincidence, 12).unwrap();
    let (n1, n2) = simulate_reference_counts(SELFTEST_SEED);
    let cfg = MaxLikConfig {
        eta: 0.8,
        ..Default::default()
    };
    let est1 = maxlik_reconstruct(&n1, &cfg).unwrap();
    let est2 = maxlik_reconstruct(&n2, &cfg).unwrap();
    c.near("<2|rho2|2>", est2.diagonal().values[2], 0.52, 0.03);
    c.near(
        "<2|rho2|2> vs analytic",
        est2.diagonal().values[2],
        want2.values[2],
        0.03,
    );
    c.near(
        "<1|rho1|1> vs analytic",
        est1.diagonal().values[1],
        want1.values[1],
        0.03,
    );
    for est in [&est1, &est2] {
        let monotone = est
            .log_likelihood
            .windows(2)
            .all(|w| w[1] >= w[0] - w[0].abs() * 1e-12);
        c.holds("log-likelihood non-decreasing", monotone);
    }
    c.runtime(t0.elapsed(), Duration::from_secs(60));
    c.finish("maxlik-end-to-end", t0.elapsed())
}

/// Criterion 7: moment estimator — exact inversion on analytic moments,
/// statistical recovery at the reference counts, and cross-channel
/// consistency of delta at one million samples per channel.
pub fn criterion_moment_estimator() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    for &(s2, d) in &[(1.0, 2.0), (1.1308, 1.1924), (1.5, 0.4)] {
        let truth = ReducedParams::new(s2, d);
        for which in [Conditioning::Single, Conditioning::Coincidence] {
            let (m2, m4) = moments(&truth, which);
            let est = invert_moments(m2, m4, which).unwrap();
            c.holds(
                "exact inversion",
                (est.params.sigma2 - s2).abs() < 1e-12 && (est.params.delta - d).abs() < 1e-12,
            );
        }
    }
    let truth = reduce(&raw_params());
    let (n1, _) = simulate_reference_counts(SELFTEST_SEED);
    let est = moment_estimate(&n1, Conditioning::Single).unwrap();
    c.near("sigma2 at 180k", est.params.sigma2, truth.sigma2, 0.01);
    c.near("delta at 180k", est.params.delta, truth.delta, 0.05);
    // cross-channel delta consistency at 1e6 per channel
    let cfg = SimConfig {
        params: truth,
        counts: [0, 1_000_000, 1_000_000],
        phases: PhaseSchedule::Uniform(12),
        seed: SELFTEST_SEED,
    };
    let recs = sample(&cfg).unwrap();
    let big1: Vec<_> = recs
        .iter()
        .filter(|r| r.channel == Conditioning::Single)
        .cloned()
        .collect();
    let big2: Vec<_> = recs
        .iter()
        .filter(|r| r.channel == Conditioning::Coincidence)
        .cloned()
        .collect();
    let e1 = moment_estimate(&big1, Conditioning::Single).unwrap();
    let e2 = moment_estimate(&big2, Conditioning::Coincidence).unwrap();
    let mismatch =
        (e1.params.delta - e2.params.delta).abs() / (0.5 * (e1.params.delta + e2.params.delta));
    c.below("delta mismatch n1 vs n2", mismatch, 0.02);
    c.finish("moment-estimator", t0.elapsed())
}

/// Criterion 8: property suites — normalization, marginals, Fock sums,
/// the sign of the negativity, and the loss composition law.
pub fn criterion_property_suites() -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Checks::new();
    // normalization of W and P to 1e-8 by quadrature
    for rp in [reduce(&raw_params()), ReducedParams::ideal()] {
        let radial = |f: &dyn Fn(f64) -> f64| -> f64 {
            let steps = 200_000;
            let rmax = 14.0;
            let dr = rmax / steps as f64;
            let mut acc = 0.0;
            for k in 0..=steps {
                let r = k as f64 * dr;
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                acc += w * f(r) * r;
            }
            2.0 * std::f64::consts::PI * acc * dr
        };
        let int_w2 = radial(&|r| w2_radial(&rp, r * r));
        let int_w1 = radial(&|r| w1_radial(&rp, r * r));
        c.holds("int W2 = 1", (int_w2 - 1.0).abs() < 1e-8);
        c.holds("int W1 = 1", (int_w1 - 1.0).abs() < 1e-8);
        let line = |f: &dyn Fn(f64) -> f64| -> f64 {
            let steps = 100_000;
            let xmax = 14.0;
            let dx = 2.0 * xmax / steps as f64;
            let mut acc = 0.0;
            for k in 0..=steps {
                let x = -xmax + k as f64 * dx;
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                acc += w * f(x);
            }
            acc * dx
        };
        let int_p2 = line(&|x| quad_p2(&rp, x));
        let int_p1 = line(&|x| quad_p1(&rp, x));
        c.holds("int P2 = 1", (int_p2 - 1.0).abs() < 1e-8);
        c.holds("int P1 = 1", (int_p1 - 1.0).abs() < 1e-8);
    }
    // marginal of W equals P pointwise to 1e-9
    let rp = reduce(&raw_params());
    for &x in &[0.0, 0.5, 1.2, 2.1] {
        let marg = |w: &dyn Fn(f64, f64) -> f64| -> f64 {
            let steps = 8000;
            let pmax = 12.0;
            let dp = 2.0 * pmax / steps as f64;
            let mut acc = 0.0;
            for k in 0..=steps {
                let p = -pmax + k as f64 * dp;
                let wt = if k == 0 || k == steps { 0.5 } else { 1.0 };
                acc += wt * w(x, p);
            }
            acc * dp
        };
        c.holds(
            "marginal W2 = P2",
            (marg(&|x, p| wigner_w2(&rp, x, p)) - quad_p2(&rp, x)).abs() < 1e-9,
        );
        c.holds(
            "marginal W1 = P1",
            (marg(&|x, p| wigner_w1(&rp, x, p)) - quad_p1(&rp, x)).abs() < 1e-9,
        );
    }
    // Fock diagonals sum to 1 at n_max = 40
    for rp in [reduce(&raw_params()), reduce(&raw_params().corrected())] {
        for which in [
            Conditioning::None,
            Conditioning::Single,
            Conditioning::Coincidence,
        ] {
            let d = fock_diagonals(&rp, which, 40).unwrap();
            c.holds("fock sum = 1", (d.sum() - 1.0).abs() < 1e-9);
        }
    }
    // sign structure around delta = 1
    for &d in &[0.9, 1.0, 1.1] {
        let rp = ReducedParams::new(1.1, d);
        let w1_0 = wigner_w1(&rp, 0.0, 0.0);
        if d > 1.0 {
            c.holds("W1(0) < 0 iff delta > 1", w1_0 < 0.0);
        } else {
            c.holds("W1(0) >= 0 iff delta <= 1", w1_0 >= -1e-15);
        }
    }
    // loss composition law on covariances
    let s = SignedGaussianMixture::two_mode_squeezed(1.3, 1.05).unwrap();
    let a = s.apply_loss(0, 0.7).unwrap().apply_loss(0, 0.6).unwrap();
    let b = s.apply_loss(0, 0.7 * 0.6).unwrap();
    let max_dev = a.components()[0]
        .covariance
        .iter()
        .zip(b.components()[0].covariance.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    c.holds("loss composition exact", max_dev < 1e-15);
    c.finish("property-suites", t0.elapsed())
}

/// Run all eight criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_ideal_row(),
        criterion_raw_row(),
        criterion_corrected_row(),
        criterion_pipeline_equivalence(),
        criterion_radon_end_to_end(),
        criterion_maxlik_end_to_end(),
        criterion_moment_estimator(),
        criterion_property_suites(),
    ]
}
