//! Phase-resolved quadrature histograms.

use crate::sim::QuadratureRecord;
use crate::Error;

/// Records binned over K local-oscillator phases and a symmetric
/// amplitude range. Counts are `f64` so noise-free tabulated densities
/// can be fed through the same type.
#[derive(Clone, Debug)]
pub struct QuadratureHistogram {
    /// Mean phase of the records in each phase bin.
    pub phases: Vec<f64>,
    /// Amplitude bin edges, strictly increasing, len = n_bins + 1.
    pub edges: Vec<f64>,
    /// `counts[k][b]` for phase bin k, amplitude bin b.
    pub counts: Vec<Vec<f64>>,
    /// Per-phase totals.
    pub totals: Vec<f64>,
    pub total: f64,
    /// Samples outside the range, clipped into the edge bins.
    pub clipped: usize,
}

impl QuadratureHistogram {
    /// Bin records into `k_phases` x `n_bins`. The amplitude range is
    /// +-5 sqrt(2 m2) rounded outward to the next integer.
    pub fn from_records(
        records: &[QuadratureRecord],
        k_phases: usize,
        n_bins: usize,
    ) -> Result<Self, Error> {
        if records.is_empty() {
            return Err(Error::EmptyRecords);
        }
        if k_phases < 1 {
            return Err(Error::TooFewPhases(k_phases));
        }
        let m2 = records.iter().map(|r| r.x * r.x).sum::<f64>() / records.len() as f64;
        let half_range = (5.0 * (2.0 * m2).sqrt()).ceil();
        let mut h = Self::empty(k_phases, n_bins, half_range);
        let mut phase_sum = vec![0.0f64; k_phases];
        for r in records {
            let k = phase_bin(r.theta, k_phases);
            let (b, clip) = h.amplitude_bin(r.x);
            h.counts[k][b] += 1.0;
            h.totals[k] += 1.0;
            h.total += 1.0;
            phase_sum[k] += r.theta;
            if clip {
                h.clipped += 1;
            }
        }
        for k in 0..k_phases {
            h.phases[k] = if h.totals[k] > 0.0 {
                phase_sum[k] / h.totals[k]
            } else {
                (k as f64 + 0.5) * std::f64::consts::PI / k_phases as f64
            };
        }
        Ok(h)
    }

    /// Tabulate a phase-independent analytic density as noise-free
    /// expected counts at K uniformly spaced phases.
    pub fn from_density<F: Fn(f64) -> f64>(
        density: F,
        k_phases: usize,
        n_bins: usize,
        half_range: f64,
    ) -> Result<Self, Error> {
        if k_phases < 1 {
            return Err(Error::TooFewPhases(k_phases));
        }
        let mut h = Self::empty(k_phases, n_bins, half_range);
        let width = h.edges[1] - h.edges[0];
        for b in 0..n_bins {
            let center = 0.5 * (h.edges[b] + h.edges[b + 1]);
            let c = density(center) * width;
            for k in 0..k_phases {
                h.counts[k][b] = c;
                h.totals[k] += c;
            }
            h.total += c * k_phases as f64;
        }
        for k in 0..k_phases {
            h.phases[k] = k as f64 * std::f64::consts::PI / k_phases as f64;
        }
        Ok(h)
    }

    fn empty(k_phases: usize, n_bins: usize, half_range: f64) -> Self {
        let edges = (0..=n_bins)
            .map(|i| -half_range + 2.0 * half_range * i as f64 / n_bins as f64)
            .collect();
        QuadratureHistogram {
            phases: vec![0.0; k_phases],
            edges,
            counts: vec![vec![0.0; n_bins]; k_phases],
            totals: vec![0.0; k_phases],
            total: 0.0,
            clipped: 0,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        0.5 * (self.edges[b] + self.edges[b + 1])
    }

    /// Empirical second moment from the binned counts.
    pub fn second_moment(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.n_phases() {
            for b in 0..self.n_bins() {
                let c = self.bin_center(b);
                acc += self.counts[k][b] * c * c;
            }
        }
        acc / self.total
    }

    fn amplitude_bin(&self, x: f64) -> (usize, bool) {
        let n = self.n_bins();
        let lo = self.edges[0];
        let hi = self.edges[n];
        if x < lo {
            return (0, true);
        }
        if x >= hi {
            return (n - 1, true);
        }
        let b = ((x - lo) / self.bin_width()) as usize;
        (b.min(n - 1), false)
    }
}

fn phase_bin(theta: f64, k: usize) -> usize {
    let frac = theta / std::f64::consts::PI;
    ((frac * k as f64) as usize).min(k - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Conditioning;

    #[test]
    fn counts_sum_to_total_and_edges_increase() {
        let records: Vec<QuadratureRecord> = (0..1000)
            .map(|i| QuadratureRecord {
                theta: (i % 8) as f64 * std::f64::consts::PI / 8.0,
                x: (i as f64 * 0.017).sin() * 2.0,
                channel: Conditioning::Single,
            })
            .collect();
        let h = QuadratureHistogram::from_records(&records, 8, 64).unwrap();
        let sum: f64 = h.counts.iter().flatten().sum();
        assert_eq!(sum, h.total);
        assert_eq!(h.total, 1000.0);
        assert!(h.edges.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(h.clipped, 0);
    }

    #[test]
    fn clipping_counter() {
        let mut records = vec![
            QuadratureRecord {
                theta: 0.0,
                x: 0.0,
                channel: Conditioning::None,
            };
            100
        ];
        records.push(QuadratureRecord {
            theta: 0.0,
            x: 1e6,
            channel: Conditioning::None,
        });
        let h = QuadratureHistogram::from_records(&records, 1, 16).unwrap();
        assert!(h.clipped >= 1);
        assert_eq!(h.total, 101.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(QuadratureHistogram::from_records(&[], 4, 64).is_err());
    }

    #[test]
    fn density_tabulation_normalizes_per_phase() {
        let h = QuadratureHistogram::from_density(
            |x| (-x * x).exp() / std::f64::consts::PI.sqrt(),
            16,
            64,
            6.0,
        )
        .unwrap();
        for k in 0..16 {
            assert!((h.totals[k] - 1.0).abs() < 1e-6);
        }
    }
}
