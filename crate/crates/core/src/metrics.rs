//! Area spectral efficiency and coverage estimators over Monte Carlo SINR
//! samples.
//!
//! ASE = area density of served streams x mean spectral efficiency of a
//! served stream, where streams below the service threshold contribute zero
//! rate but still count in the mean. Confidence intervals are
//! cluster-robust over drops: samples from one drop share a network
//! realization and are not independent.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One measured-UE observation from one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub sinr: f64,
    /// Whether the measured UE won a downlink stream this drop.
    pub scheduled: bool,
    pub drop_index: u32,
}

/// All samples of one simulated operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrSampleSet {
    pub samples: Vec<SinrSample>,
    /// Active BSs per km^2 measured over the drops.
    pub empirical_active_density_km2: f64,
    /// Hash of the generating configuration, for traceability.
    pub config_hash: String,
}

/// What the area term counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamWeighting {
    /// Served streams per km^2: active density x mean scheduled UEs per
    /// active cell.
    ScheduledStreams,
    /// Active cells per km^2 alone.
    ActiveCells,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AseOptions {
    /// Service threshold (linear); streams at or above it carry rate.
    pub gamma0_linear: f64,
    /// Active-cell density feeding the area term, measured or closed form.
    pub active_density_km2: f64,
    pub weighting: StreamWeighting,
    /// Mean scheduled UEs per active cell; only read under
    /// [`StreamWeighting::ScheduledStreams`].
    pub mean_streams_per_cell: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AseEstimate {
    pub ase_bps_hz_km2: f64,
    /// Mean rate of a scheduled stream, threshold applied.
    pub mean_se_bps_hz: f64,
    /// 95% half-width on the ASE; absent with fewer than two contributing
    /// drops.
    pub ci95_bps_hz_km2: Option<f64>,
    /// The area density actually used, after stream weighting.
    pub area_density_km2: f64,
    /// Threshold the estimate was taken at (linear).
    pub gamma0_linear: f64,
    pub n_scheduled: usize,
    pub n_drops_with_samples: usize,
}

/// Compensated accumulator; drop counts run to 10^5 and the CI math squares
/// small residuals, so plain summation is not good enough to keep results
/// bit-stable across refactors.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn thresholded_rate(sinr: f64, gamma0: f64) -> f64 {
    if sinr >= gamma0 {
        (1.0 + sinr).log2()
    } else {
        0.0
    }
}

/// Estimate the area spectral efficiency of the sampled operating point.
pub fn ase(set: &SinrSampleSet, opts: &AseOptions) -> Result<AseEstimate, Error> {
    if !(opts.gamma0_linear >= 0.0) || !opts.gamma0_linear.is_finite() {
        return Err(Error::Domain(format!(
            "service threshold must be finite and >= 0, got {}",
            opts.gamma0_linear
        )));
    }
    if !(opts.active_density_km2 > 0.0) || !opts.active_density_km2.is_finite() {
        return Err(Error::Domain(format!(
            "active density must be finite and > 0, got {}",
            opts.active_density_km2
        )));
    }
    let area_density_km2 = match opts.weighting {
        StreamWeighting::ActiveCells => opts.active_density_km2,
        StreamWeighting::ScheduledStreams => {
            if !(opts.mean_streams_per_cell > 0.0) || !opts.mean_streams_per_cell.is_finite() {
                return Err(Error::Domain(format!(
                    "mean streams per cell must be finite and > 0, got {}",
                    opts.mean_streams_per_cell
                )));
            }
            opts.active_density_km2 * opts.mean_streams_per_cell
        }
    };

    // Per-drop totals keyed by drop index, in index order so the variance
    // sum is independent of sample ordering.
    let mut per_drop: std::collections::BTreeMap<u32, (Kahan, u64)> =
        std::collections::BTreeMap::new();
    let mut n_scheduled = 0usize;
    for s in &set.samples {
        if !s.scheduled {
            continue;
        }
        if !s.sinr.is_finite() || s.sinr < 0.0 {
            return Err(Error::Domain(format!(
                "scheduled sample in drop {} has invalid SINR {}",
                s.drop_index, s.sinr
            )));
        }
        n_scheduled += 1;
        let entry = per_drop.entry(s.drop_index).or_default();
        entry.0.add(thresholded_rate(s.sinr, opts.gamma0_linear));
        entry.1 += 1;
    }
    if n_scheduled == 0 {
        return Err(Error::EmptySampleSet(
            "no scheduled SINR samples; cannot estimate spectral efficiency".into(),
        ));
    }

    let mut total = Kahan::default();
    for (sum, _) in per_drop.values() {
        total.add(sum.sum);
    }
    let mean_se = total.sum / n_scheduled as f64;

    let n_drops = per_drop.len();
    let ci95 = if n_drops >= 2 {
        // Cluster-robust variance of the ratio estimator: residuals are per
        // drop, so correlated samples within a drop cannot fake precision.
        let mut sq = Kahan::default();
        for (sum, count) in per_drop.values() {
            let e = sum.sum - mean_se * *count as f64;
            sq.add(e * e);
        }
        let var = sq.sum / (n_scheduled as f64 * n_scheduled as f64);
        Some(1.96 * var.sqrt() * area_density_km2)
    } else {
        None
    };

    Ok(AseEstimate {
        ase_bps_hz_km2: area_density_km2 * mean_se,
        mean_se_bps_hz: mean_se,
        ci95_bps_hz_km2: ci95,
        area_density_km2,
        gamma0_linear: opts.gamma0_linear,
        n_scheduled,
        n_drops_with_samples: n_drops,
    })
}

/// Sorted-sample empirical distribution of scheduled SINRs.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self, Error> {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::EmptySampleSet("empirical CDF needs at least one value".into()));
        }
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("empirical CDF values must be finite".into()));
        }
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    /// Distribution of the scheduled samples in the set.
    pub fn from_scheduled(set: &SinrSampleSet) -> Result<Self, Error> {
        Self::from_values(set.samples.iter().filter(|s| s.scheduled).map(|s| s.sinr))
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    /// Right-continuous CDF: fraction of samples <= x.
    pub fn fraction_at_most(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|v| *v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// Fraction strictly above x; at a service threshold this is coverage.
    pub fn fraction_above(&self, x: f64) -> f64 {
        1.0 - self.fraction_at_most(x)
    }

    /// Order-statistic quantile, q in [0, 1].
    pub fn quantile(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q), "quantile level {q} outside [0, 1]");
        let n = self.sorted.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }
}

/// Fraction of scheduled streams strictly above the threshold.
pub fn coverage(set: &SinrSampleSet, gamma0_linear: f64) -> Result<f64, Error> {
    Ok(EmpiricalCdf::from_scheduled(set)?.fraction_above(gamma0_linear))
}
