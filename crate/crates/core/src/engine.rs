//! Drop pipeline and deterministic parallel Monte Carlo execution.
//!
//! One drop realizes the whole chain: BS and UE point patterns, strongest-gain
//! association, scheduling with pilot assignment, uplink training, MMSE
//! estimation, zero-forcing precoding, and the SINR decomposition at each
//! measurement point.
//!
//! Reproducibility contract: drop `i` draws from ChaCha streams derived only
//! from `(master_seed, i, resampling attempt)`, so results are independent of
//! worker count and schedule, and a re-run of the same configuration is
//! byte-identical. Geometry, scheduling and fading use one stream; pilot-stage
//! noise and folded interference draws use a second, so runs with training
//! disabled still see the exact same network and fading realizations.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{
    draw_channel, mmse_estimate, observe_pilot, uplink_tx_power, ChannelVector, EstimatedChannel,
    MmseDenominator, PilotContributor,
};
use crate::error::Error;
use crate::geometry::{
    place_measurement_points, sample_hppp, toroidal_distance_2d, Window,
};
use crate::metrics::{self, AseEstimate, AseOptions, SinrSample, SinrSampleSet, StreamWeighting};
use crate::network::{associate, build_cells, scheduling_cap, DeploymentBudget, NbModel};
use crate::precoding::{measured_sinr, zf_precoders, InterferenceSource, SinrBreakdown};
use crate::propagation::PathLossModel;

/// Where the active-cell density in the ASE area term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensitySource {
    /// Active cells counted over the simulated drops.
    Measured,
    /// The negative-binomial load model's closed form.
    ClosedForm,
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dB to linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Full description of one simulated operating point. All powers in watts,
/// all ratios linear; converting from dB/dBm is the caller's job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Total antenna budget per km^2, split as `bs_density * antennas_per_bs`.
    pub antenna_density_km2: f64,
    pub antennas_per_bs: usize,
    /// UE intensity per km^2.
    pub ue_density_km2: f64,
    /// Dispersion of the negative-binomial cell-load model.
    pub load_model_q: f64,
    pub window: Window,
    /// Measurement UEs per drop (1..=4), mutually well separated.
    pub measurement_points: usize,
    pub path_loss: PathLossModel,
    /// Orthogonal pilots per cell, which also caps the scheduled UEs.
    pub pilot_count: usize,
    /// Total downlink transmit power per BS.
    pub p_bs_tx_w: f64,
    pub noise_dl_w: f64,
    pub noise_ul_w: f64,
    /// Uplink power-control baseline: received pilot power at full inversion.
    pub p_ue_w: f64,
    /// Fractional power-control exponent; 1 inverts the path loss exactly.
    pub power_control_eps: f64,
    /// Train channels from contaminated pilots; off means genie CSI.
    pub pilot_contamination: bool,
    pub mmse_denominator: MmseDenominator,
    /// Service threshold (linear).
    pub gamma0_linear: f64,
    pub weighting: StreamWeighting,
    pub density_source: DensitySource,
    pub n_drops: u32,
    pub master_seed: u64,
}

impl SimConfig {
    /// Operating point with the study's default system parameters: 4 km
    /// torus, load dispersion 3.5, 20 pilots, 24 dBm BS power, -95 dBm noise,
    /// 10 dBm uplink baseline with full path-loss inversion, 0 dB service
    /// threshold, contaminated training with the standard MMSE denominator.
    pub fn baseline(antenna_density_km2: f64, antennas_per_bs: usize, ue_density_km2: f64) -> Self {
        SimConfig {
            antenna_density_km2,
            antennas_per_bs,
            ue_density_km2,
            load_model_q: 3.5,
            window: Window::new(4.0),
            measurement_points: 1,
            path_loss: PathLossModel::urban_micro(),
            pilot_count: 20,
            p_bs_tx_w: dbm_to_watts(24.0),
            noise_dl_w: dbm_to_watts(-95.0),
            noise_ul_w: dbm_to_watts(-95.0),
            p_ue_w: dbm_to_watts(10.0),
            power_control_eps: 1.0,
            pilot_contamination: true,
            mmse_denominator: MmseDenominator::Standard,
            gamma0_linear: 1.0,
            weighting: StreamWeighting::ScheduledStreams,
            density_source: DensitySource::Measured,
            n_drops: 1000,
            master_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.window.validate()?;
        self.path_loss.validate()?;
        self.budget()?;
        let positive = [
            ("BS transmit power", self.p_bs_tx_w),
            ("downlink noise power", self.noise_dl_w),
            ("uplink noise power", self.noise_ul_w),
            ("uplink baseline power", self.p_ue_w),
            ("load model dispersion", self.load_model_q),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.ue_density_km2 >= 0.0) || !self.ue_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "UE density must be non-negative and finite, got {}",
                self.ue_density_km2
            )));
        }
        if !(self.power_control_eps >= 0.0) || !self.power_control_eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "power-control exponent must be non-negative and finite, got {}",
                self.power_control_eps
            )));
        }
        if !(self.gamma0_linear >= 0.0) || !self.gamma0_linear.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "service threshold must be non-negative and finite, got {}",
                self.gamma0_linear
            )));
        }
        if !(1..=4).contains(&self.measurement_points) {
            return Err(Error::InvalidConfig(format!(
                "measurement points must lie in 1..=4, got {}",
                self.measurement_points
            )));
        }
        if self.pilot_count == 0 || self.pilot_count > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "pilot count must lie in 1..={}, got {}",
                u16::MAX,
                self.pilot_count
            )));
        }
        if self.n_drops == 0 {
            return Err(Error::InvalidConfig("drop count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> Result<DeploymentBudget, Error> {
        DeploymentBudget::from_antennas_per_bs(self.antenna_density_km2, self.antennas_per_bs)
    }

    pub fn bs_density_km2(&self) -> f64 {
        self.antenna_density_km2 / self.antennas_per_bs as f64
    }

    /// Scheduled UEs per cell are capped at `antennas / 4`, clamped to
    /// `1..=pilot_count`.
    pub fn k_u(&self) -> usize {
        scheduling_cap(self.antennas_per_bs, self.pilot_count)
    }

    pub fn nb_model(&self) -> Result<NbModel, Error> {
        NbModel::new(self.bs_density_km2(), self.ue_density_km2, self.load_model_q)
    }

    /// Hex digest identifying this exact configuration (seed and drop count
    /// included); carried into sample sets and result rows.
    pub fn config_hash(&self) -> String {
        let canonical =
            serde_json::to_string(self).expect("a plain-data config always serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// What one measurement UE saw in one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementOutcome {
    Scheduled(SinrBreakdown),
    /// Attached to a cell whose schedule did not include it.
    Unscheduled,
}

/// Everything recorded from one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub drop_index: u32,
    /// One entry per measurement point, in placement order.
    pub outcomes: Vec<MeasurementOutcome>,
    /// BSs realized in the window.
    pub realized_bs: u32,
    /// BSs with at least one attached UE.
    pub active_bs: u32,
    /// `k_hat_hist[k]`: active cells scheduling exactly `k` UEs, `k` in
    /// `1..=k_u`; index 0 stays zero.
    pub k_hat_hist: Vec<u64>,
    /// Attempts discarded before this drop produced a valid realization.
    pub resample_attempts: u32,
}

const TRAIN_STREAM_FLAG: u64 = 1 << 63;

/// Resampling cutoff; hitting it means the configuration itself is broken
/// (e.g. an expected BS count so low that every draw is empty).
pub const MAX_RESAMPLE_ATTEMPTS: u32 = 64;

enum AttemptOutcome {
    Done(DropResult),
    /// Bad draw (empty window or numerically dependent estimates): retry the
    /// drop on a fresh stream.
    Resample,
}

fn drop_streams(cfg: &SimConfig, drop_index: u32, attempt: u32) -> (ChaCha8Rng, ChaCha8Rng) {
    let stream = ((attempt as u64) << 32) | drop_index as u64;
    let mut geo = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    geo.set_stream(stream);
    let mut train = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    train.set_stream(stream | TRAIN_STREAM_FLAG);
    (geo, train)
}

/// Simulate one drop, resampling bad draws on fresh streams.
pub fn run_drop(cfg: &SimConfig, drop_index: u32) -> Result<DropResult, Error> {
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        match run_attempt(cfg, drop_index, attempt)? {
            AttemptOutcome::Done(mut d) => {
                d.resample_attempts = attempt;
                return Ok(d);
            }
            AttemptOutcome::Resample => continue,
        }
    }
    Err(Error::Domain(format!(
        "drop {drop_index} produced no valid realization in {MAX_RESAMPLE_ATTEMPTS} attempts"
    )))
}

fn run_attempt(cfg: &SimConfig, drop_index: u32, attempt: u32) -> Result<AttemptOutcome, Error> {
    let (mut geo, mut train) = drop_streams(cfg, drop_index, attempt);
    let window = &cfg.window;

    // Stage 1: deployment and association.
    let bs = sample_hppp(cfg.bs_density_km2(), window, &mut geo)?;
    if bs.is_empty() {
        return Ok(AttemptOutcome::Resample);
    }
    let ues = sample_hppp(cfg.ue_density_km2, window, &mut geo)?;
    let ues = place_measurement_points(ues, window, cfg.measurement_points)?;
    let assoc = associate(&bs, &ues, &cfg.path_loss, window, &mut geo)?;

    // Stage 2: activation and scheduling.
    let k_u = cfg.k_u();
    let cells = build_cells(bs.len(), &assoc, k_u, cfg.pilot_count, cfg.p_bs_tx_w, &mut geo)?;

    let active: Vec<u32> =
        cells.iter().filter(|c| c.is_active()).map(|c| c.bs_index).collect();
    let mut active_pos: Vec<u32> = vec![u32::MAX; bs.len()];
    for (pos, &b) in active.iter().enumerate() {
        active_pos[b as usize] = pos as u32;
    }
    let mut k_hat_hist = vec![0u64; k_u + 1];
    for c in &cells {
        if c.is_active() {
            k_hat_hist[c.k_hat()] += 1;
        }
    }

    let n_mp = cfg.measurement_points;
    let mut result = DropResult {
        drop_index,
        outcomes: vec![MeasurementOutcome::Unscheduled; n_mp],
        realized_bs: bs.len() as u32,
        active_bs: active.len() as u32,
        k_hat_hist,
        resample_attempts: 0,
    };

    // (active position, beam slot) of each measurement point that won a stream.
    let measured_slot: Vec<Option<(usize, usize)>> = (0..n_mp)
        .map(|mp| {
            let cell = &cells[assoc[mp].serving_bs as usize];
            cell.scheduled_ues
                .iter()
                .position(|&u| u == mp as u32)
                .map(|slot| (active_pos[cell.bs_index as usize] as usize, slot))
        })
        .collect();
    if measured_slot.iter().all(Option::is_none) {
        // Nothing to measure; the activity census above is all this drop adds.
        return Ok(AttemptOutcome::Done(result));
    }

    let m_ant = cfg.antennas_per_bs;
    let n_active = active.len();

    // Stage 3: true channels from every active BS to every measurement point.
    // Large-scale gains reuse what the association scan materialized, so a
    // BS-UE pair never sees two conflicting LoS draws within a drop.
    let mut dense_gain = vec![vec![0.0f64; n_active]; n_mp];
    for (pos, &b) in active.iter().enumerate() {
        for mp in 0..n_mp {
            dense_gain[mp][pos] = match assoc[mp].gain_to(b) {
                Some(g) => g,
                None => {
                    let r = toroidal_distance_2d(ues.points[mp], bs.points[b as usize], window);
                    cfg.path_loss.materialize_link(r, &mut geo).gain
                }
            };
        }
    }
    let mut g: Vec<Vec<ChannelVector>> =
        (0..n_mp).map(|_| Vec::with_capacity(n_active)).collect();
    for pos in 0..n_active {
        for (mp, g_mp) in g.iter_mut().enumerate() {
            g_mp.push(draw_channel(dense_gain[mp][pos], m_ant, &mut geo));
        }
    }

    // Stage 4: serving channels of every scheduled UE. Measurement points
    // reuse their stage-3 vector: one fading realization per BS-UE pair.
    let mut own: Vec<Vec<ChannelVector>> = Vec::with_capacity(n_active);
    for &b in &active {
        let cell = &cells[b as usize];
        let mut v = Vec::with_capacity(cell.k_hat());
        for &ue in &cell.scheduled_ues {
            if (ue as usize) < n_mp {
                debug_assert_eq!(assoc[ue as usize].serving_bs, b);
                v.push(g[ue as usize][active_pos[b as usize] as usize].clone());
            } else {
                v.push(draw_channel(assoc[ue as usize].serving_link.gain, m_ant, &mut geo));
            }
        }
        own.push(v);
    }

    // Stage 5: channel estimates per scheduled UE.
    let estimates: Vec<Vec<EstimatedChannel>> = if !cfg.pilot_contamination {
        own.iter().map(|cell| cell.iter().map(EstimatedChannel::perfect).collect()).collect()
    } else {
        // Uplink transmit powers under fractional power control.
        let powers: Vec<Vec<f64>> = active
            .iter()
            .map(|&b| {
                cells[b as usize]
                    .scheduled_ues
                    .iter()
                    .map(|&ue| {
                        uplink_tx_power(
                            assoc[ue as usize].serving_link.gain,
                            cfg.power_control_eps,
                            cfg.p_ue_w,
                        )
                    })
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        // Same-pilot reuse groups across cells: pilot -> [(active pos, slot)].
        let mut groups: Vec<Vec<(u32, u16)>> = vec![Vec::new(); cfg.pilot_count];
        for (pos, &b) in active.iter().enumerate() {
            for (slot, &p) in cells[b as usize].pilots.iter().enumerate() {
                groups[p as usize].push((pos as u32, slot as u16));
            }
        }
        let mut all = Vec::with_capacity(n_active);
        let mut contribs: Vec<PilotContributor<'_>> = Vec::new();
        for (pos, &b) in active.iter().enumerate() {
            let cell = &cells[b as usize];
            let mut cell_est = Vec::with_capacity(cell.k_hat());
            for (slot, &p) in cell.pilots.iter().enumerate() {
                contribs.clear();
                // Non-measured contributors only matter through the summed
                // received power, so they collapse into one folded entry.
                let mut folded_power_gain = 0.0f64;
                for &(pos2, slot2) in &groups[p as usize] {
                    let (pos2, slot2) = (pos2 as usize, slot2 as usize);
                    if pos2 == pos {
                        debug_assert_eq!(slot2, slot, "pilots are distinct within a cell");
                        continue;
                    }
                    let ue2 = cells[active[pos2] as usize].scheduled_ues[slot2] as usize;
                    let power_w = powers[pos2][slot2];
                    if ue2 < n_mp {
                        // A measured UE's fading also shapes its downlink
                        // interference, so it enters the pilot explicitly.
                        contribs.push(PilotContributor::Explicit {
                            power_w,
                            channel: &g[ue2][pos],
                        });
                    } else {
                        let gain = match assoc[ue2].gain_to(b) {
                            Some(gn) => gn,
                            None => {
                                let r = toroidal_distance_2d(
                                    ues.points[ue2],
                                    bs.points[b as usize],
                                    window,
                                );
                                cfg.path_loss.materialize_link(r, &mut train).gain
                            }
                        };
                        folded_power_gain += power_w * gain;
                    }
                }
                if folded_power_gain > 0.0 {
                    contribs.push(PilotContributor::Folded {
                        power_w: 1.0,
                        gain: folded_power_gain,
                    });
                }
                let obs = observe_pilot(
                    powers[pos][slot],
                    &own[pos][slot],
                    &contribs,
                    cfg.noise_ul_w,
                    &mut train,
                );
                cell_est.push(mmse_estimate(
                    &obs,
                    powers[pos][slot],
                    &own[pos][slot],
                    cfg.noise_ul_w,
                    cfg.mmse_denominator,
                )?);
            }
            all.push(cell_est);
        }
        all
    };

    // Stage 6: zero-forcing precoders for every active cell.
    let mut precoders = Vec::with_capacity(n_active);
    for (pos, &b) in active.iter().enumerate() {
        let rows: Vec<&[Complex64]> =
            estimates[pos].iter().map(|e| e.estimate.as_slice()).collect();
        match zf_precoders(&rows, cells[b as usize].per_ue_power_w) {
            Ok(p) => precoders.push(p),
            Err(Error::RankDeficient { .. }) => return Ok(AttemptOutcome::Resample),
            Err(e) => return Err(e),
        }
    }

    // Stage 7: SINR decomposition at each scheduled measurement point.
    for (mp, slot) in measured_slot.iter().enumerate() {
        let &Some((pos0, slot0)) = slot else { continue };
        let est = &estimates[pos0][slot0];
        let sources: Vec<InterferenceSource<'_>> = (0..n_active)
            .map(|pos| InterferenceSource {
                precoders: &precoders[pos],
                channel: &g[mp][pos].entries,
                skip_stream: (pos == pos0).then_some(slot0),
            })
            .collect();
        let breakdown = measured_sinr(
            &precoders[pos0],
            slot0,
            &est.estimate,
            &est.error,
            &sources,
            cfg.noise_dl_w,
        );
        result.outcomes[mp] = MeasurementOutcome::Scheduled(breakdown);
    }
    Ok(AttemptOutcome::Done(result))
}

/// Aggregated Monte Carlo output of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub samples: SinrSampleSet,
    pub n_drops: u32,
    pub measurement_points: usize,
    pub realized_bs_total: u64,
    pub active_bs_total: u64,
    /// Pooled over drops; `k_hat_hist[k]` counts active cells scheduling `k`.
    pub k_hat_hist: Vec<u64>,
    pub total_resamples: u64,
    pub n_unscheduled: u64,
    pub closed_form_active_density_km2: f64,
}

impl PointSummary {
    pub fn empirical_active_density_km2(&self) -> f64 {
        self.samples.empirical_active_density_km2
    }

    /// Mean scheduled UEs per active cell.
    pub fn mean_k_hat(&self) -> f64 {
        let cells: u64 = self.k_hat_hist.iter().sum();
        let streams: u64 =
            self.k_hat_hist.iter().enumerate().map(|(k, &n)| k as u64 * n).sum();
        streams as f64 / cells as f64
    }

    /// Scheduled-count distribution over active cells.
    pub fn k_hat_pmf(&self) -> Vec<f64> {
        let cells: u64 = self.k_hat_hist.iter().sum();
        self.k_hat_hist.iter().map(|&n| n as f64 / cells as f64).collect()
    }

    fn ase_options(&self, cfg: &SimConfig) -> AseOptions {
        let active_density_km2 = match cfg.density_source {
            DensitySource::Measured => self.empirical_active_density_km2(),
            DensitySource::ClosedForm => self.closed_form_active_density_km2,
        };
        AseOptions {
            gamma0_linear: cfg.gamma0_linear,
            active_density_km2,
            weighting: cfg.weighting,
            mean_streams_per_cell: self.mean_k_hat(),
        }
    }

    /// Area spectral efficiency under the config's density and weighting
    /// choices.
    pub fn ase(&self, cfg: &SimConfig) -> Result<AseEstimate, Error> {
        metrics::ase(&self.samples, &self.ase_options(cfg))
    }

    /// Fraction of scheduled measurements strictly above the threshold.
    pub fn coverage(&self, cfg: &SimConfig) -> Result<f64, Error> {
        metrics::coverage(&self.samples, cfg.gamma0_linear)
    }
}

fn run_drop_range(
    cfg: &SimConfig,
    range: std::ops::Range<u32>,
    workers: usize,
) -> Result<Vec<DropResult>, Error> {
    match workers {
        1 => range.map(|i| run_drop(cfg, i)).collect(),
        0 => range.into_par_iter().map(|i| run_drop(cfg, i)).collect(),
        n => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| {
                Error::InvalidConfig(format!("cannot build a {n}-thread pool: {e}"))
            })?;
            pool.install(|| range.into_par_iter().map(|i| run_drop(cfg, i)).collect())
        }
    }
}

/// Fold completed drops into a summary; `cfg.n_drops` must equal their count.
fn summarize(cfg: &SimConfig, drops: &[DropResult]) -> Result<PointSummary, Error> {
    debug_assert_eq!(drops.len(), cfg.n_drops as usize);
    let mut samples = Vec::with_capacity(drops.len() * cfg.measurement_points);
    let mut k_hat_hist = vec![0u64; cfg.k_u() + 1];
    let (mut realized, mut active, mut resamples, mut unscheduled) = (0u64, 0u64, 0u64, 0u64);
    for d in drops {
        for outcome in &d.outcomes {
            match outcome {
                MeasurementOutcome::Scheduled(b) => samples.push(SinrSample {
                    sinr: b.sinr(),
                    scheduled: true,
                    drop_index: d.drop_index,
                }),
                MeasurementOutcome::Unscheduled => {
                    unscheduled += 1;
                    samples.push(SinrSample {
                        sinr: 0.0,
                        scheduled: false,
                        drop_index: d.drop_index,
                    });
                }
            }
        }
        realized += d.realized_bs as u64;
        active += d.active_bs as u64;
        resamples += d.resample_attempts as u64;
        for (k, &n) in d.k_hat_hist.iter().enumerate() {
            k_hat_hist[k] += n;
        }
    }
    let area = cfg.window.area_km2();
    let empirical_active_density_km2 = active as f64 / (cfg.n_drops as f64 * area);
    Ok(PointSummary {
        samples: SinrSampleSet {
            samples,
            empirical_active_density_km2,
            config_hash: cfg.config_hash(),
        },
        n_drops: cfg.n_drops,
        measurement_points: cfg.measurement_points,
        realized_bs_total: realized,
        active_bs_total: active,
        k_hat_hist,
        total_resamples: resamples,
        n_unscheduled: unscheduled,
        closed_form_active_density_km2: cfg.nb_model()?.active_bs_density(),
    })
}

/// Run every drop of the configured point and aggregate.
///
/// `workers`: 0 uses the process-default thread pool, 1 runs serially in the
/// calling thread, n > 1 builds a dedicated pool. The output is identical in
/// all cases.
pub fn run_point(cfg: &SimConfig, workers: usize) -> Result<PointSummary, Error> {
    cfg.validate()?;
    let drops = run_drop_range(cfg, 0..cfg.n_drops, workers)?;
    summarize(cfg, &drops)
}

/// Adaptive stopping: run drops in batches until the relative 95% half-width
/// of the ASE reaches `rel_ci_target`, capped at `cfg.n_drops`.
///
/// The summary equals `run_point` at the reached drop count (`n_drops` in the
/// result and its config hash reflect that count), but *which* count is
/// reached depends on the target and batch size, so sample counts are not
/// seed-reproducible across differing stopping settings. Prefer fixed drop
/// counts when comparing runs.
pub fn run_point_adaptive(
    cfg: &SimConfig,
    workers: usize,
    rel_ci_target: f64,
    batch_drops: u32,
) -> Result<PointSummary, Error> {
    cfg.validate()?;
    if !(rel_ci_target > 0.0) || !rel_ci_target.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "relative CI target must be positive and finite, got {rel_ci_target}"
        )));
    }
    if batch_drops == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    let mut drops: Vec<DropResult> = Vec::new();
    let mut done = 0u32;
    loop {
        let next = cfg.n_drops.min(done.saturating_add(batch_drops));
        drops.extend(run_drop_range(cfg, done..next, workers)?);
        done = next;
        let mut at = cfg.clone();
        at.n_drops = done;
        let summary = summarize(&at, &drops)?;
        if done >= cfg.n_drops {
            return Ok(summary);
        }
        // Keep batching until the interval is measurable and tight enough.
        if let Ok(est) = summary.ase(&at) {
            if let Some(ci) = est.ci95_bps_hz_km2 {
                if est.ase_bps_hz_km2 > 0.0 && ci / est.ase_bps_hz_km2 <= rel_ci_target {
                    return Ok(summary);
                }
            }
        }
    }
}
