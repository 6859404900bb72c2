//! Multi-user zero-forcing precoding and the downlink SINR decomposition at
//! a measured UE.
//!
//! Each active BS beamforms to its scheduled UEs from the *estimated*
//! channels: F = H (H^H H)^-1 with unit-norm columns, so estimation error
//! leaks power between streams (self-interference) while the estimated
//! directions stay exactly nulled.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::error::Error;

/// `a^H b` over equal-length slices.
pub(crate) fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len(), "dot product needs equal lengths");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unit-norm zero-forcing beams of one cell, one column per scheduled UE.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub columns: Vec<Vec<Complex64>>,
    /// Downlink power per stream (total BS power split evenly).
    pub per_ue_power_w: f64,
}

impl PrecoderSet {
    pub fn n_streams(&self) -> usize {
        self.columns.len()
    }
}

/// Build the zero-forcing precoder from one cell's channel estimates
/// (row-major: one slice of length `m` per scheduled UE).
///
/// Fails with [`Error::RankDeficient`] when the Gram matrix of the estimates
/// has no Cholesky factor, i.e. the estimated directions are (numerically)
/// linearly dependent; callers treat that as a bad Monte Carlo draw.
pub fn zf_precoders(
    estimates: &[&[Complex64]],
    per_ue_power_w: f64,
) -> Result<PrecoderSet, Error> {
    let k = estimates.len();
    if k == 0 {
        return Err(Error::InvalidConfig("zero-forcing needs at least one stream".into()));
    }
    let m = estimates[0].len();
    if k > m {
        return Err(Error::InvalidConfig(format!(
            "cannot zero-force {k} streams with {m} antennas"
        )));
    }
    assert!(
        estimates.iter().all(|e| e.len() == m),
        "all channel estimates in a cell must share the antenna count"
    );
    if k == 1 {
        // Single stream: zero-forcing degenerates to the matched filter, so
        // skip the dense solve. Single-stream cells dominate small-array
        // operating points and this path keeps them off the allocator.
        let norm = estimates[0].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::RankDeficient { rows: m, cols: 1 });
        }
        let column: Vec<Complex64> = estimates[0].iter().map(|z| z / norm).collect();
        return Ok(PrecoderSet { columns: vec![column], per_ue_power_w });
    }
    let h = DMatrix::from_fn(m, k, |i, j| estimates[j][i]);
    let gram = h.ad_mul(&h);
    let diag: Vec<f64> = (0..k).map(|i| gram[(i, i)].re).collect();
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficient { rows: m, cols: k })?;
    // Pivot L_ii / sqrt(G_ii) is the fraction of direction i orthogonal to
    // the span of the previous ones; roundoff can leave it tiny-positive for
    // dependent directions, which Cholesky alone does not reject.
    let l = chol.l();
    for i in 0..k {
        let r = l[(i, i)].re / diag[i].sqrt();
        if !(r > 1e-7) {
            return Err(Error::RankDeficient { rows: m, cols: k });
        }
    }
    let inv = chol.inverse();
    let raw = &h * inv;
    let mut columns = Vec::with_capacity(k);
    for j in 0..k {
        let col = raw.column(j);
        let norm = col.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::RankDeficient { rows: m, cols: k });
        }
        columns.push(col.iter().map(|z| z / norm).collect());
    }
    Ok(PrecoderSet { columns, per_ue_power_w })
}

/// Downlink power received at the measured UE, split by origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    /// Through the estimated part of the serving channel, own beam.
    pub signal_w: f64,
    /// Through the estimation error of the serving channel, own beam.
    pub self_interference_w: f64,
    /// Every other active beam in the network, own cell's other streams
    /// included, through the true channels.
    pub inter_cell_w: f64,
    pub noise_w: f64,
}

impl SinrBreakdown {
    pub fn sinr(&self) -> f64 {
        self.signal_w / (self.self_interference_w + self.inter_cell_w + self.noise_w)
    }
}

/// One transmitting cell as seen by the measured UE.
pub struct InterferenceSource<'a> {
    pub precoders: &'a PrecoderSet,
    /// True channel from that cell's BS to the measured UE.
    pub channel: &'a [Complex64],
    /// Beam to leave out of this cell's sum (the UE's own stream when this
    /// is the serving cell).
    pub skip_stream: Option<usize>,
}

/// SINR decomposition for one scheduled measured UE.
///
/// `estimate`/`error` split the UE's serving channel (`truth = estimate +
/// error`); `beam` is its column in the serving precoder; `sources` must
/// list every active cell, the serving one with `skip_stream` set.
pub fn measured_sinr(
    serving: &PrecoderSet,
    beam: usize,
    estimate: &[Complex64],
    error: &[Complex64],
    sources: &[InterferenceSource<'_>],
    noise_w: f64,
) -> SinrBreakdown {
    let f = &serving.columns[beam];
    let signal_w = serving.per_ue_power_w * cdot(estimate, f).norm_sqr();
    let self_interference_w = serving.per_ue_power_w * cdot(error, f).norm_sqr();
    let mut inter_cell_w = 0.0;
    for src in sources {
        let mut acc = 0.0;
        for (j, col) in src.precoders.columns.iter().enumerate() {
            if src.skip_stream == Some(j) {
                continue;
            }
            acc += cdot(src.channel, col).norm_sqr();
        }
        inter_cell_w += src.precoders.per_ue_power_w * acc;
    }
    SinrBreakdown { signal_w, self_interference_w, inter_cell_w, noise_w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, EstimatedChannel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn norm2(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn single_stream_is_matched_filter() {
        let mut r = rng(1);
        let h = draw_channel(1e-9, 8, &mut r);
        let p = zf_precoders(&[&h.entries], 0.25).unwrap();
        assert_eq!(p.n_streams(), 1);
        let scale = norm2(&h.entries).sqrt();
        for (f, &hi) in p.columns[0].iter().zip(&h.entries) {
            assert!((f - hi / scale).norm() < 1e-12);
        }
    }

    #[test]
    fn columns_are_unit_norm() {
        let mut r = rng(2);
        let chans: Vec<_> = (0..4).map(|_| draw_channel(2e-9, 16, &mut r)).collect();
        let rows: Vec<&[Complex64]> = chans.iter().map(|c| c.entries.as_slice()).collect();
        let p = zf_precoders(&rows, 1.0).unwrap();
        for col in &p.columns {
            assert!((norm2(col).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_streams_are_nulled() {
        // h_j^H f_k == 0 for j != k: the defining zero-forcing property.
        let mut r = rng(3);
        for _ in 0..50 {
            let chans: Vec<_> = (0..3).map(|_| draw_channel(1e-9, 8, &mut r)).collect();
            let rows: Vec<&[Complex64]> = chans.iter().map(|c| c.entries.as_slice()).collect();
            let p = zf_precoders(&rows, 1.0).unwrap();
            for j in 0..3 {
                let own = cdot(&chans[j].entries, &p.columns[j]).norm();
                for k in 0..3 {
                    if j == k {
                        continue;
                    }
                    let leak = cdot(&chans[j].entries, &p.columns[k]).norm();
                    assert!(leak < 1e-10 * own, "leakage {leak} vs own {own}");
                }
            }
        }
    }

    #[test]
    fn orthogonal_channels_precode_to_themselves() {
        let m = 6;
        let mut e0 = vec![Complex64::ZERO; m];
        let mut e1 = vec![Complex64::ZERO; m];
        e0[0] = Complex64::new(2.0, 0.0);
        e1[3] = Complex64::new(0.0, -1.5);
        let p = zf_precoders(&[&e0, &e1], 1.0).unwrap();
        assert!((p.columns[0][0] - Complex64::ONE).norm() < 1e-12);
        assert!((p.columns[1][3] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn duplicate_directions_are_rank_deficient() {
        let mut r = rng(4);
        let h = draw_channel(1e-9, 8, &mut r);
        let res = zf_precoders(&[&h.entries, &h.entries], 1.0);
        assert!(matches!(res, Err(Error::RankDeficient { rows: 8, cols: 2 })));
    }

    #[test]
    fn more_streams_than_antennas_rejected() {
        let mut r = rng(5);
        let chans: Vec<_> = (0..3).map(|_| draw_channel(1e-9, 2, &mut r)).collect();
        let rows: Vec<&[Complex64]> = chans.iter().map(|c| c.entries.as_slice()).collect();
        assert!(matches!(zf_precoders(&rows, 1.0), Err(Error::InvalidConfig(_))));
        assert!(matches!(zf_precoders(&[], 1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn perfect_csi_single_cell_hits_beamforming_bound() {
        // One cell, K=1, perfect CSI: SINR = P ||h||^2 / noise exactly.
        let mut r = rng(6);
        let h = draw_channel(3e-10, 12, &mut r);
        let est = EstimatedChannel::perfect(&h);
        let p = zf_precoders(&[&est.estimate], 0.1).unwrap();
        let noise = 3.16e-13;
        let b = measured_sinr(
            &p,
            0,
            &est.estimate,
            &est.error,
            &[InterferenceSource { precoders: &p, channel: &h.entries, skip_stream: Some(0) }],
            noise,
        );
        let want = 0.1 * norm2(&h.entries) / noise;
        assert!((b.sinr() - want).abs() < 1e-9 * want);
        assert_eq!(b.self_interference_w, 0.0);
        assert_eq!(b.inter_cell_w, 0.0);
    }

    #[test]
    fn perfect_csi_multiuser_cell_has_no_intra_cell_leakage() {
        let mut r = rng(7);
        let chans: Vec<_> = (0..4).map(|_| draw_channel(1e-9, 16, &mut r)).collect();
        let rows: Vec<&[Complex64]> = chans.iter().map(|c| c.entries.as_slice()).collect();
        let p = zf_precoders(&rows, 0.05).unwrap();
        let est = EstimatedChannel::perfect(&chans[1]);
        let b = measured_sinr(
            &p,
            1,
            &est.estimate,
            &est.error,
            &[InterferenceSource {
                precoders: &p,
                channel: &chans[1].entries,
                skip_stream: Some(1),
            }],
            1e-13,
        );
        assert_eq!(b.self_interference_w, 0.0);
        assert!(
            b.inter_cell_w < 1e-12 * b.signal_w,
            "intra-cell leakage {} vs signal {}",
            b.inter_cell_w,
            b.signal_w
        );
    }

    #[test]
    fn estimation_error_splits_into_self_interference() {
        // With an imperfect estimate the error term receives exactly the
        // power the (estimate, error) split assigns it.
        let mut r = rng(8);
        let h = draw_channel(1e-9, 8, &mut r);
        let mut estimate = h.entries.clone();
        for e in estimate.iter_mut() {
            *e *= 0.9;
        }
        let error: Vec<Complex64> =
            h.entries.iter().zip(&estimate).map(|(&a, &b)| a - b).collect();
        let p = zf_precoders(&[&estimate], 1.0).unwrap();
        let b = measured_sinr(
            &p,
            0,
            &estimate,
            &error,
            &[InterferenceSource { precoders: &p, channel: &h.entries, skip_stream: Some(0) }],
            1e-13,
        );
        assert!((b.self_interference_w / b.signal_w - (0.1f64 / 0.9).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn independent_interferer_delivers_mean_gain_power() {
        // E|g^H f|^2 = zeta for a unit beam independent of g, so a one-beam
        // interfering cell contributes P * zeta on average.
        let mut r = rng(9);
        let m = 8;
        let zeta = 2e-9;
        let p_int = 0.2;
        let reps = 30_000;
        let mut total = 0.0;
        for _ in 0..reps {
            let own = draw_channel(1e-9, m, &mut r);
            let serving = zf_precoders(&[&own.entries], 1.0).unwrap();
            let beams = draw_channel(1.0, m, &mut r);
            let interferer = zf_precoders(&[&beams.entries], p_int).unwrap();
            let g = draw_channel(zeta, m, &mut r);
            let est = EstimatedChannel::perfect(&own);
            let b = measured_sinr(
                &serving,
                0,
                &est.estimate,
                &est.error,
                &[
                    InterferenceSource {
                        precoders: &serving,
                        channel: &own.entries,
                        skip_stream: Some(0),
                    },
                    InterferenceSource {
                        precoders: &interferer,
                        channel: &g.entries,
                        skip_stream: None,
                    },
                ],
                1e-13,
            );
            total += b.inter_cell_w;
        }
        let mean = total / reps as f64;
        let want = p_int * zeta;
        let sd = want / (reps as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * sd, "inter-cell {mean} vs {want}");
    }

    #[test]
    fn global_phase_leaves_sinr_unchanged() {
        let mut r = rng(10);
        let chans: Vec<_> = (0..3).map(|_| draw_channel(1e-9, 8, &mut r)).collect();
        let rows: Vec<&[Complex64]> = chans.iter().map(|c| c.entries.as_slice()).collect();
        let p = zf_precoders(&rows, 0.3).unwrap();
        let est = EstimatedChannel::perfect(&chans[0]);
        let sources = [InterferenceSource {
            precoders: &p,
            channel: &chans[0].entries,
            skip_stream: Some(0),
        }];
        let base = measured_sinr(&p, 0, &est.estimate, &est.error, &sources, 1e-13).sinr();

        let phase = Complex64::from_polar(1.0, 1.234);
        let rot: Vec<Vec<Complex64>> = chans
            .iter()
            .map(|c| c.entries.iter().map(|&z| z * phase).collect())
            .collect();
        let rot_rows: Vec<&[Complex64]> = rot.iter().map(|v| v.as_slice()).collect();
        let p2 = zf_precoders(&rot_rows, 0.3).unwrap();
        let err = vec![Complex64::ZERO; 8];
        let sources2 =
            [InterferenceSource { precoders: &p2, channel: &rot[0], skip_stream: Some(0) }];
        let rotated = measured_sinr(&p2, 0, &rot[0], &err, &sources2, 1e-13).sinr();
        assert!((base - rotated).abs() < 1e-9 * base, "{base} vs {rotated}");
    }

    #[test]
    fn sinr_combines_the_three_denominator_terms() {
        let b = SinrBreakdown {
            signal_w: 8.0,
            self_interference_w: 1.0,
            inter_cell_w: 2.0,
            noise_w: 1.0,
        };
        assert_eq!(b.sinr(), 2.0);
    }
}
