//! Randomized invariants across the geometry, load, propagation, estimation
//! and metrics layers. Each property encodes a contract the simulator relies
//! on; shrunk counterexamples from any of these point at a real modeling bug.

use asesim_core::channel::{draw_channel, mmse_estimate, observe_pilot, uplink_tx_power, MmseDenominator, PilotContributor};
use asesim_core::geometry::{toroidal_distance_2d, Point, Window};
use asesim_core::metrics::{ase, coverage, AseOptions, EmpiricalCdf, SinrSample, SinrSampleSet, StreamWeighting};
use asesim_core::network::{scheduling_cap, select_serving, NbModel};
use asesim_core::precoding::zf_precoders;
use asesim_core::propagation::{dist_3d, LinkState, LosProbabilityModel, PathLossModel, PathLossSegment};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn torus_point(u: f64, v: f64, side: f64) -> Point {
    Point { x_km: u * side, y_km: v * side }
}

fn nine_image_distance(a: Point, b: Point, side: f64) -> f64 {
    let mut best = f64::INFINITY;
    for ix in -1..=1 {
        for iy in -1..=1 {
            let dx = a.x_km - (b.x_km + ix as f64 * side);
            let dy = a.y_km - (b.y_km + iy as f64 * side);
            best = best.min((dx * dx + dy * dy).sqrt());
        }
    }
    best
}

proptest! {
    #[test]
    fn toroidal_distance_is_a_metric(
        side in 0.5f64..10.0,
        a in (0.0f64..1.0, 0.0f64..1.0),
        b in (0.0f64..1.0, 0.0f64..1.0),
        c in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let w = Window::new(side);
        let (a, b, c) = (
            torus_point(a.0, a.1, side),
            torus_point(b.0, b.1, side),
            torus_point(c.0, c.1, side),
        );
        let ab = toroidal_distance_2d(a, b, &w);
        let ba = toroidal_distance_2d(b, a, &w);
        prop_assert_eq!(ab, ba, "symmetry");
        prop_assert_eq!(toroidal_distance_2d(a, a, &w), 0.0);
        let (ac, cb) = (toroidal_distance_2d(a, c, &w), toroidal_distance_2d(c, b, &w));
        prop_assert!(ab <= ac + cb + 1e-9, "triangle: {} > {} + {}", ab, ac, cb);
        prop_assert!(ab <= side * 2f64.sqrt() / 2.0 + 1e-12, "diameter bound");
        let want = nine_image_distance(a, b, side);
        prop_assert!((ab - want).abs() < 1e-9, "nine-image oracle: {} vs {}", ab, want);
    }

    #[test]
    fn los_probability_is_a_decreasing_probability(
        d_far in 0.01f64..1.0,
        d_near in 0.005f64..0.5,
        w0 in 1e-4f64..4.0,
    ) {
        let los = LosProbabilityModel::TwoPieceExponential { d_far_km: d_far, d_near_km: d_near };
        let mut prev = los.probability(w0);
        let mut w = w0;
        for _ in 0..60 {
            let p = los.probability(w);
            prop_assert!((0.0..=1.0).contains(&p), "p = {} at w = {}", p, w);
            prop_assert!(p <= prev + 1e-12, "increased at w = {}", w);
            prev = p;
            w *= 1.09;
        }
    }

    #[test]
    fn single_segment_gain_decreases_and_bound_holds(
        a_los_db in -120.0f64..-60.0,
        a_nlos_db in -160.0f64..-100.0,
        alpha_los in 1.5f64..3.0,
        alpha_nlos in 2.5f64..4.5,
        w0 in 0.01f64..1.0,
    ) {
        let model = PathLossModel {
            segments: vec![PathLossSegment {
                max_dist_km: f64::INFINITY,
                a_los: 10f64.powf(a_los_db / 10.0),
                alpha_los,
                a_nlos: 10f64.powf(a_nlos_db / 10.0),
                alpha_nlos,
            }],
            height_diff_km: 0.0085,
            los: LosProbabilityModel::Constant { p: 0.5 },
        };
        model.validate().unwrap();
        let bound = model.gain_bound_beyond(w0);
        for is_los in [true, false] {
            let mut prev = f64::INFINITY;
            let mut w = w0.max(model.height_diff_km);
            for _ in 0..40 {
                let g = model.path_loss(w, is_los).unwrap();
                prop_assert!(g <= prev, "branch gain increased at w = {}", w);
                prop_assert!(g <= bound * (1.0 + 1e-12), "bound {} < gain {}", bound, g);
                prev = g;
                w *= 1.11;
            }
        }
    }

    #[test]
    fn activation_identity_and_pmf_normalization(
        lambda in 0.1f64..2000.0,
        rho in 0.1f64..5000.0,
        q in 0.5f64..20.0,
        k_u in 1usize..=40,
    ) {
        let nb = NbModel::new(lambda, rho, q).unwrap();
        // Active density is exactly the never-empty fraction of the BS density.
        let identity = lambda * (1.0 - nb.pmf(0));
        let active = nb.active_bs_density();
        prop_assert!(
            (active - identity).abs() <= 1e-12 * identity.max(1e-300),
            "lambda(1 - f(0)) = {} vs active {}", identity, active
        );
        let mut cum = 0.0f64;
        for k in 0..2000u64 {
            let p = nb.pmf(k);
            prop_assert!(p >= 0.0, "negative mass at k = {}", k);
            cum += p;
            prop_assert!(cum <= 1.0 + 1e-9, "partial sum {} above 1 at k = {}", cum, k);
        }
        let truncated: f64 = (1..=k_u as u64).map(|k| nb.truncated_pmf(k, k_u).unwrap()).sum();
        prop_assert!((truncated - 1.0).abs() < 1e-12, "truncated PMF sums to {}", truncated);
    }

    #[test]
    fn scheduling_cap_respects_bounds(m in 1usize..5000, k_t in 1usize..200) {
        let cap = scheduling_cap(m, k_t);
        prop_assert!((1..=k_t).contains(&cap));
        prop_assert!(cap <= (m / 4).max(1));
    }

    #[test]
    fn power_control_pins_received_power(
        gain_db in -140.0f64..-40.0,
        eps in 0.0f64..1.5,
        p_dbm in -10.0f64..30.0,
    ) {
        let gain = 10f64.powf(gain_db / 10.0);
        let p_baseline = 10f64.powf((p_dbm - 30.0) / 10.0);
        let tx = uplink_tx_power(gain, eps, p_baseline).unwrap();
        // Received power at the serving BS compensates a fraction eps of the
        // path loss:P * gain = P_u * gain^(1 - eps).
        let received = tx * gain;
        let want = p_baseline * gain.powf(1.0 - eps);
        prop_assert!((received / want - 1.0).abs() < 1e-12, "{} vs {}", received, want);
    }

    #[test]
    fn estimate_plus_error_reconstructs_truth(
        seed in any::<u64>(),
        m in 1usize..=8,
        gain_db in -120.0f64..-60.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = 10f64.powf(gain_db / 10.0);
        let truth = draw_channel(gain, m, &mut rng);
        let noise_w = 1e-13;
        let interferer = draw_channel(gain * 0.3, m, &mut rng);
        let contribs = [
            PilotContributor::Explicit { power_w: 0.05, channel: &interferer },
            PilotContributor::Folded { power_w: 0.01, gain: gain * 0.2 },
        ];
        let obs = observe_pilot(0.01, &truth, &contribs, noise_w, &mut rng);
        let est = mmse_estimate(&obs, 0.01, &truth, noise_w, MmseDenominator::Standard).unwrap();
        for i in 0..m {
            let sum = est.estimate[i] + est.error[i];
            prop_assert!(
                (sum - truth.entries[i]).norm() < 1e-12 * truth.entries[i].norm().max(1.0),
                "entry {}: {} vs {}", i, sum, truth.entries[i]
            );
        }
    }

    #[test]
    fn serving_selection_returns_the_maximum_gain(
        gains in prop::collection::vec(1e-14f64..1e-6, 1..40),
    ) {
        let links: Vec<(u32, LinkState)> = gains
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                (i as u32, LinkState { dist_2d_km: 0.1, dist_3d_km: dist_3d(0.1, 0.0085), is_los: false, gain: g })
            })
            .collect();
        let pos = select_serving(&links).unwrap();
        let max = gains.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(links[pos].1.gain, max);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ase_is_nonincreasing_in_the_threshold(
        seed in any::<u64>(),
        n in 4usize..200,
        g1 in 0.0f64..4.0,
        dg in 0.0f64..4.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let samples: Vec<SinrSample> = (0..n)
            .map(|i| SinrSample {
                sinr: 10f64.powf(rng.random_range(-2.0..2.0)),
                scheduled: rng.random::<f64>() < 0.9,
                drop_index: (i / 2) as u32,
            })
            .collect();
        prop_assume!(samples.iter().any(|s| s.scheduled));
        let set = SinrSampleSet {
            samples,
            empirical_active_density_km2: 50.0,
            config_hash: "cafe".into(),
        };
        let opts = |g0: f64| AseOptions {
            gamma0_linear: g0,
            active_density_km2: 50.0,
            weighting: StreamWeighting::ActiveCells,
            mean_streams_per_cell: 1.0,
        };
        let lo = ase(&set, &opts(g1)).unwrap().ase_bps_hz_km2;
        let hi = ase(&set, &opts(g1 + dg)).unwrap().ase_bps_hz_km2;
        prop_assert!(hi <= lo + 1e-12, "raising the threshold raised ASE: {} -> {}", lo, hi);
        // Stream weighting scales the same mean by streams per cell.
        let mut stream_opts = opts(g1);
        stream_opts.weighting = StreamWeighting::ScheduledStreams;
        stream_opts.mean_streams_per_cell = 2.5;
        let streams = ase(&set, &stream_opts).unwrap().ase_bps_hz_km2;
        prop_assert!((streams / lo.max(1e-300) - 2.5).abs() < 1e-9 || lo == 0.0);
    }

    #[test]
    fn cdf_fractions_are_complementary_and_quantiles_monotone(
        values in prop::collection::vec(-1e3f64..1e3, 1..300),
        x in -1e3f64..1e3,
        q1 in 0.0f64..1.0,
        dq in 0.0f64..0.5,
    ) {
        let cdf = EmpiricalCdf::from_values(values.iter().cloned()).unwrap();
        let total = cdf.fraction_at_most(x) + cdf.fraction_above(x);
        prop_assert!((total - 1.0).abs() < 1e-15);
        let q2 = (q1 + dq).min(1.0);
        prop_assert!(cdf.quantile(q1) <= cdf.quantile(q2));
    }

    #[test]
    fn zero_forcing_nulls_every_estimated_cross_channel(
        seed in any::<u64>(),
        m in 4usize..=32,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = (m / 4).clamp(1, 8);
        let rows: Vec<Vec<Complex64>> = (0..k).map(|_| draw_channel(1e-9, m, &mut rng).entries).collect();
        let refs: Vec<&[Complex64]> = rows.iter().map(|r| r.as_slice()).collect();
        let set = zf_precoders(&refs, 0.1).unwrap();
        for (j, col) in set.columns.iter().enumerate() {
            let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12, "column {} norm {}", j, norm);
            for (i, row) in rows.iter().enumerate() {
                let dot: Complex64 = row.iter().zip(col).map(|(h, f)| h.conj() * f).sum();
                let level = dot.norm() / 1e-9f64.sqrt();
                if i == j {
                    prop_assert!(level > 1e-6, "own-stream gain vanished");
                } else {
                    prop_assert!(level < 1e-10, "leakage {} from stream {} into {}", level, j, i);
                }
            }
        }
    }

    #[test]
    fn coverage_equals_the_cdf_tail(
        seed in any::<u64>(),
        n in 2usize..200,
        gamma0 in 0.01f64..100.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let samples: Vec<SinrSample> = (0..n)
            .map(|i| SinrSample {
                sinr: 10f64.powf(rng.random_range(-2.0..2.0)),
                scheduled: true,
                drop_index: i as u32,
            })
            .collect();
        let set = SinrSampleSet {
            samples: samples.clone(),
            empirical_active_density_km2: 1.0,
            config_hash: "feed".into(),
        };
        let cov = coverage(&set, gamma0).unwrap();
        let direct = samples.iter().filter(|s| s.sinr > gamma0).count() as f64 / n as f64;
        prop_assert!((cov - direct).abs() < 1e-12, "{} vs {}", cov, direct);
        let cdf = EmpiricalCdf::from_scheduled(&set).unwrap();
        prop_assert_eq!(cov, cdf.fraction_above(gamma0));
    }
}
