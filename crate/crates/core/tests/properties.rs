use proptest::prelude::*;
use reactkit_core::detector::{build_kernel, convolve_same_direct, convolve_same_fft, BaselineStats, Detector, DetectorConfig};
use reactkit_core::kinematics::VelocitySeries;
use reactkit_core::spectral::{cwt_gaus2_values, dft, log_scales};

const FRAME_MS: f64 = 1000.0 / 30.0;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_peaks_at_one(baseline in 150.0f64..1000.0) {
        let k = build_kernel(baseline, FRAME_MS).unwrap();
        let n = k.len();
        prop_assert_eq!(n, (baseline / FRAME_MS).round() as usize + 1);
        for i in 0..n {
            prop_assert_eq!(k.samples[i], k.samples[n - 1 - i]);
            prop_assert!(k.samples[i] > 0.0 && k.samples[i] <= 1.0);
        }
    }

    #[test]
    fn fft_convolution_matches_direct(
        x in prop::collection::vec(-100.0f64..100.0, 20..600),
        baseline in 150.0f64..600.0,
    ) {
        let k = build_kernel(baseline, FRAME_MS).unwrap();
        let a = convolve_same_direct(&x, &k.samples);
        let b = convolve_same_fft(&x, &k.samples);
        let scale = a.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn constant_offset_leaves_reaction_time(
        x in prop::collection::vec(0.0f64..5.0, 160),
        offset in 0.1f64..50.0,
    ) {
        let det = Detector::new(DetectorConfig::default(), 438.0, BaselineStats::default(), FRAME_MS).unwrap();
        let warning = 40.0 * FRAME_MS;
        let base = det.detect_velocity(&VelocitySeries::from_values("a", 30.0, 0.0, &x), warning);
        let shifted: Vec<f64> = x.iter().map(|v| v + offset).collect();
        let moved = det.detect_velocity(&VelocitySeries::from_values("a", 30.0, 0.0, &shifted), warning);
        if let (Ok(a), Ok(b)) = (base, moved) {
            // Offsets change rounding, so allow near-ties to flip.
            let va = a.convolution.values.clone();
            let idx = |t: f64| a.convolution.times_ms.iter().position(|s| (s - t).abs() < 1e-6).unwrap();
            let (ia, ib) = (idx(a.estimate.t_max_ms + warning), idx(b.estimate.t_max_ms + warning));
            prop_assert!(ia == ib || (va[ia] - va[ib]).abs() <= 1e-9 * va[ia].abs());
        }
    }

    #[test]
    fn parseval_holds(x in prop::collection::vec(-1e3f64..1e3, 1..512)) {
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spec: f64 = dft(&x).iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((energy - spec).abs() <= 1e-9 * energy.max(1.0));
    }

    #[test]
    fn cwt_is_linear(
        x in prop::collection::vec(-10.0f64..10.0, 64..256),
        c in -5.0f64..5.0,
    ) {
        let scales = log_scales(1.0, 8.0, 5);
        let w = cwt_gaus2_values(&x, &scales).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let ws = cwt_gaus2_values(&scaled, &scales).unwrap();
        for (row, rows) in w.iter().zip(&ws) {
            for (p, q) in row.iter().zip(rows) {
                prop_assert!((p * c - q).abs() <= 1e-9 * (1.0 + p.abs() * c.abs()));
            }
        }
    }
}
