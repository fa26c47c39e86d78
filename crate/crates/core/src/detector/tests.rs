use super::*;
use crate::channel::{apply_channel, dual_rate_frontend, rng::stream_rng, ChannelSpec};
use crate::waveform::{place_ssb_in_frame, reference_set, ssb_waveform, CellId};
use proptest::prelude::*;
use rand::Rng;

fn small_cfg() -> FrameConfig {
    FrameConfig::new(15e3, 256, 18, 0.002).unwrap()
}

fn payload(seed: u64) -> Vec<u8> {
    let mut r = stream_rng(seed, 7);
    (0..32).map(|_| r.random_range(0..2u8)).collect()
}

/// Clean two-period capture with the SSB at `offset`, plus optional drift.
fn frame(cfg: &FrameConfig, n_id: u16, offset: usize, drift: f64) -> IqBuffer {
    let cell = CellId::from_n_id(n_id).unwrap();
    let w = ssb_waveform(cell, &payload(n_id as u64), cfg).unwrap();
    let tx = place_ssb_in_frame(&w, cfg, 0).unwrap();
    let spec = ChannelSpec {
        timing_offset: offset,
        drift_samples_per_period: drift,
        ..Default::default()
    };
    apply_channel(&tx, &spec, cfg).unwrap()
}

#[test]
fn correlate_peaks_at_embedded_reference() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let s = &refs[1].full_rate;
    let mut r = vec![Cf64::new(0.0, 0.0); 1200];
    r[333..333 + s.len()].copy_from_slice(s);
    let buf = IqBuffer::new(r, cfg.sample_rate_hz, 0).unwrap();
    let mut ops = OpCount::new(Stage::Baseline);
    let metrics: Vec<f64> = (0..=1200 - s.len())
        .map(|t| correlate(&buf, s, t, &mut ops).unwrap())
        .collect();
    assert!((metrics[333] - 1.0).abs() < 1e-12);
    for (t, &m) in metrics.iter().enumerate() {
        if t != 333 {
            assert!(m < metrics[333], "lag {t}");
        }
    }
    assert_eq!(ops.correlations_evaluated, metrics.len() as u64);
    assert_eq!(ops.complex_macs, (metrics.len() * s.len()) as u64);
}

#[test]
fn correlate_edge_cases() {
    let cfg = small_cfg();
    let s = reference_set(&cfg)[0].full_rate.clone();
    let zeros = IqBuffer::new(vec![Cf64::new(0.0, 0.0); 600], cfg.sample_rate_hz, 0).unwrap();
    let mut ops = OpCount::new(Stage::Baseline);
    assert_eq!(correlate(&zeros, &s, 10, &mut ops).unwrap(), 0.0);
    assert!(correlate(&zeros, &s, 600 - 255, &mut ops).is_err());
    assert!(correlate(&zeros, &s, 600 - 256, &mut ops).is_ok());
}

#[test]
fn correlate_is_phase_invariant() {
    let cfg = small_cfg();
    let r = frame(&cfg, 7, 100, 0.0);
    let s = &reference_set(&cfg)[1].full_rate;
    let rot = IqBuffer {
        samples: r.samples.iter().map(|z| z * Cf64::from_polar(1.0, 2.1)).collect(),
        ..r.clone()
    };
    let mut ops = OpCount::new(Stage::Baseline);
    for tau in (0..2000).step_by(37) {
        let a = correlate(&r, s, tau, &mut ops).unwrap();
        let b = correlate(&rot, s, tau, &mut ops).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn default_config_mac_counts() {
    let cfg = FrameConfig::default();
    let refs = reference_set(&cfg);
    let rx = frame(&cfg, 0, 1000, 0.0);
    let (_, base) = full_search(&rx, &refs, &cfg).unwrap();
    assert_eq!(base.complex_macs, 235_929_600);
    assert_eq!(base.correlations_evaluated, 3 * 153_600);
    let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
    let (_, coarse) = half_search(&cap.half, &refs, &cfg).unwrap();
    assert_eq!(coarse.complex_macs, 58_982_400);
    assert_eq!(4 * coarse.complex_macs, base.complex_macs);
    let (_, fine) = refine(&rx, &refs[0], 500, &SearchParams::default_for(&cfg), &cfg).unwrap();
    assert_eq!(SearchParams::default_for(&cfg).delta_n, 72);
    assert_eq!(fine.complex_macs, 145 * 512);
    assert!(fine.complex_macs <= 74_240);
}

#[test]
fn full_search_recovers_offset_and_sequence() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let max = cfg.n_ssb - cfg.ssb_len();
    for n_id2 in 0..3u16 {
        for &t in &[0, 1, 2, 77, 1001, max / 2, max - 1, max] {
            let rx = frame(&cfg, 30 + n_id2, t, 0.0);
            let (det, _) = full_search(&rx, &refs, &cfg).unwrap();
            assert_eq!((det.tau_ssb, det.n_id2), (t, n_id2 as u8));
        }
    }
}

#[test]
fn full_search_tie_picks_smaller_offset() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let cell = CellId::from_n_id(4).unwrap();
    let w = ssb_waveform(cell, &payload(1), &cfg).unwrap();
    let mut s = vec![Cf64::new(0.0, 0.0); 2 * cfg.n_ssb];
    for at in [1500, 4000] {
        s[at..at + w.len()].copy_from_slice(&w.samples);
    }
    let rx = IqBuffer::new(s, cfg.sample_rate_hz, 0).unwrap();
    let (det, _) = full_search(&rx, &refs, &cfg).unwrap();
    assert_eq!(det.tau_ssb, 1500);
}

#[test]
fn full_search_rejects_short_or_wrong_rate_buffers() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let short = IqBuffer::new(vec![Cf64::new(0.0, 0.0); cfg.n_ssb], cfg.sample_rate_hz, 0).unwrap();
    assert!(matches!(
        full_search(&short, &refs, &cfg),
        Err(Error::InsufficientSamples { .. })
    ));
    let half = IqBuffer::new(vec![Cf64::new(0.0, 0.0); 2 * cfg.n_ssb], cfg.sample_rate_hz / 2.0, 0).unwrap();
    assert!(full_search(&half, &refs, &cfg).is_err());
    assert!(half_search(&short, &refs, &cfg).is_err());
}

#[test]
fn search_kernel_agrees_with_brute_force_correlate() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let mut rx = frame(&cfg, 2, 900, 0.0);
    let mut r = stream_rng(3, 0);
    for z in rx.samples.iter_mut() {
        *z += Cf64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * 0.3;
    }
    let (det, _) = full_search(&rx, &refs, &cfg).unwrap();
    let mut ops = OpCount::new(Stage::Baseline);
    let mut best = (0.0, 0, 0);
    for tau in 0..cfg.n_ssb {
        for (i, p) in refs.iter().enumerate() {
            let m = correlate(&rx, &p.full_rate, tau + cfg.cp_len, &mut ops).unwrap();
            if m > best.0 {
                best = (m, tau, i);
            }
        }
    }
    assert_eq!((det.tau_ssb, det.n_id2 as usize), (best.1, best.2));
    assert!((det.peak_metric - best.0).abs() < 1e-4 * best.0);
}

#[test]
fn half_search_quantizes_offsets() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    for &t in &[0usize, 2, 40, 41, 333, 1000, 1001, 4000, 4001] {
        let rx = frame(&cfg, 5, t, 0.0);
        let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
        let (c, ops) = half_search(&cap.half, &refs, &cfg).unwrap();
        assert_eq!(c.n_id2, 2);
        if t % 2 == 0 {
            assert_eq!(c.tau_h, t / 2, "t={t}");
        } else {
            assert!(c.tau_h == (t - 1) / 2 || c.tau_h == t.div_ceil(2), "t={t} got {}", c.tau_h);
        }
        assert_eq!(ops.complex_macs, 3 * (cfg.n_ssb as u64 / 2) * (cfg.n_fft as u64 / 2));
    }
}

#[test]
fn refine_recovers_offsets_inside_window() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let params = SearchParams { delta_n: 20, ..SearchParams::default_for(&cfg) };
    let t = 2000;
    let rx = frame(&cfg, 3, t, 0.0);
    for d in [-20i64, -7, 0, 1, 19, 20] {
        let tau_h = ((t as i64 + d) / 2) as usize;
        if (t as i64 - 2 * tau_h as i64).abs() > 20 {
            continue;
        }
        let (det, ops) = refine(&rx, &refs[0], tau_h, &params, &cfg).unwrap();
        assert_eq!(det.tau_ssb, t, "coarse {tau_h}");
        let (lo, hi) = det.window.unwrap();
        assert!(lo <= det.tau_ssb as i64 && det.tau_ssb as i64 <= hi);
        assert!(ops.complex_macs <= 41 * cfg.n_fft as u64);
    }
}

#[test]
fn refine_window_is_clipped() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let rx = frame(&cfg, 0, 3, 0.0);
    let (det, ops) = refine(&rx, &refs[0], 0, &SearchParams { delta_n: 10, ..SearchParams::default_for(&cfg) }, &cfg).unwrap();
    assert_eq!(det.window, Some((0, 10)));
    assert_eq!(det.tau_ssb, 3);
    assert_eq!(ops.correlations_evaluated, 11);
    let bad = SearchParams { min_peak_ratio: 1.5, ..SearchParams::default_for(&cfg) };
    assert!(bad.validate(&cfg).is_err());
    assert!(refine(&rx, &refs[0], 0, &SearchParams { delta_n: 0, ..SearchParams::default_for(&cfg) }, &cfg).is_err());
    assert!(refine(&rx, &refs[0], 0, &SearchParams { delta_n: cfg.n_ssb, ..SearchParams::default_for(&cfg) }, &cfg).is_err());
}

#[test]
fn two_step_matches_full_search_on_clean_channel() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let params = SearchParams::default_for(&cfg);
    let mut r = stream_rng(21, 0);
    for _ in 0..12 {
        let n_id = r.random_range(0..1008u16);
        let t = r.random_range(0..=cfg.n_ssb - cfg.ssb_len());
        let rx = frame(&cfg, n_id, t, 0.0);
        let (base, base_ops) = full_search(&rx, &refs, &cfg).unwrap();
        let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
        let two = two_step_estimate(&cap, &refs, &params, &cfg).unwrap();
        assert_eq!((two.detection.tau_ssb, two.detection.n_id2), (base.tau_ssb, base.n_id2));
        assert_eq!(two.local_tau, t);
        assert!(!two.detection.window_edge);
        assert!(two.detection.confirmed);
        assert!((two.total_macs() as f64) < 0.26 * base_ops.complex_macs as f64);
        assert_eq!(two.coarse_ops.stage, Stage::Coarse);
        assert_eq!(two.refine_ops.stage, Stage::Refine);
    }
}

#[test]
fn two_step_with_discard_gap_translates_window() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let rx = frame(&cfg, 100, 3000, 0.0);
    let cap = dual_rate_frontend(&rx, &cfg, 250).unwrap();
    let two = two_step_estimate(&cap, &refs, &SearchParams::default_for(&cfg), &cfg).unwrap();
    assert_eq!(two.detection.tau_ssb, 3000);
    assert_eq!(two.local_tau, 3000 - 250);
}

#[test]
fn drift_beyond_margin_misses_and_flags_edge() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    let params = SearchParams::default_for(&cfg);
    let t = 1234;
    for drift in [(params.delta_n + 8) as f64, -((params.delta_n + 8) as f64)] {
        let rx = frame(&cfg, 11, t, drift);
        let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
        let two = two_step_estimate(&cap, &refs, &params, &cfg).unwrap();
        assert_ne!(two.detection.tau_ssb as i64, t as i64 + drift as i64);
        assert!(!two.detection.confirmed, "drift {drift}");
        assert!(two.detection.peak_ratio.unwrap() < 0.1);
        // The full-period search still finds the first-period SSB.
        let (base, _) = full_search(&rx, &refs, &cfg).unwrap();
        assert_eq!(base.tau_ssb, t);
    }
    // Drift inside the margin is tracked exactly.
    let rx = frame(&cfg, 11, t, 30.0);
    let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
    let two = two_step_estimate(&cap, &refs, &params, &cfg).unwrap();
    assert_eq!(two.detection.tau_ssb, t + 30);
    assert!(two.detection.confirmed);
    assert!((two.detection.peak_ratio.unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn coarse_ratio_is_one_quarter_for_any_config() {
    for (n_fft, cp, period) in [(256usize, 18usize, 0.002), (512, 36, 0.005), (1024, 72, 0.001)] {
        let cfg = FrameConfig::new(15e3, n_fft, cp, period).unwrap();
        let refs = reference_set(&cfg);
        let rx = frame(&cfg, 1, 10, 0.0);
        let (_, base) = full_search(&rx, &refs, &cfg).unwrap();
        let cap = dual_rate_frontend(&rx, &cfg, 0).unwrap();
        let (_, coarse) = half_search(&cap.half, &refs, &cfg).unwrap();
        assert_eq!(4 * coarse.complex_macs, base.complex_macs);
        assert_eq!(base.complex_macs, 3 * cfg.n_ssb as u64 * n_fft as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn searches_invariant_to_scale_and_phase(
        scale in 0.01f64..100.0,
        phase in 0.0f64..std::f64::consts::TAU,
        offset in 0usize..5000,
        n_id in 0u16..1008,
    ) {
        let cfg = small_cfg();
        let refs = reference_set(&cfg);
        let mut rx = frame(&cfg, n_id, offset, 0.0);
        let mut r = stream_rng(n_id as u64, 0);
        for z in rx.samples.iter_mut() {
            *z += Cf64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * 0.2;
        }
        let g = Cf64::from_polar(scale, phase);
        let moved = IqBuffer { samples: rx.samples.iter().map(|z| z * g).collect(), ..rx.clone() };
        let (a, _) = full_search(&rx, &refs, &cfg).unwrap();
        let (b, _) = full_search(&moved, &refs, &cfg).unwrap();
        prop_assert_eq!((a.tau_ssb, a.n_id2), (b.tau_ssb, b.n_id2));
        let params = SearchParams::default_for(&cfg);
        let ca = two_step_estimate(&dual_rate_frontend(&rx, &cfg, 0).unwrap(), &refs, &params, &cfg).unwrap();
        let cb = two_step_estimate(&dual_rate_frontend(&moved, &cfg, 0).unwrap(), &refs, &params, &cfg).unwrap();
        prop_assert_eq!((ca.detection.tau_ssb, ca.detection.n_id2), (cb.detection.tau_ssb, cb.detection.n_id2));
        prop_assert_eq!(ca.coarse.tau_h, cb.coarse.tau_h);
    }
}

#[test]
fn window_past_capture_end_is_unconfirmed() {
    let cfg = small_cfg();
    let refs = reference_set(&cfg);
    // The second-period SSB falls in the discarded gap.
    let rx = frame(&cfg, 8, 10, 0.0);
    let cap = dual_rate_frontend(&rx, &cfg, 500).unwrap();
    let two = two_step_estimate(&cap, &refs, &SearchParams::default_for(&cfg), &cfg).unwrap();
    assert_eq!(two.coarse.tau_h, 5);
    assert!(!two.detection.confirmed);
    assert_eq!(two.refine_ops.complex_macs, 0);
    assert!(two.local_tau < cap.full.len());
}
