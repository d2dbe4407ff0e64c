mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use spkid_core::frontend::*;
use spkid_core::synth::{synth_utterance, SynthSpeaker};

#[test]
fn lpcc_matches_log_spectrum_cepstrum() {
    let mut rng = rng(11);
    for p in [1usize, 2, 10, 16, 20] {
        for _ in 0..10 {
            let poles = random_poles(&mut rng, p, 0.95);
            let a = poly_from_poles(&poles);
            let q = 20.max(p);
            let c = lpc_to_lpcc(&a, q);
            let oracle = cepstrum_from_power(all_pole_power(&a), q, 4096);
            assert!(max_abs_diff(&c, &oracle) < 1e-6, "p={p}");
        }
    }
}

#[test]
fn autocorrelation_matches_double_loop() {
    let mut rng = rng(5);
    for _ in 0..20 {
        let frame: Vec<f64> = (0..240).map(|_| rng.random_range(-1.0..1.0)).collect();
        let order = rng.random_range(1..30);
        let r = autocorrelation(&frame, order).unwrap();
        for k in 0..=order {
            let mut naive = 0.0;
            for n in 0..frame.len() {
                if n + k < frame.len() {
                    naive += frame[n] * frame[n + k];
                }
            }
            assert!((r[k] - naive).abs() < 1e-12);
        }
    }
}

#[test]
fn levinson_recovers_ar4_generator() {
    let poles = [
        num_complex::Complex64::from_polar(0.9, 0.6),
        num_complex::Complex64::from_polar(0.9, -0.6),
        num_complex::Complex64::from_polar(0.7, 2.1),
        num_complex::Complex64::from_polar(0.7, -2.1),
    ];
    let truth = poly_from_poles(&poles);
    let x = ar_process(&truth, 200_000, 3);
    let r = autocorrelation(&x, 4).unwrap();
    let (a, err) = levinson(&r).unwrap();
    assert!(err > 0.0);
    for (est, t) in a.iter().zip(&truth) {
        assert!((est - t).abs() < 0.05, "{a:?} vs {truth:?}");
    }
}

#[test]
fn levinson_output_is_minimum_phase() {
    let mut rng = rng(17);
    for i in 0..100 {
        let len = 240;
        // white, smooth and nearly sinusoidal frames
        let frame: Vec<f64> = match i % 3 {
            0 => (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => ar_process(&[-1.6, 0.9], len, i),
            _ => (0..len)
                .map(|n| (0.3 * n as f64).sin() + 1e-3 * rng.random_range(-1.0..1.0))
                .collect(),
        };
        let windowed: Vec<f64> = frame.iter().zip(hamming(len)).map(|(x, w)| x * w).collect();
        let p = [10, 16, 20][i as usize % 3];
        let (a, err) = levinson(&autocorrelation(&windowed, p).unwrap()).unwrap();
        assert!(err > 0.0);
        assert!(companion_spectral_radius(&a) < 1.0);
    }
}

#[test]
fn one_second_frame_arithmetic() {
    let mut rng = rng(2);
    let noise: Vec<f64> = (0..8000).map(|_| rng.random_range(-0.5..0.5)).collect();
    let clip = AudioClip::new(noise, 8000).unwrap();
    let analysis = extract(&clip, &FrontendConfig::vq()).unwrap();
    assert_eq!(analysis.stats.frames, 98);
    assert_eq!(analysis.cepstra.len() + analysis.stats.gated + analysis.stats.degenerate, 98);
    assert_eq!(analysis.lpc.len(), analysis.cepstra.len());
}

#[test]
fn extraction_is_deterministic() {
    let spk = SynthSpeaker::random("x", 8);
    let clip = synth_utterance(&spk, 3.0, 1);
    let a = extract(&clip, &FrontendConfig::cm()).unwrap();
    let b = extract(&clip, &FrontendConfig::cm()).unwrap();
    let bits = |s: &spkid_core::FeatureSequence| s.as_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.cepstra), bits(&b.cepstra));
}

#[test]
fn mean_cepstrum_tracks_generating_filter() {
    // no pre-emphasis so the analysed spectrum is the generator's own
    let cfg = FrontendConfig {
        preemphasis: 0.0,
        ..FrontendConfig::with_order(10)
    };
    for seed in 0..4 {
        let spk = SynthSpeaker::random(format!("s{seed}"), seed);
        let clip = synth_utterance(&spk, 60.0, 99);
        let analysis = extract(&clip, &cfg).unwrap();
        let mean = analysis.cepstra.mean();
        let truth = spk.cepstrum(10);
        assert!(l2(&mean, &truth) < 0.1, "seed {seed}: {}", l2(&mean, &truth));
    }
}

proptest! {
    #[test]
    fn frame_count_formula(len in 0usize..5000, frame_len in 1usize..400, shift_frac in 0.01f64..1.0) {
        let shift = ((frame_len as f64 * shift_frac) as usize).max(1);
        let cfg = FrontendConfig { frame_len, frame_shift: shift, ..FrontendConfig::with_order(1) };
        let x = vec![0.25; len];
        let frames = frame_and_window(&x, &cfg);
        let expected = if len >= frame_len { (len - frame_len) / shift + 1 } else { 0 };
        prop_assert_eq!(frames.len(), expected);
        prop_assert!(frames.iter().all(|f| f.len() == frame_len));
    }

    #[test]
    fn preemphasis_preserves_length(x in proptest::collection::vec(-1.0f64..1.0, 0..300), c in 0.0f64..0.999) {
        let y = preemphasize(&x, c).unwrap();
        prop_assert_eq!(y.len(), x.len());
        for n in 1..x.len() {
            prop_assert!((y[n] - (x[n] - c * x[n - 1])).abs() < 1e-15);
        }
    }
}
