#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use spkid_core::frontend::{extract, lpc_to_lpcc, FrontendConfig};
use spkid_core::synth::{apply_channel, population, synth_utterance};
use spkid_core::transforms::*;
use spkid_core::FeatureSequence;

fn seq_strategy(dim: usize) -> impl Strategy<Value = FeatureSequence> {
    proptest::collection::vec(-3.0f64..3.0, dim..dim * 40)
        .prop_map(move |mut v| {
            v.truncate(v.len() / dim * dim);
            FeatureSequence::from_flat(dim, 1, v).unwrap()
        })
}

#[test]
fn acw_matches_pole_sum_spectrum() {
    let mut rng = rng(23);
    for p in [2usize, 3, 10, 16, 20] {
        for _ in 0..8 {
            let poles = random_poles(&mut rng, p, 0.95);
            let a = poly_from_poles(&poles);
            let (b, imag) = acw_numerator(&a).unwrap();
            assert!(imag < 1e-10, "p={p} imag={imag}");
            // zeros of B inside the unit circle
            assert_eq!(b.len(), p - 1);
            if b.len() > 1 {
                assert!(companion_spectral_radius(&b) < 1.0);
            } else {
                assert!(b[0].abs() < 1.0);
            }
            // the numerator is the scaled derivative of A
            for (k, bk) in b.iter().enumerate() {
                let expected = (p - k - 1) as f64 * a[k] / p as f64;
                assert!((bk - expected).abs() < 1e-9 * (1.0 + expected.abs()), "p={p} k={k} {bk} {expected}");
            }
            let q = 20;
            let c = acw_frame(&a, q).unwrap();
            let oracle = cepstrum_from_power(pole_sum_power(&poles), q, 4096);
            assert!(max_abs_diff(&c, &oracle) < 1e-6, "p={p}");
        }
    }
}

#[test]
fn acw_ignores_frame_gain() {
    // the LPC polynomial fully determines ACW, so scaling a frame changes nothing
    let spk = population(1, 7).remove(0);
    let clip = synth_utterance(&spk, 2.0, 4);
    let loud = spkid_core::AudioClip::new(clip.samples().iter().map(|x| 3.0 * x).collect(), 8000).unwrap();
    let chain = TransformChain::parse("ACW").unwrap();
    let cfg = FrontendConfig::vq();
    let x = chain.apply(&extract(&clip, &cfg).unwrap()).unwrap();
    let y = chain.apply(&extract(&loud, &cfg).unwrap()).unwrap();
    assert_eq!(x.len(), y.len());
    assert!(max_abs_diff(x.as_flat(), y.as_flat()) < 1e-8);
}

#[test]
fn acw_preserves_frame_count_on_speech() {
    let spk = population(1, 3).remove(0);
    let analysis = extract(&synth_utterance(&spk, 5.0, 1), &FrontendConfig::cm()).unwrap();
    let (seq, dropped) = acw(&analysis.lpc, 20).unwrap();
    assert_eq!(dropped, 0);
    assert_eq!(seq.len(), analysis.cepstra.len());
    assert_eq!(seq.dim(), 20);
}

#[test]
fn sigma_matches_two_pass_estimate() {
    let mut r = rng(31);
    use rand::Rng;
    let corpus: Vec<FeatureSequence> = (0..5)
        .map(|k| {
            let rows: Vec<Vec<f64>> = (0..50 + 30 * k)
                .map(|_| (0..12).map(|j| r.random_range(-1.0..1.0) * (j + 1) as f64 + 5.0).collect())
                .collect();
            FeatureSequence::from_rows(12, &rows).unwrap()
        })
        .collect();
    let w = sigma_fit(&corpus).unwrap();
    let all: Vec<&[f64]> = corpus.iter().flat_map(|s| s.rows()).collect();
    let n = all.len() as f64;
    for j in 0..12 {
        let mean = all.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = all.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let expected = 1.0 / var.sqrt().max(SIGMA_FLOOR);
        assert!((w.weights()[j] - expected).abs() < 1e-10 * expected);
    }
}

#[test]
fn chain_composes_like_hand_written_steps() {
    let spk = population(1, 5).remove(0);
    let analysis = extract(&synth_utterance(&spk, 3.0, 2), &FrontendConfig::vq()).unwrap();
    let got = TransformChain::parse("CMS+PF").unwrap().apply(&analysis).unwrap();
    let mean = analysis.cepstra.mean();
    for (t, row) in analysis.cepstra.rows().enumerate() {
        for n in 1..=16 {
            let pf = 1.0 - 0.9f64.powi(n as i32);
            let expected = (row[n - 1] - mean[n - 1]) * pf;
            assert!((got.row(t)[n - 1] - expected).abs() < 1e-12);
        }
    }

    let got = TransformChain::parse("LPCC3P").unwrap().apply(&analysis).unwrap();
    assert_eq!(got.dim(), 14);
    assert_eq!(got.first_coeff(), 3);
    assert_eq!(got.row(0), &analysis.cepstra.row(0)[2..]);
}

#[test]
fn cms_removes_most_of_a_channel_mismatch() {
    let cfg = FrontendConfig::vq();
    let cms = TransformChain::parse("CMS").unwrap();
    for spk in population(3, 21) {
        let clip = synth_utterance(&spk, 10.0, 8);
        for channel in ["M2", "M3"] {
            let a = extract(&clip, &cfg).unwrap();
            let b = extract(&apply_channel(&clip, channel).unwrap(), &cfg).unwrap();
            let frames = a.cepstra.len().min(b.cepstra.len());
            // systematic offset: mean over paired frames of the feature difference
            let offset = |x: &FeatureSequence, y: &FeatureSequence| {
                let mut d = vec![0.0; x.dim()];
                for t in 0..frames {
                    for (j, v) in d.iter_mut().enumerate() {
                        *v += (x.row(t)[j] - y.row(t)[j]) / frames as f64;
                    }
                }
                d.iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            let per_frame = |x: &FeatureSequence, y: &FeatureSequence| {
                (0..frames).map(|t| l2(x.row(t), y.row(t))).sum::<f64>() / frames as f64
            };
            let (ca, cb) = (cms.apply(&a).unwrap(), cms.apply(&b).unwrap());
            let raw = offset(&a.cepstra, &b.cepstra);
            assert!(offset(&ca, &cb) < 0.2 * raw, "{} {channel}", spk.id);
            assert!(per_frame(&ca, &cb) < per_frame(&a.cepstra, &b.cepstra));
        }
    }
}

#[test]
fn lw_and_pf_literal_weights() {
    let c = lpc_to_lpcc(&[-0.5], 4);
    let seq = FeatureSequence::from_rows(4, std::slice::from_ref(&c)).unwrap();
    let lw = linear_weight(seq.clone());
    for n in 1..=4 {
        assert!((lw.row(0)[n - 1] - n as f64 * c[n - 1]).abs() < 1e-15);
    }
    assert!((postfilter_weights(1, 1.0, 0.9) - 0.1).abs() < 1e-15);
    assert!((bandpass_weight(10, 20, 20.0) - 11.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cms_cancels_a_constant_offset(seq in seq_strategy(8), offset in proptest::collection::vec(-5.0f64..5.0, 8)) {
        let shifted = seq.clone().map_indexed(|n, v| v + offset[n - 1]);
        let a = cms(seq);
        let b = cms(shifted);
        prop_assert!(max_abs_diff(a.as_flat(), b.as_flat()) < 1e-9);
    }

    #[test]
    fn weighting_steps_are_linear(x in seq_strategy(6), k in -4.0f64..4.0) {
        let y = x.clone().map_indexed(|n, v| v * 0.5 + n as f64);
        let steps = [Step::LinearWeight, Step::Bandpass { lifter_len: None, height: None }, Step::Postfilter(PostfilterParams::default())];
        for step in steps {
            let lhs = apply_step(&step, {
                let mut s = FeatureSequence::with_first_coeff(6, 1);
                for (rx, ry) in x.rows().zip(y.rows()) {
                    let row: Vec<f64> = rx.iter().zip(ry).map(|(a, b)| a + k * b).collect();
                    s.push(&row).unwrap();
                }
                s
            }).unwrap();
            let fx = apply_step(&step, x.clone()).unwrap();
            let fy = apply_step(&step, y.clone()).unwrap();
            for (t, row) in lhs.rows().enumerate() {
                for j in 0..6 {
                    let rhs = fx.row(t)[j] + k * fy.row(t)[j];
                    prop_assert!((row[j] - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
                }
            }
        }
    }
}
