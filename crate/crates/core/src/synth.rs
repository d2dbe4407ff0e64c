//! Seeded synthetic speakers standing in for a recorded corpus.
//!
//! A speaker is a bank of all-pole "phone" filters, each made of five
//! conjugate resonances (AR(10)). Phones come from an inventory shared by
//! the whole population; a speaker warps every formant frequency by a
//! vocal-tract factor and adds its own per-formant offsets. Utterances are
//! white Gaussian excitation passed through a phone sequence, so frame
//! cepstra scatter around speaker-specific centroids the way speech does.
//!
//! Recording conditions are analogs, not acoustic models:
//! * sessions jitter every pole radius by at most [`SESSION_RADIUS_JITTER`];
//! * languages change how often each phone is used and the pause duty cycle;
//! * microphones are fixed short FIR filters ([`channel_fir`]).

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frontend::{lpc_to_lpcc, AudioClip};
use crate::seed;
use crate::SAMPLE_RATE_HZ;

pub const MAX_POLE_RADIUS: f64 = 0.95;
pub const SESSION_RADIUS_JITTER: f64 = 0.02;
pub const FORMANTS: usize = 5;
pub const PHONES: usize = 8;

/// Excitation standard deviation after per-phone gain normalization.
const LEVEL: f64 = 0.1;

/// A conjugate pole pair `radius * exp(±j angle)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub radius: f64,
    pub angle: f64,
}

impl Resonance {
    pub fn from_formant(freq_hz: f64, bandwidth_hz: f64) -> Self {
        let fs = f64::from(SAMPLE_RATE_HZ);
        Self {
            radius: libm::exp(-PI * bandwidth_hz / fs).min(MAX_POLE_RADIUS),
            angle: 2.0 * PI * freq_hz / fs,
        }
    }
}

/// `A(z)` coefficients `a_1..a_2K` of the product of all resonances.
pub fn resonances_to_lpc(resonances: &[Resonance]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for r in resonances {
        // 1 - 2 r cos(w) z^-1 + r^2 z^-2
        let section = [1.0, -2.0 * r.radius * libm::cos(r.angle), r.radius * r.radius];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            for (j, s) in section.iter().enumerate() {
                next[i + j] += p * s;
            }
        }
        poly = next;
    }
    poly.into_iter().skip(1).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpeaker {
    pub id: String,
    pub seed: u64,
    neutral: Vec<Resonance>,
    phones: Vec<Vec<Resonance>>,
}

impl SynthSpeaker {
    /// A speaker with a single stationary filter.
    pub fn stationary(id: impl Into<String>, resonances: Vec<Resonance>, seed: u64) -> Result<Self> {
        let spk = Self {
            id: id.into(),
            seed,
            neutral: resonances,
            phones: Vec::new(),
        };
        spk.check()?;
        Ok(spk)
    }

    /// A random stationary AR(10) speaker.
    pub fn random(id: impl Into<String>, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let resonances = (0..FORMANTS)
            .map(|k| {
                let lo = 200.0 + 750.0 * k as f64;
                Resonance::from_formant(rng.random_range(lo..lo + 600.0), rng.random_range(140.0..400.0))
            })
            .collect();
        Self {
            id: id.into(),
            seed,
            neutral: resonances,
            phones: Vec::new(),
        }
    }

    fn check(&self) -> Result<()> {
        let all = self.neutral.iter().chain(self.phones.iter().flatten());
        for r in all {
            if !(r.radius > 0.0 && r.radius <= MAX_POLE_RADIUS) {
                return Err(Error::Config(alloc::format!(
                    "pole radius {} outside (0, {MAX_POLE_RADIUS}]",
                    r.radius
                )));
            }
        }
        Ok(())
    }

    /// Inverse filter of the speaker's neutral configuration.
    pub fn ar_coeffs(&self) -> Vec<f64> {
        resonances_to_lpc(&self.neutral)
    }

    /// Cepstrum `c_1..c_q` of the neutral filter.
    pub fn cepstrum(&self, q: usize) -> Vec<f64> {
        lpc_to_lpcc(&self.ar_coeffs(), q)
    }

    pub fn phone_count(&self) -> usize {
        self.phones.len().max(1)
    }

    pub fn phone_coeffs(&self) -> Vec<Vec<f64>> {
        if self.phones.is_empty() {
            vec![self.ar_coeffs()]
        } else {
            self.phones.iter().map(|p| resonances_to_lpc(p)).collect()
        }
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.neutral
            .iter()
            .chain(self.phones.iter().flatten())
            .fold(0.0_f64, |m, r| m.max(r.radius))
    }

    /// The same speaker recorded in another session: every pole radius
    /// moves by a seeded offset of at most [`SESSION_RADIUS_JITTER`].
    pub fn for_session(&self, session: &str) -> Self {
        let mut rng = seed::rng(seed::derive_str(self.seed, session));
        let mut jitter = |r: &Resonance| Resonance {
            radius: (r.radius + rng.random_range(-SESSION_RADIUS_JITTER..=SESSION_RADIUS_JITTER))
                .clamp(0.5, MAX_POLE_RADIUS),
            angle: r.angle,
        };
        let neutral = self.neutral.iter().map(&mut jitter).collect();
        let phones = self
            .phones
            .iter()
            .map(|p| p.iter().map(&mut jitter).collect())
            .collect();
        Self {
            id: self.id.clone(),
            seed: self.seed,
            neutral,
            phones,
        }
    }
}

/// Range of the per-speaker vocal tract scaling of all formant frequencies.
/// Source tilt of language styles, roughly cancelled by 0.95 pre-emphasis.
const SOURCE_TILT: f64 = 0.9;
const WARP: (f64, f64) = (0.95, 1.05);
/// Relative spread of a speaker's own realization of each phone formant.
const IDIOSYNCRASY: f64 = 0.05;

/// Formant frequency ranges (Hz) of the shared phone inventory.
const FORMANT_RANGES: [(f64, f64); FORMANTS] = [
    (300.0, 850.0),
    (900.0, 2200.0),
    (2300.0, 2900.0),
    (3000.0, 3400.0),
    (3500.0, 3800.0),
];

/// Generates `n` phone-bank speakers sharing one inventory.
///
/// Speakers whose neutral cepstra coincide (distance below 1e-3) are
/// regenerated from the next derived seed.
pub fn population(n: usize, master_seed: u64) -> Vec<SynthSpeaker> {
    let mut rng = seed::rng(seed::derive_str(master_seed, "inventory"));
    let inventory: Vec<Vec<(f64, f64)>> = (0..PHONES)
        .map(|_| {
            FORMANT_RANGES
                .iter()
                .map(|&(lo, hi)| (rng.random_range(lo..hi), rng.random_range(150.0..350.0)))
                .collect()
        })
        .collect();

    let mut speakers: Vec<SynthSpeaker> = Vec::with_capacity(n);
    for i in 0..n {
        let id = alloc::format!("spk{i:02}");
        let mut attempt = 0u64;
        loop {
            let spk_seed = seed::derive(seed::derive_str(master_seed, &id), attempt);
            let candidate = phone_speaker(&id, spk_seed, &inventory);
            let c = candidate.cepstrum(20);
            let collides = speakers.iter().any(|other| {
                let d: f64 = other
                    .cepstrum(20)
                    .iter()
                    .zip(&c)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                libm::sqrt(d) < 1e-3
            });
            if !collides {
                speakers.push(candidate);
                break;
            }
            attempt += 1;
        }
    }
    speakers
}

fn phone_speaker(id: &str, spk_seed: u64, inventory: &[Vec<(f64, f64)>]) -> SynthSpeaker {
    let mut rng = seed::rng(spk_seed);
    let warp: f64 = rng.random_range(WARP.0..WARP.1);
    let bw_scale: f64 = rng.random_range(0.9..1.1);
    let nyquist_guard = 0.5 * f64::from(SAMPLE_RATE_HZ) - 150.0;
    let mut shape = |formants: &[(f64, f64)], idiosyncrasy: f64| -> Vec<Resonance> {
        formants
            .iter()
            .map(|&(f, b)| {
                let own = rng.random_range(1.0 - idiosyncrasy..=1.0 + idiosyncrasy);
                Resonance::from_formant((f * warp * own).clamp(150.0, nyquist_guard), b * bw_scale)
            })
            .collect()
    };
    let mean: Vec<(f64, f64)> = (0..FORMANTS)
        .map(|k| {
            let n = inventory.len() as f64;
            (
                inventory.iter().map(|p| p[k].0).sum::<f64>() / n,
                inventory.iter().map(|p| p[k].1).sum::<f64>() / n,
            )
        })
        .collect();
    let neutral = shape(&mean, 0.0);
    let phones = inventory.iter().map(|p| shape(p, IDIOSYNCRASY)).collect();
    SynthSpeaker {
        id: id.to_string(),
        seed: spk_seed,
        neutral,
        phones,
    }
}

/// How an utterance walks through the phone bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakingStyle {
    pub phone_weights: Vec<f64>,
    /// Probability that a segment is a pause (zero excitation).
    pub pause_fraction: f64,
    pub segment_ms: (f64, f64),
    /// Real source pole giving the excitation a low-pass tilt; 0 keeps it white.
    pub source_tilt: f64,
}

impl SpeakingStyle {
    pub fn neutral(phones: usize) -> Self {
        Self {
            phone_weights: vec![1.0; phones.max(1)],
            pause_fraction: 0.0,
            segment_ms: (50.0, 150.0),
            source_tilt: 0.0,
        }
    }

    /// Deterministic style derived from a language label.
    pub fn for_language(label: &str, phones: usize) -> Self {
        let mut rng = seed::rng(seed::derive_str(0x1a2b_3c4d, label));
        Self {
            phone_weights: (0..phones.max(1)).map(|_| rng.random_range(0.4..1.6)).collect(),
            pause_fraction: rng.random_range(0.05..0.2),
            segment_ms: (50.0, 150.0),
            source_tilt: SOURCE_TILT,
        }
    }
}

/// Appends the real pole `tilt` to `A(z)`.
fn with_source_pole(a: &[f64], tilt: f64) -> Vec<f64> {
    if tilt == 0.0 {
        return a.to_vec();
    }
    let mut out = vec![0.0; a.len() + 1];
    for k in 0..out.len() {
        let ak = if k < a.len() { a[k] } else { 0.0 };
        let prev = if k == 0 { 1.0 } else { a[k - 1] };
        out[k] = ak - tilt * prev;
    }
    out
}

fn impulse_gain(a: &[f64]) -> f64 {
    let mut y = vec![0.0; 2048];
    for n in 0..y.len() {
        let mut v = if n == 0 { 1.0 } else { 0.0 };
        for (k, ak) in a.iter().enumerate() {
            if n > k {
                v -= ak * y[n - k - 1];
            }
        }
        y[n] = v;
    }
    libm::sqrt(y.iter().map(|v| v * v).sum())
}

/// White Gaussian noise through the speaker's neutral filter (stationary
/// speakers) or a uniform walk over its phones.
pub fn synth_utterance(spk: &SynthSpeaker, duration_s: f64, utt_seed: u64) -> AudioClip {
    synth_utterance_styled(spk, duration_s, utt_seed, &SpeakingStyle::neutral(spk.phone_count()))
}

pub fn synth_utterance_styled(
    spk: &SynthSpeaker,
    duration_s: f64,
    utt_seed: u64,
    style: &SpeakingStyle,
) -> AudioClip {
    let fs = f64::from(SAMPLE_RATE_HZ);
    let n = libm::round(duration_s.max(0.0) * fs) as usize;
    let filters: Vec<Vec<f64>> = spk
        .phone_coeffs()
        .into_iter()
        .map(|a| with_source_pole(&a, style.source_tilt))
        .collect();
    let gains: Vec<f64> = filters.iter().map(|a| LEVEL / impulse_gain(a)).collect();
    let order = filters.iter().map(Vec::len).max().unwrap_or(0);
    let weights: Vec<f64> = (0..filters.len())
        .map(|i| style.phone_weights.get(i).copied().unwrap_or(1.0).max(0.0))
        .collect();
    let total_weight: f64 = weights.iter().sum();

    let mut rng = seed::rng(seed::derive(spk.seed, utt_seed));
    let mut out = Vec::with_capacity(n);
    let mut history = vec![0.0; order];
    let (lo, hi) = style.segment_ms;
    while out.len() < n {
        let len = (rng.random_range(lo..=hi.max(lo)) * fs / 1000.0) as usize;
        let pause = rng.random::<f64>() < style.pause_fraction;
        let mut pick = rng.random::<f64>() * total_weight;
        let mut phone = filters.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                phone = i;
                break;
            }
            pick -= w;
        }
        let a = &filters[phone];
        let gain = if pause { 0.0 } else { gains[phone] };
        for _ in 0..len.max(1) {
            if out.len() == n {
                break;
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            let mut y = gain * e;
            for (k, ak) in a.iter().enumerate() {
                y -= ak * history[k];
            }
            history.rotate_right(1);
            if let Some(h0) = history.first_mut() {
                *h0 = y;
            }
            out.push(y);
        }
    }
    AudioClip::new(out, SAMPLE_RATE_HZ).expect("stable filters produce finite output")
}

/// Impulse responses of the simulated microphones.
///
/// * `M1`: identity, the reference microphone.
/// * `M2`: mild low-pass, `[0.6, 0.3, 0.1]`.
/// * `M3`: strong first-order tilt boosting high frequencies, `[1, -0.8]`.
pub fn channel_fir(channel_id: &str) -> Result<&'static [f64]> {
    match channel_id {
        "M1" => Ok(&[1.0]),
        "M2" => Ok(&[0.6, 0.3, 0.1]),
        "M3" => Ok(&M3),
        other => Err(Error::UnknownChannel(other.to_string())),
    }
}

const M3: [f64; 2] = [1.0, -0.8];

/// Full linear convolution, output length `x.len() + h.len() - 1`.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

pub fn apply_channel(clip: &AudioClip, channel_id: &str) -> Result<AudioClip> {
    let h = channel_fir(channel_id)?;
    if h == [1.0] {
        return Ok(clip.clone());
    }
    AudioClip::new(convolve(clip.samples(), h), clip.sample_rate_hz())
}
