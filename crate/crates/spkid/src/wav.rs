//! PCM16 mono WAV reading and writing.
//!
//! 16 kHz recordings are brought to the 8 kHz analysis rate by a
//! Hamming-windowed sinc low-pass and 2:1 decimation.

use std::path::Path;

use spkid_core::{AudioClip, SAMPLE_RATE_HZ};

use crate::error::{Error, Result};

/// Taps of the anti-alias filter used for 16 kHz input.
pub const DECIMATION_TAPS: usize = 127;
/// Cutoff of the anti-alias filter in Hz at the 16 kHz input rate.
pub const DECIMATION_CUTOFF_HZ: f64 = 3800.0;

fn audio_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Audio {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a mono PCM16 file at 8 or 16 kHz; samples are scaled to [-1, 1).
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => audio_err(path, other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(audio_err(path, format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(audio_err(
            path,
            format!("{:?} {}-bit samples, expected 16-bit PCM", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| audio_err(path, e.to_string()))?;
    match spec.sample_rate {
        SAMPLE_RATE_HZ => Ok(AudioClip::new(samples, SAMPLE_RATE_HZ)?),
        16000 => Ok(AudioClip::new(decimate_16k(&samples), SAMPLE_RATE_HZ)?),
        other => Err(audio_err(path, format!("sample rate {other} Hz, expected 8000 or 16000"))),
    }
}

/// Writes a clip as mono PCM16, saturating samples outside [-1, 1).
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => audio_err(path, other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &x in clip.samples() {
        writer.write_sample(to_pcm16(x)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

pub fn to_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Linear-phase low-pass taps, normalized to unit DC gain.
pub fn lowpass_taps(taps: usize, cutoff: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let denom = (taps - 1).max(1) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * t).sin() / (std::f64::consts::PI * t)
            };
            let window = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos();
            sinc * window
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

/// Low-pass filters 16 kHz samples (delay compensated) and keeps every second one.
pub fn decimate_16k(x: &[f64]) -> Vec<f64> {
    let h = lowpass_taps(DECIMATION_TAPS, DECIMATION_CUTOFF_HZ / 16000.0);
    let delay = (h.len() - 1) / 2;
    (0..x.len().div_ceil(2))
        .map(|m| {
            let n = 2 * m + delay;
            h.iter()
                .enumerate()
                .filter_map(|(k, hk)| n.checked_sub(k).and_then(|i| x.get(i)).map(|xi| hk * xi))
                .sum()
        })
        .collect()
}
