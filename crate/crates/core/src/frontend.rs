//! Signal to LPCC front-end.
//!
//! Pipeline: pre-emphasis, Hamming-windowed framing (240 samples, shift 80),
//! relative energy gating, biased autocorrelation, Levinson-Durbin and the
//! LPC to cepstrum recursion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::SAMPLE_RATE_HZ;

/// Mono audio at a fixed sample rate. Samples are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        check_finite(&samples)?;
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

fn check_finite(samples: &[f64]) -> Result<()> {
    match samples.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontendConfig {
    pub preemphasis: f64,
    pub frame_len: usize,
    pub frame_shift: usize,
    /// LPC order P.
    pub lpc_order: usize,
    /// Number of cepstral coefficients Q emitted per frame (c_1..c_Q).
    pub cepstrum_order: usize,
    /// Frames more than this many dB below the loudest frame are discarded.
    pub energy_floor_db: f64,
}

impl FrontendConfig {
    /// P = Q = 16, the vector quantization setting.
    pub fn vq() -> Self {
        Self::with_order(16)
    }

    /// P = Q = 20, the covariance matrix setting.
    pub fn cm() -> Self {
        Self::with_order(20)
    }

    pub fn with_order(order: usize) -> Self {
        Self {
            preemphasis: 0.95,
            frame_len: 240,
            frame_shift: 80,
            lpc_order: order,
            cepstrum_order: order,
            energy_floor_db: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(Error::Config("preemphasis must lie in [0, 1)".into()));
        }
        if self.frame_len == 0 || self.frame_shift == 0 {
            return Err(Error::Config("frame length and shift must be positive".into()));
        }
        if self.frame_shift > self.frame_len {
            return Err(Error::Config("frame shift exceeds frame length".into()));
        }
        if self.lpc_order == 0 {
            return Err(Error::Config("lpc order must be at least 1".into()));
        }
        if self.cepstrum_order < self.lpc_order {
            return Err(Error::Config("cepstrum order must be >= lpc order".into()));
        }
        if self.frame_len <= self.lpc_order {
            return Err(Error::Config("frame length must exceed lpc order".into()));
        }
        if !(self.energy_floor_db > 0.0) {
            return Err(Error::Config("energy floor must be positive dB".into()));
        }
        Ok(())
    }
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self::vq()
    }
}

/// First-order pre-emphasis `y[n] = x[n] - coeff * x[n-1]`, with `y[0] = x[0]`.
pub fn preemphasize(x: &[f64], coeff: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&coeff) {
        return Err(Error::Config("preemphasis must lie in [0, 1)".into()));
    }
    check_finite(x)?;
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for (n, &s) in x.iter().enumerate() {
        y.push(if n == 0 { s } else { s - coeff * prev });
        prev = s;
    }
    Ok(y)
}

/// Hamming window `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * libm::cos(2.0 * core::f64::consts::PI * n as f64 / denom))
        .collect()
}

/// `floor((len - frame_len) / shift) + 1`, or 0 when the signal is shorter than a frame.
pub fn frame_count(len: usize, frame_len: usize, frame_shift: usize) -> usize {
    if len < frame_len || frame_len == 0 || frame_shift == 0 {
        0
    } else {
        (len - frame_len) / frame_shift + 1
    }
}

pub fn frame_and_window(x: &[f64], cfg: &FrontendConfig) -> Vec<Vec<f64>> {
    let count = frame_count(x.len(), cfg.frame_len, cfg.frame_shift);
    if count == 0 {
        log::warn!(
            "signal of {} samples is shorter than one {}-sample frame",
            x.len(),
            cfg.frame_len
        );
        return Vec::new();
    }
    let window = hamming(cfg.frame_len);
    (0..count)
        .map(|i| {
            let start = i * cfg.frame_shift;
            x[start..start + cfg.frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect()
}

/// Frame energy in dB; `-inf` for an all-zero frame.
pub fn frame_energy_db(frame: &[f64]) -> f64 {
    let energy: f64 = frame.iter().map(|s| s * s).sum();
    10.0 * libm::log10(energy)
}

/// Keeps frames whose energy exceeds that of the loudest frame minus `floor_db`.
pub fn energy_gate(frames: Vec<Vec<f64>>, floor_db: f64) -> Vec<Vec<f64>> {
    let db: Vec<f64> = frames.iter().map(|f| frame_energy_db(f)).collect();
    let loudest = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if loudest == f64::NEG_INFINITY {
        if !frames.is_empty() {
            log::warn!("all {} frames are silent", frames.len());
        }
        return Vec::new();
    }
    let threshold = loudest - floor_db;
    frames
        .into_iter()
        .zip(db)
        .filter(|(_, e)| *e > threshold)
        .map(|(f, _)| f)
        .collect()
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n+k]` for `k = 0..=order`.
pub fn autocorrelation(frame: &[f64], order: usize) -> Result<Vec<f64>> {
    if frame.len() <= order {
        return Err(Error::FrameTooShort {
            len: frame.len(),
            order,
        });
    }
    let r: Vec<f64> = (0..=order)
        .map(|k| {
            frame[..frame.len() - k]
                .iter()
                .zip(&frame[k..])
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    if r[0] <= 0.0 {
        return Err(Error::DegenerateFrame);
    }
    Ok(r)
}

/// Levinson-Durbin recursion.
///
/// Returns `a[1..=P]` of `A(z) = 1 + sum_k a_k z^-k` and the final
/// prediction error energy. Fails when the autocorrelation is not positive
/// definite, which is exactly when a reflection coefficient reaches unit
/// magnitude.
pub fn levinson(r: &[f64]) -> Result<(Vec<f64>, f64)> {
    let order = r.len().saturating_sub(1);
    if r.is_empty() || !(r[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { stage: 0 });
    }
    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 1..=order {
        let acc = r[i] + a.iter().enumerate().map(|(j, aj)| aj * r[i - 1 - j]).sum::<f64>();
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::NotPositiveDefinite { stage: i });
        }
        let prev = a.clone();
        for j in 0..a.len() {
            a[j] = prev[j] + k * prev[i - 2 - j];
        }
        a.push(k);
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return Err(Error::NotPositiveDefinite { stage: i });
        }
    }
    Ok((a, err))
}

/// Cepstrum `c_1..c_Q` of the all-pole model `1/A(z)`. The gain term c_0 is not produced.
pub fn lpc_to_lpcc(a: &[f64], q: usize) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0; q];
    for n in 1..=q {
        let lo = if n > p { n - p } else { 1 };
        let acc: f64 = (lo..n).map(|k| k as f64 * c[k - 1] * a[n - k - 1]).sum();
        let direct = if n <= p { -a[n - 1] } else { 0.0 };
        c[n - 1] = direct - acc / n as f64;
    }
    c
}

/// Book-keeping from one [`extract`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub frames: usize,
    pub gated: usize,
    pub degenerate: usize,
    pub acw_dropped: usize,
}

/// Per-utterance analysis: LPC polynomials and their LPCC, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// T×P inverse filter coefficients `a_1..a_P`.
    pub lpc: FeatureSequence,
    /// T×Q cepstra `c_1..c_Q`.
    pub cepstra: FeatureSequence,
    /// Cached ACW cepstra, see [`Analysis::with_acw`].
    pub acw: Option<FeatureSequence>,
    pub stats: ExtractStats,
}

impl Analysis {
    /// Computes and stores the ACW cepstra so chains starting with ACW
    /// do not repeat the root finding.
    pub fn with_acw(mut self) -> Result<Self> {
        if self.acw.is_none() {
            let (acw, dropped) = crate::transforms::acw(&self.lpc, self.cepstra.dim())?;
            self.stats.acw_dropped = dropped;
            self.acw = Some(acw);
        }
        Ok(self)
    }
}

/// Runs the full front-end on an 8 kHz clip.
pub fn extract(clip: &AudioClip, cfg: &FrontendConfig) -> Result<Analysis> {
    cfg.validate()?;
    if clip.sample_rate_hz() != SAMPLE_RATE_HZ {
        return Err(Error::SampleRate {
            got: clip.sample_rate_hz(),
            expected: SAMPLE_RATE_HZ,
        });
    }
    let emphasized = preemphasize(clip.samples(), cfg.preemphasis)?;
    let frames = frame_and_window(&emphasized, cfg);
    let total = frames.len();
    let kept = energy_gate(frames, cfg.energy_floor_db);
    let mut stats = ExtractStats {
        frames: total,
        gated: total - kept.len(),
        ..ExtractStats::default()
    };

    let mut lpc = FeatureSequence::new(cfg.lpc_order);
    let mut cepstra = FeatureSequence::new(cfg.cepstrum_order);
    for frame in &kept {
        let coeffs = autocorrelation(frame, cfg.lpc_order).and_then(|r| levinson(&r));
        match coeffs {
            Ok((a, _)) => {
                cepstra.push(&lpc_to_lpcc(&a, cfg.cepstrum_order))?;
                lpc.push(&a)?;
            }
            Err(_) => stats.degenerate += 1,
        }
    }
    if stats.degenerate > 0 {
        log::debug!("dropped {} degenerate frames", stats.degenerate);
    }
    if cepstra.is_empty() {
        log::warn!("no frame survived analysis ({} frames in input)", total);
    }
    Ok(Analysis {
        lpc,
        cepstra,
        acw: None,
        stats,
    })
}
