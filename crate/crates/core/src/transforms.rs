//! Cepstral parameterizations and their combinations.
//!
//! Chains are named with `+`-joined tokens, e.g. `CMS+ACW+SIGMA`. Tokens:
//!
//! | token                  | step                                    |
//! |------------------------|-----------------------------------------|
//! | `LPCC`                 | none (plain LPC cepstrum)               |
//! | `LPCC3P`, `LPCC3..P`   | drop c_1 and c_2                        |
//! | `CMS`                  | per-utterance cepstral mean subtraction |
//! | `ACW`                  | adaptive component weighted cepstrum    |
//! | `LW`                   | linear lifter `n c_n`                   |
//! | `BPL`                  | bandpass lifter, h = L = Q              |
//! | `SIGMA`, `σ`           | inverse standard deviation weighting    |
//! | `PF`                   | postfilter lifter, α = 1, β = 0.9       |
//!
//! `-` is accepted as a separator too (`CMS-LW`, `σ-LPCC`). Steps run in
//! the listed order except `ACW`, which is always moved to the front since
//! it starts from the LPC polynomials instead of a cepstrum.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::frontend::{lpc_to_lpcc, Analysis};
use crate::poly;

/// Floor applied to a standard deviation before inversion.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Residual imaginary part tolerated when summing conjugate pole terms.
const ACW_IMAG_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaWeights {
    weights: Vec<f64>,
}

impl SigmaWeights {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("sigma weights must be finite and positive".into()));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostfilterParams {
    alpha: f64,
    beta: f64,
}

impl PostfilterParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta < 1.0 && alpha > beta) {
            return Err(Error::Config(
                "postfilter needs 0 < beta < alpha <= 1".into(),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for PostfilterParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    DropLow2,
    Cms,
    Acw,
    LinearWeight,
    /// `lifter_len`/`height` of `None` mean L = h = Q of the incoming sequence.
    Bandpass {
        lifter_len: Option<usize>,
        height: Option<f64>,
    },
    Sigma(Option<SigmaWeights>),
    Postfilter(PostfilterParams),
}

impl Step {
    pub fn token(&self) -> &'static str {
        match self {
            Step::DropLow2 => "LPCC3P",
            Step::Cms => "CMS",
            Step::Acw => "ACW",
            Step::LinearWeight => "LW",
            Step::Bandpass { .. } => "BPL",
            Step::Sigma(_) => "SIGMA",
            Step::Postfilter(_) => "PF",
        }
    }
}

/// Ordered list of parameterization steps plus the display name it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    name: String,
    steps: Vec<Step>,
}

impl TransformChain {
    pub fn new(name: impl Into<String>, steps: Vec<Step>) -> Result<Self> {
        let acw = steps.iter().filter(|s| matches!(s, Step::Acw)).count();
        if acw > 1 {
            return Err(Error::InvalidChain("ACW may appear only once".into()));
        }
        if acw == 1 && !matches!(steps.first(), Some(Step::Acw)) {
            return Err(Error::InvalidChain("ACW must be the first step".into()));
        }
        Ok(Self {
            name: name.into(),
            steps,
        })
    }

    /// The plain LPCC chain.
    pub fn identity() -> Self {
        Self {
            name: "LPCC".to_string(),
            steps: Vec::new(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let mut steps = Vec::new();
        let mut acw = false;
        for raw in name.split(['+', '-']) {
            let token = raw.trim();
            if token.is_empty() {
                return Err(Error::UnknownTransform(name.to_string()));
            }
            let upper = token.to_uppercase();
            let step = match upper.as_str() {
                "LPCC" => None,
                "LPCC3P" | "LPCC3..P" | "LPCC_3..P" | "LPCC_{3..P}" | "LPCC3,P" => {
                    Some(Step::DropLow2)
                }
                "CMS" => Some(Step::Cms),
                "ACW" => {
                    if acw {
                        return Err(Error::InvalidChain("ACW may appear only once".into()));
                    }
                    acw = true;
                    None
                }
                "LW" => Some(Step::LinearWeight),
                "BPL" => Some(Step::Bandpass {
                    lifter_len: None,
                    height: None,
                }),
                "SIGMA" | "Σ" => Some(Step::Sigma(None)),
                "PF" => Some(Step::Postfilter(PostfilterParams::default())),
                _ => return Err(Error::UnknownTransform(token.to_string())),
            };
            steps.extend(step);
        }
        if acw {
            steps.insert(0, Step::Acw);
        }
        Self::new(name, steps)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn needs_fit(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Sigma(None)))
    }

    pub fn uses_acw(&self) -> bool {
        matches!(self.steps.first(), Some(Step::Acw))
    }

    /// Fits every σ step on the pooled output of the steps before it.
    pub fn fit(&mut self, training: &[&Analysis]) -> Result<()> {
        for i in 0..self.steps.len() {
            if !matches!(self.steps[i], Step::Sigma(_)) {
                continue;
            }
            let mut pooled = Vec::with_capacity(training.len());
            for analysis in training {
                pooled.push(self.apply_prefix(analysis, i)?);
            }
            self.steps[i] = Step::Sigma(Some(sigma_fit(&pooled)?));
        }
        Ok(())
    }

    pub fn apply(&self, analysis: &Analysis) -> Result<FeatureSequence> {
        self.apply_prefix(analysis, self.steps.len())
    }

    fn apply_prefix(&self, analysis: &Analysis, upto: usize) -> Result<FeatureSequence> {
        let steps = &self.steps[..upto];
        let (mut seq, rest) = match steps.split_first() {
            Some((Step::Acw, rest)) => match &analysis.acw {
                Some(cached) => (cached.clone(), rest),
                None => {
                    let (seq, dropped) = acw(&analysis.lpc, analysis.cepstra.dim())?;
                    if dropped > 0 {
                        log::debug!("acw dropped {} frames", dropped);
                    }
                    (seq, rest)
                }
            },
            _ => (analysis.cepstra.clone(), steps),
        };
        for step in rest {
            seq = apply_step(step, seq)?;
        }
        Ok(seq)
    }
}

impl core::fmt::Display for TransformChain {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.name)
    }
}

/// Applies one cepstrum-domain step. `Acw` is not a cepstrum-domain step.
pub fn apply_step(step: &Step, seq: FeatureSequence) -> Result<FeatureSequence> {
    match step {
        Step::DropLow2 => drop_low2(&seq),
        Step::Cms => Ok(cms(seq)),
        Step::Acw => Err(Error::InvalidChain(
            "ACW needs LPC input and must lead the chain".into(),
        )),
        Step::LinearWeight => Ok(linear_weight(seq)),
        Step::Bandpass { lifter_len, height } => {
            let last = seq.first_coeff() + seq.dim() - 1;
            let l = lifter_len.unwrap_or(last);
            bandpass_lifter(seq, l, height.unwrap_or(l as f64))
        }
        Step::Sigma(Some(w)) => sigma_apply(seq, w),
        Step::Sigma(None) => Err(Error::SigmaNotFitted),
        Step::Postfilter(p) => Ok(postfilter_weight(seq, p)),
    }
}

/// Removes c_1 and c_2.
pub fn drop_low2(seq: &FeatureSequence) -> Result<FeatureSequence> {
    if seq.dim() < 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: seq.dim(),
        });
    }
    let mut out = FeatureSequence::with_first_coeff(seq.dim() - 2, seq.first_coeff() + 2);
    for row in seq.rows() {
        out.push(&row[2..])?;
    }
    Ok(out)
}

/// Subtracts the utterance mean vector from every row.
pub fn cms(mut seq: FeatureSequence) -> FeatureSequence {
    if seq.is_empty() {
        log::warn!("cepstral mean subtraction on an empty sequence");
        return seq;
    }
    let mean = seq.mean();
    for row in seq.rows_mut() {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    seq
}

pub fn linear_weight(seq: FeatureSequence) -> FeatureSequence {
    seq.map_indexed(|n, c| n as f64 * c)
}

/// Weight `1 + (h/2) sin(pi n / L)` for cepstral index `n`.
pub fn bandpass_weight(n: usize, lifter_len: usize, height: f64) -> f64 {
    1.0 + 0.5 * height * libm::sin(core::f64::consts::PI * n as f64 / lifter_len as f64)
}

pub fn bandpass_lifter(seq: FeatureSequence, lifter_len: usize, height: f64) -> Result<FeatureSequence> {
    let last = seq.first_coeff() + seq.dim() - 1;
    if lifter_len == 0 || (seq.dim() > 0 && last > lifter_len) {
        return Err(Error::Config(alloc::format!(
            "bandpass lifter length {lifter_len} shorter than cepstral index {last}"
        )));
    }
    Ok(seq.map_indexed(|n, c| bandpass_weight(n, lifter_len, height) * c))
}

/// Weight `alpha^n - beta^n` for cepstral index `n`.
pub fn postfilter_weights(n: usize, alpha: f64, beta: f64) -> f64 {
    libm::pow(alpha, n as f64) - libm::pow(beta, n as f64)
}

pub fn postfilter_weight(seq: FeatureSequence, p: &PostfilterParams) -> FeatureSequence {
    seq.map_indexed(|n, c| postfilter_weights(n, p.alpha, p.beta) * c)
}

/// Pooled population standard deviation per coefficient; weights are `1/max(sigma, eps)`.
pub fn sigma_fit(corpus: &[FeatureSequence]) -> Result<SigmaWeights> {
    let first = corpus.first().ok_or(Error::Empty("sigma fitting corpus"))?;
    let dim = first.dim();
    // Welford accumulation in corpus order for a reproducible reduction.
    let mut count = 0usize;
    let mut mean = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    for seq in corpus {
        if seq.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: seq.dim(),
            });
        }
        for row in seq.rows() {
            count += 1;
            for j in 0..dim {
                let delta = row[j] - mean[j];
                mean[j] += delta / count as f64;
                m2[j] += delta * (row[j] - mean[j]);
            }
        }
    }
    if count < 2 {
        return Err(Error::NotEnoughFrames {
            required: 2,
            available: count,
        });
    }
    let weights = m2
        .iter()
        .map(|s| 1.0 / libm::sqrt(s / count as f64).max(SIGMA_FLOOR))
        .collect();
    Ok(SigmaWeights { weights })
}

pub fn sigma_apply(mut seq: FeatureSequence, w: &SigmaWeights) -> Result<FeatureSequence> {
    if w.weights.len() != seq.dim() {
        return Err(Error::Dimension {
            expected: seq.dim(),
            got: w.weights.len(),
        });
    }
    for row in seq.rows_mut() {
        for (v, wn) in row.iter_mut().zip(&w.weights) {
            *v *= wn;
        }
    }
    Ok(seq)
}

/// Monic numerator `N(z)/P` of the pole-sum `sum_i 1/(1 - p_i z^-1)`.
///
/// Returns `[b_1, .., b_(P-1)]` and the largest imaginary residue seen
/// while summing the per-pole quotients, which should cancel between
/// conjugate pairs.
pub fn acw_numerator(a: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.len() <= 1 {
        return Ok((Vec::new(), 0.0));
    }
    numerator_from_poles(a, &poly::poles(a)?)
}

fn numerator_from_poles(a: &[f64], poles: &[Complex64]) -> Result<(Vec<f64>, f64)> {
    let p = a.len();
    if p <= 1 {
        return Ok((Vec::new(), 0.0));
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); p];
    for &pole in poles {
        for (acc, q) in sum.iter_mut().zip(poly::deflate(a, pole)) {
            *acc += q;
        }
    }
    let scale = p as f64;
    let imag = sum.iter().fold(0.0_f64, |m, z| m.max(z.im.abs())) / scale;
    let b = sum[1..].iter().map(|z| z.re / scale).collect();
    Ok((b, imag))
}

/// ACW cepstrum of one frame: cepstrum of `N(z)/A(z)` without the gain term.
pub fn acw_frame(a: &[f64], q: usize) -> Result<Vec<f64>> {
    let (b, imag) = acw_numerator(a)?;
    if imag > ACW_IMAG_TOLERANCE {
        return Err(Error::RootFinding { iterations: 0 });
    }
    let pole_part = lpc_to_lpcc(a, q);
    if b.is_empty() {
        return Ok(pole_part);
    }
    // The LPCC recursion on B gives the cepstrum of 1/B; the numerator's is its negation.
    let zero_part = lpc_to_lpcc(&b, q);
    Ok(pole_part.iter().zip(&zero_part).map(|(cp, cz)| cp - cz).collect())
}

/// ACW cepstra for every LPC row; frames whose roots cannot be found are dropped.
pub fn acw(lpc: &FeatureSequence, q: usize) -> Result<(FeatureSequence, usize)> {
    let mut out = FeatureSequence::new(q);
    let mut dropped = 0;
    for a in lpc.rows() {
        match acw_frame(a, q) {
            Ok(c) => out.push(&c)?,
            Err(Error::RootFinding { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, dropped))
}
