//! Speaker models: random-method VQ codebooks and covariance matrices
//! compared with the arithmetic-harmonic sphericity measure.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::linalg::{Cholesky, Matrix};
use crate::seed;
use crate::transforms::TransformChain;

/// Relative ridge used when none is configured: `1e-6 tr(C) / Q`.
pub const DEFAULT_RELATIVE_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VqCodebook {
    codewords: FeatureSequence,
    bits: u32,
    seed: u64,
}

impl VqCodebook {
    pub fn from_parts(codewords: FeatureSequence, bits: u32, seed: u64) -> Result<Self> {
        let expected = 1usize << bits;
        if codewords.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: codewords.len(),
            });
        }
        Ok(Self {
            codewords,
            bits,
            seed,
        })
    }

    pub fn codewords(&self) -> &FeatureSequence {
        &self.codewords
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.codewords.dim()
    }
}

/// Picks `2^bits` distinct training rows uniformly at random.
pub fn train_vq_random(features: &FeatureSequence, bits: u32, seed: u64) -> Result<VqCodebook> {
    if bits >= usize::BITS {
        return Err(Error::Config("codebook too large".into()));
    }
    let size = 1usize << bits;
    if features.len() < size {
        return Err(Error::NotEnoughFrames {
            required: size,
            available: features.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let picked = rand::seq::index::sample(&mut rng, features.len(), size);
    let mut codewords = FeatureSequence::with_first_coeff(features.dim(), features.first_coeff());
    for t in picked.iter() {
        codewords.push(features.row(t))?;
    }
    Ok(VqCodebook {
        codewords,
        bits,
        seed,
    })
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Mean squared-Euclidean distortion of `seq` against its nearest codewords.
pub fn vq_score(cb: &VqCodebook, seq: &FeatureSequence) -> Result<f64> {
    if seq.dim() != cb.dim() {
        return Err(Error::Dimension {
            expected: cb.dim(),
            got: seq.dim(),
        });
    }
    if seq.is_empty() {
        return Err(Error::Empty("test sequence"));
    }
    let total: f64 = seq
        .rows()
        .map(|x| {
            cb.codewords
                .rows()
                .map(|c| squared_distance(x, c))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / seq.len() as f64)
}

/// How much diagonal loading a covariance estimate receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    Absolute(f64),
    /// Multiple of `tr(C) / Q` of the unloaded estimate.
    RelativeTrace(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::RelativeTrace(DEFAULT_RELATIVE_RIDGE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    cov: Matrix,
    mean: Vec<f64>,
    ridge: f64,
    factor: Cholesky,
}

/// Biased sample covariance `(1/T) sum (x - mu)(x - mu)^T` and the mean.
pub fn covariance(features: &FeatureSequence) -> (Matrix, Vec<f64>) {
    let q = features.dim();
    let mean = features.mean();
    let mut cov = Matrix::zeros(q);
    let t = features.len();
    if t == 0 {
        return (cov, mean);
    }
    let mut centered = alloc::vec![0.0; q];
    for row in features.rows() {
        for j in 0..q {
            centered[j] = row[j] - mean[j];
        }
        for i in 0..q {
            for j in 0..=i {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..q {
        for j in 0..=i {
            let v = cov[(i, j)] / t as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (cov, mean)
}

pub fn train_cov(features: &FeatureSequence, ridge: Ridge) -> Result<CovarianceModel> {
    if features.len() < 2 {
        return Err(Error::NotEnoughFrames {
            required: 2,
            available: features.len(),
        });
    }
    let (cov, mean) = covariance(features);
    let q = cov.n();
    let ridge = match ridge {
        Ridge::Absolute(r) => r,
        Ridge::RelativeTrace(k) => k * cov.trace() / q as f64,
    };
    let mut loaded = cov;
    for i in 0..q {
        loaded[(i, i)] += ridge;
    }
    CovarianceModel::from_parts(loaded, mean, ridge)
}

impl CovarianceModel {
    /// Wraps an already loaded covariance matrix; fails unless it is positive definite.
    pub fn from_parts(cov: Matrix, mean: Vec<f64>, ridge: f64) -> Result<Self> {
        if mean.len() != cov.n() {
            return Err(Error::Dimension {
                expected: cov.n(),
                got: mean.len(),
            });
        }
        let factor = cov.cholesky().ok_or(Error::SingularCovariance)?;
        Ok(Self {
            cov,
            mean,
            ridge,
            factor,
        })
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.cov.n()
    }
}

/// `tr(C_test C_j^-1) * tr(C_j C_test^-1)`.
pub fn trace_product(model: &CovarianceModel, test: &CovarianceModel) -> Result<f64> {
    if model.dim() != test.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: test.dim(),
        });
    }
    let forward = model.factor.trace_of_solve(&test.cov);
    let backward = test.factor.trace_of_solve(&model.cov);
    Ok(forward * backward)
}

/// Arithmetic-harmonic sphericity `log(tr(C_t C_j^-1) tr(C_j C_t^-1) / 2) - 2 log P`.
pub fn sphericity(model: &CovarianceModel, test: &CovarianceModel) -> Result<f64> {
    let p = model.dim() as f64;
    Ok(libm::log(trace_product(model, test)? / 2.0) - 2.0 * libm::log(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Vq,
    Cm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelPayload {
    Vq(VqCodebook),
    Cm(CovarianceModel),
}

impl ModelPayload {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelPayload::Vq(_) => ModelKind::Vq,
            ModelPayload::Cm(_) => ModelKind::Cm,
        }
    }
}

/// Classifier settings shared by enrollment and scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierConfig {
    Vq { bits: u32 },
    Cm { ridge: Ridge },
}

impl ClassifierConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierConfig::Vq { .. } => ModelKind::Vq,
            ClassifierConfig::Cm { .. } => ModelKind::Cm,
        }
    }

    /// Six-bit codebooks, the vector quantization setting.
    pub fn vq() -> Self {
        ClassifierConfig::Vq { bits: 6 }
    }

    pub fn cm() -> Self {
        ClassifierConfig::Cm {
            ridge: Ridge::default(),
        }
    }

    pub fn train(&self, features: &FeatureSequence, seed: u64) -> Result<ModelPayload> {
        Ok(match *self {
            ClassifierConfig::Vq { bits } => ModelPayload::Vq(train_vq_random(features, bits, seed)?),
            ClassifierConfig::Cm { ridge } => ModelPayload::Cm(train_cov(features, ridge)?),
        })
    }

    /// Prepares test features for scoring against models of this kind.
    pub fn probe(&self, features: FeatureSequence) -> Result<Probe> {
        Ok(match *self {
            ClassifierConfig::Vq { .. } => {
                if features.is_empty() {
                    return Err(Error::Empty("test sequence"));
                }
                Probe::Vq(features)
            }
            ClassifierConfig::Cm { ridge } => Probe::Cm(train_cov(&features, ridge)?),
        })
    }
}

/// Test-side data in the form a model kind scores against. For CM this is
/// the test utterance's own covariance, computed once per utterance.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Vq(FeatureSequence),
    Cm(CovarianceModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerModel {
    pub id: String,
    pub payload: ModelPayload,
    pub chain: TransformChain,
}

impl SpeakerModel {
    pub fn kind(&self) -> ModelKind {
        self.payload.kind()
    }

    /// Raw distance; lower means a closer match.
    pub fn score(&self, probe: &Probe) -> Result<f64> {
        match (&self.payload, probe) {
            (ModelPayload::Vq(cb), Probe::Vq(seq)) => vq_score(cb, seq),
            (ModelPayload::Cm(c), Probe::Cm(test)) => sphericity(c, test),
            _ => Err(Error::IncompatibleModels("model kind")),
        }
    }
}

/// Verification score of one claim; identical to the identification score.
pub fn verify_score(model: &SpeakerModel, probe: &Probe) -> Result<f64> {
    model.score(probe)
}

fn check_compatible(models: &[SpeakerModel]) -> Result<()> {
    let first = models.first().ok_or(Error::Empty("model set"))?;
    if models.iter().any(|m| m.kind() != first.kind()) {
        return Err(Error::IncompatibleModels("model kind"));
    }
    if models.iter().any(|m| m.chain != first.chain) {
        return Err(Error::IncompatibleModels("transform chain"));
    }
    Ok(())
}

/// Index of the smallest score, ties broken by the lexicographically smallest label.
/// NaN ranks last.
pub fn argmin_by_label(labels: &[&str], scores: &[f64]) -> Option<usize> {
    let key = |s: f64| if s.is_nan() { f64::INFINITY } else { s };
    (0..scores.len()).min_by(|&i, &j| {
        key(scores[i])
            .partial_cmp(&key(scores[j]))
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| labels[i].cmp(labels[j]))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub speaker: String,
    pub scores: Vec<f64>,
}

/// Closed-set identification: the model with the smallest distance wins.
pub fn identify(models: &[SpeakerModel], probe: &Probe) -> Result<Identification> {
    check_compatible(models)?;
    let scores = models.iter().map(|m| m.score(probe)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<&str> = models.iter().map(|m| m.id.as_str()).collect();
    let best = argmin_by_label(&labels, &scores).ok_or(Error::Empty("model set"))?;
    Ok(Identification {
        speaker: models[best].id.clone(),
        scores,
    })
}
