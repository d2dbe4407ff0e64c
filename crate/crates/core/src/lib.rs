//! Speaker recognition primitives built around LPC cepstral features.
//!
//! The crate is `no_std` and only needs an allocator. It covers the signal
//! chain from raw 8 kHz samples to LPCC vectors ([`frontend`]), the cepstral
//! parameterizations and their combinations ([`transforms`]), vector
//! quantization and covariance speaker models ([`models`]), identification
//! and verification scoring ([`eval`]), and a seeded synthetic speaker
//! simulator ([`synth`]) used to exercise all of the above without a real
//! corpus. File formats, WAV decoding and the command line live in the
//! `spkid` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod condition;
pub mod error;
pub mod eval;
pub mod features;
pub mod frontend;
pub mod linalg;
pub mod models;
pub mod poly;
pub mod seed;
pub mod synth;
pub mod transforms;

pub use condition::{ConditionFilter, ConditionKey, Role};
pub use error::{Error, Result};
pub use features::FeatureSequence;
pub use frontend::{Analysis, AudioClip, FrontendConfig};
pub use models::{ClassifierConfig, CovarianceModel, ModelKind, Probe, SpeakerModel, VqCodebook};
pub use transforms::{Step, TransformChain};

/// Sample rate every analysis runs at.
pub const SAMPLE_RATE_HZ: u32 = 8000;
