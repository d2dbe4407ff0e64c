//! File formats, synthetic corpora and batch experiments on top of
//! [`spkid_core`].

pub mod config;
pub mod container;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod wav;

pub use error::{Error, Result};
