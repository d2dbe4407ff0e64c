//! Experiment configuration files (TOML).
//!
//! ```toml
//! manifest = "corpus/manifest.csv"   # relative to this file
//! output_dir = "results"
//! chains = ["LPCC", "CMS", "CMS+ACW+SIGMA"]
//! cohort_size = 5                    # 0 disables cohort normalization
//! master_seed = 1
//! decimal = "dot"                    # or "comma"
//! threads = 0                        # 0 uses every core
//!
//! [classifier]
//! kind = "vq"                        # "vq" or "cm"
//! bits = 6                           # vq only
//! order = 16                         # LPC order P (Q = P); default 16 for vq, 20 for cm
//! ridge = 1e-6                       # cm only
//! ridge_mode = "relative"            # "relative" (times tr(C)/Q) or "absolute"
//!
//! [[scenario]]
//! name = "M1M3"
//! train = "microphone=M1"
//! test = "microphone=M3"
//! ```
//!
//! Scenario filters that do not mention `role` default to `role=train` and
//! `role=test`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spkid_core::eval::{DecimalMark, Experiment, Scenario};
use spkid_core::frontend::FrontendConfig;
use spkid_core::models::{ClassifierConfig, Ridge, DEFAULT_RELATIVE_RIDGE};
use spkid_core::transforms::TransformChain;

use crate::error::{Error, Result};

pub const DEFAULT_COHORT_SIZE: usize = 5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    manifest: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    chains: Vec<String>,
    cohort_size: Option<usize>,
    master_seed: Option<u64>,
    decimal: Option<String>,
    threads: Option<usize>,
    classifier: RawClassifier,
    #[serde(default, rename = "scenario")]
    scenarios: Vec<RawScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawClassifier {
    pub kind: String,
    pub bits: Option<u32>,
    pub order: Option<usize>,
    pub ridge: Option<f64>,
    pub ridge_mode: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    train: String,
    test: String,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub cohort_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub frontend: FrontendConfig,
    pub experiment: Experiment,
    pub decimal: DecimalMark,
    pub threads: usize,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

/// Classifier settings and the matching front-end.
pub fn resolve_classifier(raw: &RawClassifier) -> Result<(ClassifierConfig, FrontendConfig)> {
    let kind = raw.kind.trim().to_ascii_lowercase();
    let (classifier, default_order) = match kind.as_str() {
        "vq" => {
            if raw.ridge.is_some() || raw.ridge_mode.is_some() {
                return Err(field_err("classifier.ridge", "only valid for kind = \"cm\""));
            }
            let bits = raw.bits.unwrap_or(6);
            if !(1..=16).contains(&bits) {
                return Err(field_err("classifier.bits", format!("{bits} outside 1..=16")));
            }
            (ClassifierConfig::Vq { bits }, FrontendConfig::vq().lpc_order)
        }
        "cm" => {
            if raw.bits.is_some() {
                return Err(field_err("classifier.bits", "only valid for kind = \"vq\""));
            }
            let mode = raw.ridge_mode.as_deref().unwrap_or("relative");
            let value = raw.ridge.unwrap_or(match mode {
                "absolute" => 0.0,
                _ => DEFAULT_RELATIVE_RIDGE,
            });
            if !(value.is_finite() && value >= 0.0) {
                return Err(field_err("classifier.ridge", format!("{value} must be finite and non-negative")));
            }
            let ridge = match mode {
                "relative" => Ridge::RelativeTrace(value),
                "absolute" => Ridge::Absolute(value),
                other => {
                    return Err(field_err(
                        "classifier.ridge_mode",
                        format!("`{other}`, expected \"relative\" or \"absolute\""),
                    ))
                }
            };
            (ClassifierConfig::Cm { ridge }, FrontendConfig::cm().lpc_order)
        }
        other => return Err(field_err("classifier.kind", format!("`{other}`, expected \"vq\" or \"cm\""))),
    };
    let order = raw.order.unwrap_or(default_order);
    if order != default_order {
        log::warn!("classifier.order = {order} differs from the {kind} default of {default_order}");
    }
    let frontend = FrontendConfig::with_order(order);
    frontend.validate().map_err(|e| field_err("classifier.order", e))?;
    Ok((classifier, frontend))
}

fn resolve_path(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Parses and validates configuration text. Relative paths in the file are
/// taken relative to `base`; override paths are used as given.
pub fn parse_config(text: &str, base: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

    let manifest = match (&overrides.manifest, raw.manifest) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve_path(base, p),
        (None, None) => return Err(field_err("manifest", "missing (set it in the file or pass --manifest)")),
    };
    let output_dir = match (&overrides.output_dir, raw.output_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve_path(base, p),
        (None, None) => resolve_path(base, PathBuf::from("results")),
    };

    if raw.chains.is_empty() {
        return Err(field_err("chains", "at least one chain is required"));
    }
    let chains = raw
        .chains
        .iter()
        .enumerate()
        .map(|(i, c)| TransformChain::parse(c).map_err(|e| field_err(&format!("chains[{i}]"), e)))
        .collect::<Result<Vec<_>>>()?;
    for (i, c) in chains.iter().enumerate() {
        if chains[..i].iter().any(|p| p.name() == c.name()) {
            return Err(field_err(&format!("chains[{i}]"), format!("duplicate chain `{}`", c.name())));
        }
    }

    if raw.scenarios.is_empty() {
        return Err(field_err("scenario", "at least one [[scenario]] table is required"));
    }
    let mut scenarios = Vec::with_capacity(raw.scenarios.len());
    for (i, s) in raw.scenarios.iter().enumerate() {
        let at = |f: &str| format!("scenario[{i}].{f}");
        if s.name.trim().is_empty() {
            return Err(field_err(&at("name"), "empty"));
        }
        if scenarios.iter().any(|p: &Scenario| p.name == s.name) {
            return Err(field_err(&at("name"), format!("duplicate scenario `{}`", s.name)));
        }
        let train = spkid_core::ConditionFilter::parse(&s.train).map_err(|e| field_err(&at("train"), e))?;
        let test = spkid_core::ConditionFilter::parse(&s.test).map_err(|e| field_err(&at("test"), e))?;
        scenarios.push(Scenario::new(s.name.clone(), train, test));
    }

    let (classifier, frontend) = resolve_classifier(&raw.classifier)?;
    let decimal = match raw.decimal.as_deref().unwrap_or("dot") {
        "dot" => DecimalMark::Dot,
        "comma" => DecimalMark::Comma,
        other => return Err(field_err("decimal", format!("`{other}`, expected \"dot\" or \"comma\""))),
    };

    Ok(ExperimentConfig {
        manifest,
        output_dir,
        frontend,
        experiment: Experiment {
            scenarios,
            chains,
            classifier,
            cohort_size: overrides.cohort_size.or(raw.cohort_size).unwrap_or(DEFAULT_COHORT_SIZE),
            master_seed: overrides.master_seed.or(raw.master_seed).unwrap_or(1),
        },
        decimal,
        threads: overrides.threads.or(raw.threads).unwrap_or(0),
    })
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = crate::manifest::base_dir(path);
    parse_config(&text, &base, overrides).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
