use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spkid::config::{load_config, resolve_classifier, Overrides, RawClassifier};
use spkid::container::{read_model_set, write_features, write_model_set, FeatureFile, ModelSet};
use spkid::corpus::{build_synth_corpus, SynthCorpusParams};
use spkid::experiment::{analyze_records, run_experiment_config};
use spkid::manifest::{base_dir, load_manifest};
use spkid::wav::read_wav;
use spkid::{Error, Result};
use spkid_core::eval::{enroll, normalize_score};
use spkid_core::frontend::{extract, FrontendConfig};
use spkid_core::models::{identify, verify_score, Probe};
use spkid_core::transforms::TransformChain;
use spkid_core::{ConditionFilter, Role};

/// Speaker identification and verification with LPC cepstral features.
///
/// Log verbosity follows RUST_LOG (default: warn).
#[derive(Parser)]
#[command(name = "spkid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Vq,
    Cm,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Vq => "vq",
            Kind::Cm => "cm",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (WAV files plus manifest.csv).
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        speakers: usize,
        #[arg(long, value_delimiter = ',', default_value = "S1")]
        sessions: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "M1")]
        microphones: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "c")]
        languages: Vec<String>,
        #[arg(long, default_value_t = 60.0)]
        train_seconds: f64,
        #[arg(long, default_value_t = 2.0)]
        test_seconds: f64,
        /// Test utterances per speaker, session, language and microphone.
        #[arg(long, default_value_t = 5)]
        tests: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Extract LPC cepstra from one WAV file into a feature file.
    Extract {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Front-end preset: P = Q = 16 for vq, 20 for cm.
        #[arg(long, value_enum, default_value = "vq")]
        preset: Kind,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Enroll every speaker selected from a manifest into a model-set file.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Condition filter, e.g. "session=S1, microphone=M1".
        #[arg(long, default_value = "")]
        filter: String,
        #[arg(long, default_value = "LPCC")]
        chain: String,
        #[arg(long, value_enum, default_value = "vq")]
        classifier: Kind,
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        ridge: Option<f64>,
        /// Cohort size for verification normalization; 0 disables it.
        #[arg(long, default_value_t = spkid::config::DEFAULT_COHORT_SIZE)]
        cohort: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Closed-set identification of WAV files against a model set.
    Identify {
        #[arg(long)]
        models: PathBuf,
        #[arg(required = true)]
        audio: Vec<PathBuf>,
        /// Also print every model's score.
        #[arg(long)]
        scores: bool,
    },
    /// Score identity claims; prints raw and cohort-normalized distances.
    Verify {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        claim: String,
        #[arg(required = true)]
        audio: Vec<PathBuf>,
        /// Accept when the (normalized, if available) score is at most this.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run a configured experiment and write CSV and text tables.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        cohort_size: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            out,
            speakers,
            sessions,
            microphones,
            languages,
            train_seconds,
            test_seconds,
            tests,
            seed,
        } => {
            let params = SynthCorpusParams {
                speakers,
                sessions,
                microphones,
                languages,
                train_s: train_seconds,
                test_s: test_seconds,
                tests_per_cell: tests,
                master_seed: seed,
            };
            let (manifest, records) = build_synth_corpus(&params, &out)?;
            let train = records.iter().filter(|r| r.key.role == Role::Train).count();
            println!("manifest: {}", manifest.display());
            println!("utterances: {} ({train} train, {} test)", records.len(), records.len() - train);
            Ok(())
        }
        Command::Extract {
            input,
            output,
            preset,
            order,
        } => {
            let mut cfg = match preset {
                Kind::Vq => FrontendConfig::vq(),
                Kind::Cm => FrontendConfig::cm(),
            };
            if let Some(p) = order {
                cfg = FrontendConfig::with_order(p);
                cfg.validate().map_err(|e| Error::Config(format!("--order: {e}")))?;
            }
            let analysis = extract(&read_wav(&input)?, &cfg).map_err(|e| Error::Audio {
                path: input.clone(),
                reason: e.to_string(),
            })?;
            let s = analysis.stats;
            write_features(
                &output,
                &FeatureFile {
                    features: analysis.cepstra.clone(),
                    stats: s,
                },
            )?;
            println!(
                "T={} Q={} dropped={} (gated {}, degenerate {})",
                analysis.cepstra.len(),
                analysis.cepstra.dim(),
                s.gated + s.degenerate,
                s.gated,
                s.degenerate
            );
            Ok(())
        }
        Command::Train {
            manifest,
            filter,
            chain,
            classifier,
            bits,
            order,
            ridge,
            cohort,
            seed,
            output,
        } => {
            let filter = ConditionFilter::parse(&filter)
                .map_err(|e| Error::Config(format!("--filter: {e}")))?
                .with_default_role(Role::Train);
            let chain = TransformChain::parse(&chain).map_err(|e| Error::Config(format!("--chain: {e}")))?;
            let (classifier, frontend) = resolve_classifier(&RawClassifier {
                kind: classifier.name().into(),
                bits,
                order,
                ridge,
                ridge_mode: None,
            })?;
            let records: Vec<_> = load_manifest(&manifest, true)?
                .into_iter()
                .filter(|r| filter.matches(&r.key))
                .collect();
            if records.is_empty() {
                return Err(Error::Config(format!("--filter `{}` selects nothing", filter.source())));
            }
            let utterances = analyze_records(&records, &base_dir(&manifest), &frontend, chain.uses_acw())?;
            let refs: Vec<_> = utterances.iter().collect();
            let enrollment = enroll(&refs, &chain, &classifier, cohort, seed)?;
            let set = ModelSet {
                frontend,
                chain: enrollment.chain,
                classifier,
                cohort_size: cohort,
                models: enrollment.models,
                cohorts: enrollment.cohorts,
            };
            write_model_set(&output, &set)?;
            println!("enrolled {} speakers from {} utterances", set.models.len(), records.len());
            Ok(())
        }
        Command::Identify { models, audio, scores } => {
            let set = read_model_set(&models)?;
            for path in &audio {
                let out = identify(&set.models, &probe(&set, path)?)?;
                if scores {
                    let list: Vec<String> = set
                        .models
                        .iter()
                        .zip(&out.scores)
                        .map(|(m, s)| format!("{}={s}", m.id))
                        .collect();
                    println!("{}\t{}\t{}", path.display(), out.speaker, list.join(" "));
                } else {
                    println!("{}\t{}", path.display(), out.speaker);
                }
            }
            Ok(())
        }
        Command::Verify {
            models,
            claim,
            audio,
            threshold,
        } => {
            let set = read_model_set(&models)?;
            let idx = set
                .models
                .iter()
                .position(|m| m.id == claim)
                .ok_or_else(|| Error::Core(spkid_core::Error::UnknownSpeaker(claim.clone())))?;
            for path in &audio {
                let probe = probe(&set, path)?;
                let raw = verify_score(&set.models[idx], &probe)?;
                let normalized = match set.cohorts.get(idx) {
                    Some(cohort) if !cohort.is_empty() => {
                        let scores = cohort
                            .iter()
                            .map(|&c| set.models[c].score(&probe))
                            .collect::<spkid_core::Result<Vec<f64>>>()?;
                        Some(normalize_score(raw, &scores)?)
                    }
                    _ => None,
                };
                let shown = normalized.map_or_else(|| "-".to_string(), |v| v.to_string());
                let mut line = format!("{}\t{claim}\traw={raw}\tnormalized={shown}", path.display());
                if let Some(t) = threshold {
                    let decision = if normalized.unwrap_or(raw) <= t { "accept" } else { "reject" };
                    line.push('\t');
                    line.push_str(decision);
                }
                println!("{line}");
            }
            Ok(())
        }
        Command::Experiment {
            config,
            manifest,
            output_dir,
            seed,
            threads,
            cohort_size,
        } => {
            let overrides = Overrides {
                manifest,
                output_dir,
                master_seed: seed,
                threads,
                cohort_size,
            };
            let config = load_config(&config, &overrides)?;
            let result = run_experiment_config(&config);
            let report = match &result {
                Ok((report, _)) => Some(report),
                Err(_) => None,
            };
            if let Some(report) = report {
                print!("{}\n{}", report.identification.render_text(config.decimal), report.verification.render_text(config.decimal));
                println!("results written to {}", config.output_dir.display());
            }
            result.map(|_| ())
        }
    }
}

/// Test-side representation of one file under a model set's configuration.
fn probe(set: &ModelSet, path: &Path) -> Result<Probe> {
    let analysis = extract(&read_wav(path)?, &set.frontend).map_err(|e| Error::Audio {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let features = set.chain.apply(&analysis)?;
    set.classifier.probe(features).map_err(|e| Error::Audio {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
