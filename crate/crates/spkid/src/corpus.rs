//! Deterministic synthetic corpora laid out like a multi-session,
//! multi-microphone, multi-language recording campaign.
//!
//! Every (speaker, session, language) cell holds one training utterance
//! (index 0) and `tests_per_cell` test utterances (indices 1..). The clean
//! signal of an utterance depends only on its speaker, session, language,
//! role and index; each microphone is the same clean signal through that
//! channel's FIR, so microphones differ by convolution alone.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spkid_core::synth::{apply_channel, channel_fir, population, synth_utterance_styled, SpeakingStyle, SynthSpeaker};
use spkid_core::{seed, AudioClip, ConditionKey, Role};

use crate::error::{Error, Result};
use crate::manifest::{write_manifest, UtteranceRecord};
use crate::wav::write_wav;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpusParams {
    pub speakers: usize,
    pub sessions: Vec<String>,
    pub microphones: Vec<String>,
    pub languages: Vec<String>,
    pub train_s: f64,
    pub test_s: f64,
    pub tests_per_cell: u32,
    pub master_seed: u64,
}

impl Default for SynthCorpusParams {
    fn default() -> Self {
        Self {
            speakers: 8,
            sessions: vec!["S1".into()],
            microphones: vec!["M1".into()],
            languages: vec!["c".into()],
            train_s: 60.0,
            test_s: 2.0,
            tests_per_cell: 5,
            master_seed: 1,
        }
    }
}

impl SynthCorpusParams {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, v: &[String]| {
            if v.is_empty() || v.iter().any(|s| s.trim().is_empty()) {
                Err(Error::Config(format!("{name}: need at least one non-empty label")))
            } else {
                Ok(())
            }
        };
        if self.speakers == 0 {
            return Err(Error::Config("speakers: must be at least 1".into()));
        }
        nonempty("sessions", &self.sessions)?;
        nonempty("microphones", &self.microphones)?;
        nonempty("languages", &self.languages)?;
        for mic in &self.microphones {
            channel_fir(mic).map_err(|e| Error::Config(format!("microphones: {e}")))?;
        }
        if !(self.train_s > 0.0 && self.test_s > 0.0) {
            return Err(Error::Config("durations must be positive".into()));
        }
        Ok(())
    }
}

/// One utterance to render.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedUtterance {
    pub key: ConditionKey,
    pub speaker: usize,
    pub duration_s: f64,
    /// Seed of the clean signal, shared by all microphones.
    pub seed: u64,
}

impl PlannedUtterance {
    pub fn file_name(&self) -> String {
        let k = &self.key;
        format!(
            "{}_{}_{}_{}_{}{}.wav",
            k.speaker, k.session, k.language, k.microphone, k.role, k.index
        )
    }
}

/// Utterance list in a fixed order: speaker, session, language, microphone, index.
pub fn plan(params: &SynthCorpusParams, speakers: &[SynthSpeaker]) -> Vec<PlannedUtterance> {
    let mut out = Vec::new();
    for (s, spk) in speakers.iter().enumerate() {
        for session in &params.sessions {
            for language in &params.languages {
                for mic in &params.microphones {
                    for index in 0..=params.tests_per_cell {
                        let (role, duration_s) = if index == 0 {
                            (Role::Train, params.train_s)
                        } else {
                            (Role::Test, params.test_s)
                        };
                        let utt_seed = seed::derive(
                            seed::derive_str(seed::derive_str(spk.seed, session), language),
                            u64::from(index),
                        );
                        out.push(PlannedUtterance {
                            key: ConditionKey {
                                speaker: spk.id.clone(),
                                session: session.clone(),
                                microphone: mic.clone(),
                                language: language.clone(),
                                role,
                                index,
                            },
                            speaker: s,
                            duration_s,
                            seed: utt_seed,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn speakers(params: &SynthCorpusParams) -> Vec<SynthSpeaker> {
    population(params.speakers, params.master_seed)
}

/// Renders one planned utterance.
pub fn render(utt: &PlannedUtterance, speakers: &[SynthSpeaker]) -> Result<AudioClip> {
    let spk = speakers[utt.speaker].for_session(&utt.key.session);
    let style = SpeakingStyle::for_language(&utt.key.language, spk.phone_count());
    let clean = synth_utterance_styled(&spk, utt.duration_s, utt.seed, &style);
    Ok(apply_channel(&clean, &utt.key.microphone)?)
}

/// Renders the whole corpus in memory, in plan order.
pub fn render_corpus(params: &SynthCorpusParams) -> Result<Vec<(ConditionKey, AudioClip)>> {
    params.validate()?;
    let speakers = speakers(params);
    plan(params, &speakers)
        .into_par_iter()
        .map(|u| Ok((u.key.clone(), render(&u, &speakers)?)))
        .collect()
}

/// Writes `audio/*.wav` and `manifest.csv` under `out_dir`; returns the manifest path.
pub fn build_synth_corpus(params: &SynthCorpusParams, out_dir: &Path) -> Result<(PathBuf, Vec<UtteranceRecord>)> {
    params.validate()?;
    let audio_dir = out_dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;
    let speakers = speakers(params);
    let planned = plan(params, &speakers);
    let records = planned
        .par_iter()
        .map(|u| {
            let clip = render(u, &speakers)?;
            let rel = PathBuf::from("audio").join(u.file_name());
            write_wav(&out_dir.join(&rel), &clip)?;
            Ok(UtteranceRecord {
                key: u.key.clone(),
                path: rel,
                duration_s: clip.duration_s(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = out_dir.join("manifest.csv");
    write_manifest(&manifest, &records)?;
    Ok((manifest, records))
}
