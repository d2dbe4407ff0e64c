//! Versioned little-endian binary containers.
//!
//! Feature file (`.spkf`):
//!
//! ```text
//! magic   "SPKFEAT\0"
//! version u32 = 1
//! dim u32, first_coeff u32, rows u64
//! frames u64, gated u64, degenerate u64, acw_dropped u64
//! rows * dim f64
//! ```
//!
//! Model-set file (`.spkm`):
//!
//! ```text
//! magic   "SPKMODL\0"
//! version u32 = 1
//! frontend: preemphasis f64, frame_len u32, frame_shift u32,
//!           lpc_order u32, cepstrum_order u32, energy_floor_db f64
//! chain:    name str, steps u32, then per step a tag u8 and its parameters
//! classifier tag u8 (0 = VQ: bits u32; 1 = CM: ridge tag u8 + f64)
//! cohort_size u32
//! models u32, then per model: id str, payload, cohort u32 + indices u32
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8. Reading validates every
//! structure through the same constructors used in memory.

use std::path::Path;

use spkid_core::frontend::{ExtractStats, FrontendConfig};
use spkid_core::linalg::Matrix;
use spkid_core::models::{ClassifierConfig, CovarianceModel, ModelPayload, Ridge, SpeakerModel, VqCodebook};
use spkid_core::transforms::{PostfilterParams, SigmaWeights, Step, TransformChain};
use spkid_core::FeatureSequence;

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"SPKFEAT\0";
pub const MODEL_MAGIC: &[u8; 8] = b"SPKMODL\0";
pub const VERSION: u32 = 1;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("length fits in u32"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        v.iter().for_each(|x| self.f64(*x));
    }
    fn opt_f64(&mut self, v: Option<f64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.f64(x);
            }
            None => self.u8(0),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

#[derive(Debug)]
struct Malformed(String);

type R<T> = std::result::Result<T, Malformed>;

fn bad<T>(msg: impl Into<String>) -> R<T> {
    Err(Malformed(msg.into()))
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> R<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => bad(format!("truncated at byte {}", self.pos)),
        }
    }
    fn u8(&mut self) -> R<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> R<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> R<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> R<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self) -> R<usize> {
        Ok(self.u32()? as usize)
    }
    fn usize64(&mut self) -> R<usize> {
        usize::try_from(self.u64()?).or_else(|_| bad("count overflows usize"))
    }
    fn str(&mut self) -> R<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).or_else(|_| bad("invalid UTF-8 string"))
    }
    fn f64s(&mut self, n: usize) -> R<Vec<f64>> {
        // bound the allocation by what is actually left
        if n.saturating_mul(8) > self.bytes.len() - self.pos {
            return bad(format!("truncated at byte {}", self.pos));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn opt_f64(&mut self) -> R<Option<f64>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.f64()?)),
            t => bad(format!("invalid option tag {t}")),
        }
    }
    fn header(&mut self, magic: &[u8; 8]) -> R<()> {
        if self.take(8)? != magic {
            return bad("wrong magic number");
        }
        match self.u32()? {
            VERSION => Ok(()),
            v => bad(format!("unsupported version {v}")),
        }
    }
    fn finish(&self) -> R<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            bad(format!("{} trailing bytes", self.bytes.len() - self.pos))
        }
    }
}

fn core<T>(r: spkid_core::Result<T>) -> R<T> {
    r.map_err(|e| Malformed(e.to_string()))
}

fn format_err(path: &Path, m: Malformed) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: m.0,
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Extracted features plus the frame accounting that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub features: FeatureSequence,
    pub stats: ExtractStats,
}

pub fn encode_features(file: &FeatureFile) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(FEATURE_MAGIC);
    w.u32(VERSION);
    let f = &file.features;
    w.len(f.dim());
    w.len(f.first_coeff());
    w.u64(f.len() as u64);
    let s = &file.stats;
    for v in [s.frames, s.gated, s.degenerate, s.acw_dropped] {
        w.u64(v as u64);
    }
    w.f64s(f.as_flat());
    w.0
}

fn decode_features_inner(bytes: &[u8]) -> R<FeatureFile> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(FEATURE_MAGIC)?;
    let dim = r.len()?;
    let first = r.len()?;
    let rows = r.usize64()?;
    let stats = ExtractStats {
        frames: r.usize64()?,
        gated: r.usize64()?,
        degenerate: r.usize64()?,
        acw_dropped: r.usize64()?,
    };
    let data = r.f64s(rows.checked_mul(dim).ok_or(Malformed("size overflow".into()))?)?;
    r.finish()?;
    Ok(FeatureFile {
        features: core(FeatureSequence::from_flat(dim, first, data))?,
        stats,
    })
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureFile> {
    decode_features_inner(bytes).map_err(|m| format_err(Path::new("<memory>"), m))
}

pub fn write_features(path: &Path, file: &FeatureFile) -> Result<()> {
    std::fs::write(path, encode_features(file)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureFile> {
    decode_features_inner(&read_file(path)?).map_err(|m| format_err(path, m))
}

/// Everything needed to score new audio against enrolled speakers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub frontend: FrontendConfig,
    /// Fitted chain shared by all models.
    pub chain: TransformChain,
    pub classifier: ClassifierConfig,
    pub cohort_size: usize,
    pub models: Vec<SpeakerModel>,
    /// Cohort member indices per model; empty when normalization is off.
    pub cohorts: Vec<Vec<usize>>,
}

fn put_chain(w: &mut Writer, chain: &TransformChain) {
    w.str(chain.name());
    w.len(chain.steps().len());
    for step in chain.steps() {
        match step {
            Step::DropLow2 => w.u8(0),
            Step::Cms => w.u8(1),
            Step::Acw => w.u8(2),
            Step::LinearWeight => w.u8(3),
            Step::Bandpass { lifter_len, height } => {
                w.u8(4);
                w.opt_f64(lifter_len.map(|l| l as f64));
                w.opt_f64(*height);
            }
            Step::Sigma(weights) => {
                w.u8(5);
                match weights {
                    Some(s) => {
                        w.u8(1);
                        w.len(s.weights().len());
                        w.f64s(s.weights());
                    }
                    None => w.u8(0),
                }
            }
            Step::Postfilter(p) => {
                w.u8(6);
                w.f64(p.alpha());
                w.f64(p.beta());
            }
        }
    }
}

fn get_chain(r: &mut Reader) -> R<TransformChain> {
    let name = r.str()?;
    let n = r.len()?;
    let mut steps = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        steps.push(match r.u8()? {
            0 => Step::DropLow2,
            1 => Step::Cms,
            2 => Step::Acw,
            3 => Step::LinearWeight,
            4 => {
                let lifter_len = match r.opt_f64()? {
                    Some(l) if l >= 1.0 && l.fract() == 0.0 => Some(l as usize),
                    Some(l) => return bad(format!("invalid lifter length {l}")),
                    None => None,
                };
                Step::Bandpass {
                    lifter_len,
                    height: r.opt_f64()?,
                }
            }
            5 => match r.u8()? {
                0 => Step::Sigma(None),
                1 => {
                    let len = r.len()?;
                    Step::Sigma(Some(core(SigmaWeights::from_weights(r.f64s(len)?))?))
                }
                t => return bad(format!("invalid sigma tag {t}")),
            },
            6 => {
                let alpha = r.f64()?;
                let beta = r.f64()?;
                Step::Postfilter(core(PostfilterParams::new(alpha, beta))?)
            }
            t => return bad(format!("unknown step tag {t}")),
        });
    }
    core(TransformChain::new(name, steps))
}

fn put_payload(w: &mut Writer, payload: &ModelPayload) {
    match payload {
        ModelPayload::Vq(cb) => {
            w.u8(0);
            w.u32(cb.bits());
            w.u64(cb.seed());
            let c = cb.codewords();
            w.len(c.dim());
            w.len(c.first_coeff());
            w.f64s(c.as_flat());
        }
        ModelPayload::Cm(m) => {
            w.u8(1);
            w.len(m.dim());
            w.f64s(m.cov().as_slice());
            w.f64s(m.mean());
            w.f64(m.ridge());
        }
    }
}

fn get_payload(r: &mut Reader) -> R<ModelPayload> {
    match r.u8()? {
        0 => {
            let bits = r.u32()?;
            if bits >= 32 {
                return bad(format!("codebook of 2^{bits} entries"));
            }
            let seed = r.u64()?;
            let dim = r.len()?;
            let first = r.len()?;
            let data = r.f64s((1usize << bits).saturating_mul(dim))?;
            let codewords = core(FeatureSequence::from_flat(dim, first, data))?;
            Ok(ModelPayload::Vq(core(VqCodebook::from_parts(codewords, bits, seed))?))
        }
        1 => {
            let q = r.len()?;
            let cov = r.f64s(q.saturating_mul(q))?;
            let mean = r.f64s(q)?;
            let ridge = r.f64()?;
            let cov = Matrix::from_row_major(q, cov).ok_or(Malformed("covariance shape".into()))?;
            Ok(ModelPayload::Cm(core(CovarianceModel::from_parts(cov, mean, ridge))?))
        }
        t => bad(format!("unknown model tag {t}")),
    }
}

pub fn encode_model_set(set: &ModelSet) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u32(VERSION);
    let f = &set.frontend;
    w.f64(f.preemphasis);
    w.len(f.frame_len);
    w.len(f.frame_shift);
    w.len(f.lpc_order);
    w.len(f.cepstrum_order);
    w.f64(f.energy_floor_db);
    put_chain(&mut w, &set.chain);
    match set.classifier {
        ClassifierConfig::Vq { bits } => {
            w.u8(0);
            w.u32(bits);
        }
        ClassifierConfig::Cm { ridge } => {
            w.u8(1);
            match ridge {
                Ridge::Absolute(v) => {
                    w.u8(0);
                    w.f64(v);
                }
                Ridge::RelativeTrace(v) => {
                    w.u8(1);
                    w.f64(v);
                }
            }
        }
    }
    w.len(set.cohort_size);
    w.len(set.models.len());
    for (i, m) in set.models.iter().enumerate() {
        w.str(&m.id);
        put_payload(&mut w, &m.payload);
        let cohort = set.cohorts.get(i).map(Vec::as_slice).unwrap_or(&[]);
        w.len(cohort.len());
        cohort.iter().for_each(|&c| w.len(c));
    }
    w.0
}

fn decode_model_set_inner(bytes: &[u8]) -> R<ModelSet> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(MODEL_MAGIC)?;
    let frontend = FrontendConfig {
        preemphasis: r.f64()?,
        frame_len: r.len()?,
        frame_shift: r.len()?,
        lpc_order: r.len()?,
        cepstrum_order: r.len()?,
        energy_floor_db: r.f64()?,
    };
    core(frontend.validate())?;
    let chain = get_chain(&mut r)?;
    let classifier = match r.u8()? {
        0 => ClassifierConfig::Vq { bits: r.u32()? },
        1 => ClassifierConfig::Cm {
            ridge: match r.u8()? {
                0 => Ridge::Absolute(r.f64()?),
                1 => Ridge::RelativeTrace(r.f64()?),
                t => return bad(format!("unknown ridge tag {t}")),
            },
        },
        t => return bad(format!("unknown classifier tag {t}")),
    };
    let cohort_size = r.len()?;
    let n = r.len()?;
    let mut models = Vec::with_capacity(n.min(4096));
    let mut cohorts = Vec::with_capacity(n.min(4096));
    for _ in 0..n {
        let id = r.str()?;
        let payload = get_payload(&mut r)?;
        if payload.kind() != classifier.kind() {
            return bad(format!("model {id} does not match the classifier kind"));
        }
        let len = r.len()?;
        let cohort = (0..len).map(|_| r.len()).collect::<R<Vec<usize>>>()?;
        models.push(SpeakerModel {
            id,
            payload,
            chain: chain.clone(),
        });
        cohorts.push(cohort);
    }
    r.finish()?;
    if cohorts.iter().flatten().any(|&c| c >= n) {
        return bad("cohort index out of range");
    }
    if cohorts.iter().all(Vec::is_empty) {
        cohorts.clear();
    }
    Ok(ModelSet {
        frontend,
        chain,
        classifier,
        cohort_size,
        models,
        cohorts,
    })
}

pub fn decode_model_set(bytes: &[u8]) -> Result<ModelSet> {
    decode_model_set_inner(bytes).map_err(|m| format_err(Path::new("<memory>"), m))
}

pub fn write_model_set(path: &Path, set: &ModelSet) -> Result<()> {
    std::fs::write(path, encode_model_set(set)).map_err(|e| Error::io(path, e))
}

pub fn read_model_set(path: &Path) -> Result<ModelSet> {
    decode_model_set_inner(&read_file(path)?).map_err(|m| format_err(path, m))
}
