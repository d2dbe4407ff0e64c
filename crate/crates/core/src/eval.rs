//! Identification and verification experiments.
//!
//! A cell of a result table pairs one transform chain with one train/test
//! scenario: all speakers present in the training selection are enrolled,
//! and every test utterance is identified against the full model set and
//! claims every enrolled identity once for verification.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::condition::{ConditionFilter, ConditionKey, Role};
use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::frontend::Analysis;
use crate::models::{argmin_by_label, ClassifierConfig, ModelPayload, Probe, SpeakerModel};
use crate::seed;
use crate::transforms::TransformChain;

/// One verification trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScore {
    pub claimed: String,
    pub true_id: String,
    pub raw: f64,
    pub normalized: Option<f64>,
}

impl TrialScore {
    pub fn is_genuine(&self) -> bool {
        self.claimed == self.true_id
    }
}

/// Percentage of decisions whose prediction equals the truth.
pub fn identification_rate<P: AsRef<str>, T: AsRef<str>>(decisions: &[(P, T)]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::Empty("decision list"));
    }
    let correct = decisions
        .iter()
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    Ok(100.0 * correct as f64 / decisions.len() as f64)
}

/// The `size` models closest to the claimant, never including the claimant.
///
/// Closeness is each candidate's score against `reference`, the claimant's
/// enrollment data in probe form: its training features for VQ, its
/// covariance model for CM. Ties go to the smaller label.
pub fn select_cohort(
    models: &[SpeakerModel],
    claimant: &str,
    size: usize,
    reference: &Probe,
) -> Result<Vec<String>> {
    if !models.iter().any(|m| m.id == claimant) {
        return Err(Error::UnknownSpeaker(claimant.to_string()));
    }
    let others: Vec<&SpeakerModel> = models.iter().filter(|m| m.id != claimant).collect();
    if size > others.len() {
        return Err(Error::CohortTooLarge {
            size,
            available: others.len(),
        });
    }
    let mut ranked = others
        .iter()
        .map(|m| Ok((m.score(reference)?, m.id.as_str())))
        .collect::<Result<Vec<(f64, &str)>>>()?;
    ranked.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    Ok(ranked.into_iter().take(size).map(|(_, id)| id.to_string()).collect())
}

/// Subtractive cohort normalization: `raw - mean(cohort_scores)`.
pub fn normalize_score(raw: f64, cohort_scores: &[f64]) -> Result<f64> {
    if cohort_scores.is_empty() {
        return Err(Error::Empty("cohort scores"));
    }
    let mean = cohort_scores.iter().sum::<f64>() / cohort_scores.len() as f64;
    Ok(raw - mean)
}

/// Equal error rate in percent for distance-like scores (accept iff score <= threshold).
///
/// Thresholds sweep every distinct score. Along the sweep FAR - FRR is
/// non-decreasing; the EER is read where it reaches zero, interpolating
/// linearly between the two operating points that straddle the sign change.
pub fn compute_eer(client: &[f64], impostor: &[f64]) -> Result<f64> {
    if client.is_empty() {
        return Err(Error::Empty("client scores"));
    }
    if impostor.is_empty() {
        return Err(Error::Empty("impostor scores"));
    }
    if client.iter().chain(impostor).any(|s| s.is_nan()) {
        return Err(Error::NonFinite { index: 0 });
    }
    let mut client = client.to_vec();
    let mut impostor = impostor.to_vec();
    client.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = client.iter().chain(&impostor).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let nc = client.len() as f64;
    let ni = impostor.len() as f64;
    // operating point below every score: nobody accepted
    let (mut prev_far, mut prev_frr) = (0.0, 1.0);
    let (mut ic, mut ii) = (0usize, 0usize);
    for &theta in &thresholds {
        while ic < client.len() && client[ic] <= theta {
            ic += 1;
        }
        while ii < impostor.len() && impostor[ii] <= theta {
            ii += 1;
        }
        let far = ii as f64 / ni;
        let frr = (client.len() - ic) as f64 / nc;
        let diff = far - frr;
        if diff >= 0.0 {
            if diff == 0.0 {
                return Ok(100.0 * far);
            }
            let prev_diff = prev_far - prev_frr;
            let t = -prev_diff / (diff - prev_diff);
            return Ok(100.0 * (prev_far + t * (far - prev_far)));
        }
        prev_far = far;
        prev_frr = frr;
    }
    unreachable!("the largest threshold accepts every score")
}

/// Named train/test selection over condition keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub train: ConditionFilter,
    pub test: ConditionFilter,
}

impl Scenario {
    /// Training keys default to `role=train` and test keys to `role=test`.
    pub fn new(name: impl Into<String>, train: ConditionFilter, test: ConditionFilter) -> Self {
        Self {
            name: name.into(),
            train: train.with_default_role(Role::Train),
            test: test.with_default_role(Role::Test),
        }
    }

    pub fn parse(name: &str, train: &str, test: &str) -> Result<Self> {
        Ok(Self::new(
            name,
            ConditionFilter::parse(train)?,
            ConditionFilter::parse(test)?,
        ))
    }
}

/// An analysed utterance with the condition it was recorded under.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAnalysis {
    pub key: ConditionKey,
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenarios: Vec<Scenario>,
    pub chains: Vec<TransformChain>,
    pub classifier: ClassifierConfig,
    /// Zero disables cohort normalization.
    pub cohort_size: usize,
    pub master_seed: u64,
}

/// Seed of one (chain, scenario) cell, independent of evaluation order.
pub fn cell_seed(master: u64, chain: &str, scenario: &str) -> u64 {
    seed::derive_str(seed::derive_str(master, chain), scenario)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub identification_rate: f64,
    pub identification_trials: usize,
    pub eer_with_cohort: Option<f64>,
    pub eer_without_cohort: f64,
    pub trials: Vec<TrialScore>,
}

/// Enrolled speakers for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Enrollment {
    pub chain: TransformChain,
    pub models: Vec<SpeakerModel>,
    /// Cohort member indices into `models`, per model. Empty when disabled.
    pub cohorts: Vec<Vec<usize>>,
}

/// Fits the chain on the training utterances and trains one model per speaker.
pub fn enroll(
    training: &[&LabeledAnalysis],
    chain: &TransformChain,
    classifier: &ClassifierConfig,
    cohort_size: usize,
    cell_seed: u64,
) -> Result<Enrollment> {
    if training.is_empty() {
        return Err(Error::Empty("training selection"));
    }
    let mut chain = chain.clone();
    let analyses: Vec<&Analysis> = training.iter().map(|u| &u.analysis).collect();
    chain.fit(&analyses)?;

    let mut per_speaker: BTreeMap<&str, FeatureSequence> = BTreeMap::new();
    for utt in training {
        let features = chain.apply(&utt.analysis)?;
        match per_speaker.get_mut(utt.key.speaker.as_str()) {
            Some(pooled) => pooled.extend(&features)?,
            None => {
                per_speaker.insert(utt.key.speaker.as_str(), features);
            }
        }
    }

    let mut models = Vec::with_capacity(per_speaker.len());
    let mut references = Vec::with_capacity(per_speaker.len());
    for (speaker, features) in per_speaker {
        let payload = classifier
            .train(&features, seed::derive_str(cell_seed, speaker))
            .map_err(|e| Error::Scenario {
                scenario: String::new(),
                reason: format!("enrolling {speaker}: {e}"),
            })?;
        references.push(match &payload {
            ModelPayload::Vq(_) => Probe::Vq(features),
            ModelPayload::Cm(c) => Probe::Cm(c.clone()),
        });
        models.push(SpeakerModel {
            id: speaker.to_string(),
            payload,
            chain: chain.clone(),
        });
    }

    let cohorts = if cohort_size == 0 {
        Vec::new()
    } else {
        models
            .iter()
            .zip(&references)
            .map(|(m, reference)| {
                let labels = select_cohort(&models, &m.id, cohort_size, reference)?;
                Ok(labels
                    .iter()
                    .map(|l| models.iter().position(|x| &x.id == l).unwrap_or(0))
                    .collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?
    };
    Ok(Enrollment {
        chain,
        models,
        cohorts,
    })
}

/// Runs one (chain, scenario) cell over in-memory analyses.
pub fn run_cell(
    utterances: &[LabeledAnalysis],
    scenario: &Scenario,
    chain: &TransformChain,
    classifier: &ClassifierConfig,
    cohort_size: usize,
    cell_seed: u64,
) -> Result<CellOutcome> {
    let fail = |reason: String| Error::Scenario {
        scenario: scenario.name.clone(),
        reason,
    };
    let training: Vec<&LabeledAnalysis> = utterances
        .iter()
        .filter(|u| scenario.train.matches(&u.key))
        .collect();
    let tests: Vec<&LabeledAnalysis> = utterances
        .iter()
        .filter(|u| scenario.test.matches(&u.key))
        .collect();
    if training.is_empty() {
        return Err(fail("training filter selects no utterances".into()));
    }
    if tests.is_empty() {
        return Err(fail("test filter selects no utterances".into()));
    }
    let enrollment = enroll(&training, chain, classifier, cohort_size, cell_seed).map_err(|e| match e {
        Error::Scenario { reason, .. } => fail(reason),
        other => fail(other.to_string()),
    })?;
    let models = &enrollment.models;
    let labels: Vec<&str> = models.iter().map(|m| m.id.as_str()).collect();
    if let Some(missing) = tests.iter().find(|u| !labels.contains(&u.key.speaker.as_str())) {
        return Err(fail(format!(
            "test speaker {} has no training data",
            missing.key.speaker
        )));
    }

    let mut decisions = Vec::with_capacity(tests.len());
    let mut trials = Vec::with_capacity(tests.len() * models.len());
    for utt in &tests {
        let features = enrollment.chain.apply(&utt.analysis)?;
        let probe = classifier
            .probe(features)
            .map_err(|e| fail(format!("test utterance {}: {e}", utt.key)))?;
        let scores = models
            .iter()
            .map(|m| m.score(&probe))
            .collect::<Result<Vec<f64>>>()?;
        let best = argmin_by_label(&labels, &scores).ok_or(Error::Empty("model set"))?;
        decisions.push((labels[best], utt.key.speaker.as_str()));
        for (i, model) in models.iter().enumerate() {
            let normalized = match enrollment.cohorts.get(i) {
                Some(cohort) => {
                    let cohort_scores: Vec<f64> = cohort.iter().map(|&c| scores[c]).collect();
                    Some(normalize_score(scores[i], &cohort_scores)?)
                }
                None => None,
            };
            trials.push(TrialScore {
                claimed: model.id.clone(),
                true_id: utt.key.speaker.clone(),
                raw: scores[i],
                normalized,
            });
        }
    }

    let identification_rate = identification_rate(&decisions)?;
    let (client, impostor): (Vec<&TrialScore>, Vec<&TrialScore>) =
        trials.iter().partition(|t| t.is_genuine());
    let eer_of = |f: &dyn Fn(&TrialScore) -> Option<f64>| -> Result<Option<f64>> {
        let c: Option<Vec<f64>> = client.iter().map(|t| f(t)).collect();
        let i: Option<Vec<f64>> = impostor.iter().map(|t| f(t)).collect();
        match (c, i) {
            (Some(c), Some(i)) => compute_eer(&c, &i).map(Some),
            _ => Ok(None),
        }
    };
    let eer_without_cohort = if impostor.is_empty() {
        return Err(fail("verification needs at least two enrolled speakers".into()));
    } else {
        eer_of(&|t| Some(t.raw))?.unwrap_or(f64::NAN)
    };
    let eer_with_cohort = eer_of(&|t| t.normalized)?;
    Ok(CellOutcome {
        identification_rate,
        identification_trials: decisions.len(),
        eer_with_cohort,
        eer_without_cohort,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Rate(f64),
    Eer {
        with_cohort: Option<f64>,
        without_cohort: f64,
    },
    Failed(String),
}

impl Cell {
    pub fn is_failed(&self) -> bool {
        matches!(self, Cell::Failed(_))
    }
}

/// Rows are chain names, columns scenario names.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub title: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecimalMark {
    #[default]
    Dot,
    Comma,
}

impl ResultTable {
    pub fn new(title: impl Into<String>, rows: Vec<String>, cols: Vec<String>) -> Self {
        let n = rows.len() * cols.len();
        Self {
            title: title.into(),
            rows,
            cols,
            cells: alloc::vec![Cell::Failed("not run".into()); n],
        }
    }

    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        let n = self.cols.len();
        self.cells[row * n + col] = cell;
    }

    pub fn get(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.cols.len() + col]
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_failed()).count()
    }

    /// Human-readable aligned table.
    pub fn render_text(&self, mark: DecimalMark) -> String {
        let fmt = |v: f64, decimals: usize| {
            let s = format!("{v:.decimals$}");
            match mark {
                DecimalMark::Dot => s,
                DecimalMark::Comma => s.replace('.', ","),
            }
        };
        let cell_text = |c: &Cell| match c {
            Cell::Rate(r) => fmt(*r, 1),
            Cell::Eer {
                with_cohort,
                without_cohort,
            } => format!(
                "{} / {}",
                with_cohort.map_or_else(|| "-".to_string(), |v| fmt(v, 2)),
                fmt(*without_cohort, 2)
            ),
            Cell::Failed(_) => "failed".to_string(),
        };
        let header = "PARAMETERIZ.";
        let first_width = self
            .rows
            .iter()
            .map(|r| r.chars().count())
            .chain(core::iter::once(header.len()))
            .max()
            .unwrap_or(0);
        let texts: Vec<String> = self.cells.iter().map(cell_text).collect();
        let widths: Vec<usize> = (0..self.cols.len())
            .map(|j| {
                (0..self.rows.len())
                    .map(|i| texts[i * self.cols.len() + j].chars().count())
                    .chain(core::iter::once(self.cols[j].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();

        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = write!(out, "{:<first_width$}", header);
        for (col, w) in self.cols.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", col);
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let pad = first_width - row.chars().count() + row.len();
            let _ = write!(out, "{:<pad$}", row);
            for (j, w) in widths.iter().enumerate() {
                let _ = write!(out, "  {:>w$}", texts[i * self.cols.len() + j]);
            }
            out.push('\n');
        }
        out
    }

    /// Machine-readable CSV. EER tables get two columns per scenario.
    pub fn render_csv(&self) -> String {
        let eer = self.cells.iter().any(|c| matches!(c, Cell::Eer { .. }));
        let mut out = String::from("parameterization");
        for col in &self.cols {
            if eer {
                let _ = write!(out, ",{} cohort,{} raw", csv_field(col), csv_field(col));
            } else {
                let _ = write!(out, ",{}", csv_field(col));
            }
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&csv_field(row));
            for j in 0..self.cols.len() {
                match self.get(i, j) {
                    Cell::Rate(r) => {
                        let _ = write!(out, ",{r}");
                    }
                    Cell::Eer {
                        with_cohort,
                        without_cohort,
                    } => {
                        match with_cohort {
                            Some(v) => {
                                let _ = write!(out, ",{v}");
                            }
                            None => out.push(','),
                        }
                        let _ = write!(out, ",{without_cohort}");
                    }
                    Cell::Failed(_) => {
                        out.push_str(if eer { ",failed,failed" } else { ",failed" });
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub identification: ResultTable,
    pub verification: ResultTable,
}

impl ExperimentReport {
    pub fn failed_cells(&self) -> usize {
        self.identification.failed_cells()
    }
}

/// Fills both tables from per-cell outcomes laid out chain-major.
pub fn assemble(experiment: &Experiment, outcomes: Vec<Result<CellOutcome>>) -> ExperimentReport {
    let rows: Vec<String> = experiment.chains.iter().map(|c| c.name().to_string()).collect();
    let cols: Vec<String> = experiment.scenarios.iter().map(|s| s.name.clone()).collect();
    let kind = match experiment.classifier {
        ClassifierConfig::Vq { .. } => "VQ",
        ClassifierConfig::Cm { .. } => "CM",
    };
    let mut identification = ResultTable::new(
        format!("Identification rates (%), {kind}"),
        rows.clone(),
        cols.clone(),
    );
    let mut verification = ResultTable::new(
        format!("EER (%) (with cohorts = {} / without), {kind}", experiment.cohort_size),
        rows,
        cols,
    );
    let n = experiment.scenarios.len();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        let (i, j) = (k / n, k % n);
        match outcome {
            Ok(o) => {
                identification.set(i, j, Cell::Rate(o.identification_rate));
                verification.set(
                    i,
                    j,
                    Cell::Eer {
                        with_cohort: o.eer_with_cohort,
                        without_cohort: o.eer_without_cohort,
                    },
                );
            }
            Err(e) => {
                let reason = e.to_string();
                log::warn!("cell {} x {} failed: {reason}", experiment.chains[i], experiment.scenarios[j].name);
                identification.set(i, j, Cell::Failed(reason.clone()));
                verification.set(i, j, Cell::Failed(reason));
            }
        }
    }
    ExperimentReport {
        identification,
        verification,
    }
}

pub fn run_cell_of(experiment: &Experiment, utterances: &[LabeledAnalysis], index: usize) -> Result<CellOutcome> {
    let n = experiment.scenarios.len();
    let chain = &experiment.chains[index / n];
    let scenario = &experiment.scenarios[index % n];
    run_cell(
        utterances,
        scenario,
        chain,
        &experiment.classifier,
        experiment.cohort_size,
        cell_seed(experiment.master_seed, chain.name(), &scenario.name),
    )
}

/// Sequential reference driver; the `spkid` crate runs cells in parallel
/// through [`run_cell_of`] and [`assemble`] with identical results.
pub fn run_experiment(experiment: &Experiment, utterances: &[LabeledAnalysis]) -> ExperimentReport {
    let cells = experiment.chains.len() * experiment.scenarios.len();
    let outcomes = (0..cells)
        .map(|k| run_cell_of(experiment, utterances, k))
        .collect();
    assemble(experiment, outcomes)
}
