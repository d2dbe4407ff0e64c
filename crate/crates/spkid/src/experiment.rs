//! Batch experiments over a manifest: parallel extraction, parallel cells,
//! ordered table assembly.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spkid_core::eval::{assemble, run_cell_of, DecimalMark, Experiment, ExperimentReport, LabeledAnalysis};
use spkid_core::frontend::{extract, FrontendConfig};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::manifest::{base_dir, load_manifest, UtteranceRecord};
use crate::wav::read_wav;

/// Decodes and analyses manifest records in parallel, keeping manifest order.
pub fn analyze_records(
    records: &[UtteranceRecord],
    base: &Path,
    frontend: &FrontendConfig,
    with_acw: bool,
) -> Result<Vec<LabeledAnalysis>> {
    records
        .par_iter()
        .map(|r| {
            let path = r.resolved_path(base);
            let clip = read_wav(&path)?;
            let mut analysis = extract(&clip, frontend).map_err(|e| Error::Audio {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            if with_acw {
                analysis = analysis.with_acw()?;
            }
            Ok(LabeledAnalysis {
                key: r.key.clone(),
                analysis,
            })
        })
        .collect()
}

/// Runs every cell in parallel and assembles the tables in chain-major order.
pub fn run_cells(experiment: &Experiment, utterances: &[LabeledAnalysis]) -> ExperimentReport {
    let cells = experiment.chains.len() * experiment.scenarios.len();
    let outcomes = (0..cells)
        .into_par_iter()
        .map(|k| run_cell_of(experiment, utterances, k))
        .collect();
    assemble(experiment, outcomes)
}

/// Result files of one report, named inside `dir`.
pub fn render_outputs(report: &ExperimentReport, dir: &Path, mark: DecimalMark) -> Vec<(PathBuf, String)> {
    vec![
        (dir.join("identification.csv"), report.identification.render_csv()),
        (dir.join("verification.csv"), report.verification.render_csv()),
        (dir.join("identification.txt"), report.identification.render_text(mark)),
        (dir.join("verification.txt"), report.verification.render_text(mark)),
    ]
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    Ok(pool.install(f))
}

/// Full experiment: nothing is written unless every input loads and every
/// scenario selects data. Returns the report and the files written; when
/// some cells failed the tables are still written and
/// [`Error::PartialFailure`] is returned afterwards.
pub fn run_experiment_config(config: &ExperimentConfig) -> Result<(ExperimentReport, Vec<PathBuf>)> {
    let records = load_manifest(&config.manifest, true)?;
    let exp = &config.experiment;
    for s in &exp.scenarios {
        for (part, filter) in [("train", &s.train), ("test", &s.test)] {
            if !records.iter().any(|r| filter.matches(&r.key)) {
                return Err(Error::Config(format!(
                    "scenario {}: {part} filter `{}` selects nothing in {}",
                    s.name,
                    filter.source(),
                    config.manifest.display()
                )));
            }
        }
    }
    let used: Vec<UtteranceRecord> = records
        .into_iter()
        .filter(|r| exp.scenarios.iter().any(|s| s.train.matches(&r.key) || s.test.matches(&r.key)))
        .collect();
    let with_acw = exp.chains.iter().any(|c| c.uses_acw());
    let base = base_dir(&config.manifest);

    let report = with_threads(config.threads, || -> Result<ExperimentReport> {
        log::info!("analysing {} utterances", used.len());
        let utterances = analyze_records(&used, &base, &config.frontend, with_acw)?;
        log::info!("running {} cells", exp.chains.len() * exp.scenarios.len());
        Ok(run_cells(exp, &utterances))
    })??;

    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let mut written = Vec::new();
    for (path, text) in render_outputs(&report, &config.output_dir, config.decimal) {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let failed = report.failed_cells();
    if failed > 0 {
        return Err(Error::PartialFailure {
            failed,
            total: exp.chains.len() * exp.scenarios.len(),
        });
    }
    Ok((report, written))
}
