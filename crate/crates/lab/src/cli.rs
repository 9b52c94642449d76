//! Library side of the `secagg-lab` commands. The binary only parses flags
//! and maps results to exit codes.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::cost::{read_csv, write_csv, CostReport, CsvRow};
use crate::error::LabResult;
use crate::experiment::ExperimentSpec;
use crate::harness::sweep;
use crate::report::{render_report, summarize, write_plot_data};
use crate::transcript::RoundTranscript;
use crate::verify::{verify_transcript, Violation};

#[derive(Debug, Default)]
pub struct RunSummary {
    pub rounds: usize,
    pub csv: PathBuf,
    pub transcripts: Vec<PathBuf>,
    /// Rounds whose recovery threshold was not met.
    pub recovery_failures: Vec<String>,
    /// Rounds that aborted on a protocol or transport error.
    pub errors: Vec<String>,
    pub allow_recovery_failures: bool,
}

impl RunSummary {
    pub fn success(&self) -> bool {
        self.errors.is_empty() && (self.allow_recovery_failures || self.recovery_failures.is_empty())
    }
}

/// Loads a spec file and applies the seed and output overrides.
pub fn load_spec(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> LabResult<ExperimentSpec> {
    let mut spec = ExperimentSpec::parse(&std::fs::read_to_string(path)?)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(o) = out {
        spec.out = o;
    }
    Ok(spec)
}

pub fn cmd_run(spec: &ExperimentSpec) -> LabResult<RunSummary> {
    let cells = spec.cells()?;
    std::fs::create_dir_all(&spec.out)?;
    let mut summary = RunSummary { allow_recovery_failures: spec.allow_recovery_failures, ..Default::default() };
    let mut reports: Vec<CostReport> = Vec::new();
    let mut meta = String::new();
    for entry in sweep(&cells) {
        let s = &cells[entry.cell].spec;
        let label = format!(
            "{}_N{}_p{}_{}_r{}",
            s.protocol.name().replace('+', "plus"),
            s.config.users,
            crate::cost::fmt_rate(s.plan.rate),
            s.pipeline.name(),
            entry.repeat
        );
        summary.rounds += 1;
        match entry.result {
            Ok(r) => {
                if let Err(e) = &r.aggregate {
                    summary.recovery_failures.push(format!("{label}: {e}"));
                }
                if spec.transcripts {
                    let path = spec.out.join("transcripts").join(format!("{label}.lsat"));
                    r.transcript.write_to(&path)?;
                    summary.transcripts.push(path);
                }
                meta.push_str(&r.cost.meta_line());
                meta.push('\n');
                reports.push(r.cost);
            }
            Err(e) => summary.errors.push(format!("{label}: {e}")),
        }
    }
    summary.csv = spec.out.join("costs.csv");
    write_csv(BufWriter::new(File::create(&summary.csv)?), &reports)?;
    std::fs::write(spec.out.join("metadata.txt"), meta)?;
    Ok(summary)
}

pub fn load_rows(paths: &[PathBuf]) -> LabResult<Vec<CsvRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_csv(File::open(p)?)?);
    }
    Ok(rows)
}

/// Renders the comparison report and writes plot data into `plot_dir`.
pub fn cmd_report(paths: &[PathBuf], plot_dir: Option<&Path>) -> LabResult<String> {
    let summary = summarize(&load_rows(paths)?)?;
    if let Some(dir) = plot_dir {
        write_plot_data(&summary, dir)?;
    }
    Ok(render_report(&summary, true))
}

pub fn cmd_verify(path: &Path) -> LabResult<Vec<Violation>> {
    Ok(verify_transcript(&RoundTranscript::read_from(path)?))
}
