//! Runtime log CSV: one row per solver run, the interchange format between
//! collection and analysis. Externally collected logs (from other solvers)
//! can be analyzed as long as they follow this schema:
//!
//! ```text
//! run_id,seed,status,flips,seconds
//! 0,1,solved,15234,
//! 1,2,cutoff,10000000,
//! ```
//!
//! `status` is `solved` or `cutoff`. The `seconds` field is empty when the
//! run was collected in flip-count mode — wall-clock times are not
//! reproducible, and leaving them out keeps flip-mode logs byte-identical
//! across reruns.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::rtd::{Rtd, RtdError, Unit};
use crate::sls::{RunOutcome, RunStatus};

pub const RUN_LOG_HEADER: &str = "run_id,seed,status,flips,seconds";

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("missing header line {RUN_LOG_HEADER:?}")]
    MissingHeader,
    #[error("log has no runs")]
    Empty,
    #[error("run {run_id} has no seconds value; the log was collected in flips mode")]
    NoSeconds { run_id: u64 },
    #[error("cutoff runs disagree on the cutoff value: {0} vs {1}")]
    InconsistentCutoff(f64, f64),
    #[error(transparent)]
    Rtd(#[from] RtdError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One parsed log row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: u64,
    pub seed: u64,
    pub status: RunStatus,
    pub flips: u64,
    pub seconds: Option<f64>,
}

impl RunRecord {
    pub fn from_outcome(run_id: u64, outcome: &RunOutcome, record_seconds: bool) -> Self {
        RunRecord {
            run_id,
            seed: outcome.seed,
            status: outcome.status,
            flips: outcome.flips,
            seconds: record_seconds.then_some(outcome.seconds),
        }
    }
}

pub fn write_run_log<W: Write>(records: &[RunRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{RUN_LOG_HEADER}")?;
    for r in records {
        let status = match r.status {
            RunStatus::Solved => "solved",
            RunStatus::Cutoff => "cutoff",
        };
        match r.seconds {
            Some(s) => writeln!(w, "{},{},{},{},{}", r.run_id, r.seed, status, r.flips, s)?,
            None => writeln!(w, "{},{},{},{},", r.run_id, r.seed, status, r.flips)?,
        }
    }
    Ok(())
}

pub fn read_run_log<R: BufRead>(reader: R) -> Result<Vec<RunRecord>, RunLogError> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == RUN_LOG_HEADER => {}
        Some(Ok(_)) | None => return Err(RunLogError::MissingHeader),
        Some(Err(e)) => return Err(e.into()),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(RunLogError::Malformed {
                line: lineno,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_u64 = |s: &str, what: &str| {
            s.trim().parse::<u64>().map_err(|_| RunLogError::Malformed {
                line: lineno,
                msg: format!("bad {what}: {s:?}"),
            })
        };
        let status = match fields[2].trim() {
            "solved" => RunStatus::Solved,
            "cutoff" => RunStatus::Cutoff,
            other => {
                return Err(RunLogError::Malformed {
                    line: lineno,
                    msg: format!("bad status {other:?} (expected solved|cutoff)"),
                })
            }
        };
        let seconds = match fields[4].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| RunLogError::Malformed {
                line: lineno,
                msg: format!("bad seconds: {s:?}"),
            })?),
        };
        records.push(RunRecord {
            run_id: parse_u64(fields[0], "run_id")?,
            seed: parse_u64(fields[1], "seed")?,
            status,
            flips: parse_u64(fields[3], "flips")?,
            seconds,
        });
    }
    if records.is_empty() {
        return Err(RunLogError::Empty);
    }
    Ok(records)
}

/// Builds an RTD from log records in the requested unit. Cutoff rows become
/// censored samples; in seconds mode every cutoff row must agree on one
/// cutoff time.
pub fn rtd_from_records(records: &[RunRecord], unit: Unit) -> Result<Rtd, RunLogError> {
    let mut obs = Vec::with_capacity(records.len());
    let mut cutoff_seconds: Option<f64> = None;
    for r in records {
        let censored = r.status == RunStatus::Cutoff;
        let value = match unit {
            Unit::Flips => r.flips as f64,
            Unit::Seconds => {
                let s = r
                    .seconds
                    .ok_or(RunLogError::NoSeconds { run_id: r.run_id })?;
                if censored {
                    match cutoff_seconds {
                        None => cutoff_seconds = Some(s),
                        Some(v) if v != s => return Err(RunLogError::InconsistentCutoff(v, s)),
                        _ => {}
                    }
                }
                s
            }
        };
        obs.push((value, censored));
    }
    Ok(Rtd::new(obs, unit)?)
}
