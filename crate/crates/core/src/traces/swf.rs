//! Whitespace-separated columnar batch logs in the Parallel Workloads Archive
//! layout. Lines starting with `;` are header comments.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Job, JobTrace};
use crate::error::{Error, Result};

/// 1-based field numbers of the columns the simulator needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMap {
    pub job_id: usize,
    pub submit: usize,
    pub runtime: usize,
    pub processors: usize,
    /// Fallback when `processors` is missing (`-1`).
    pub requested_processors: Option<usize>,
    /// Fallback when `runtime` is missing (`-1`).
    pub requested_time: Option<usize>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            job_id: 1,
            submit: 2,
            runtime: 4,
            processors: 5,
            requested_processors: Some(8),
            requested_time: Some(9),
        }
    }
}

impl ColumnMap {
    fn required_fields(&self) -> usize {
        self.job_id
            .max(self.submit)
            .max(self.runtime)
            .max(self.processors)
    }
}

#[derive(Debug, Clone)]
pub struct SwfParse {
    pub trace: JobTrace,
    /// Lines skipped for a non-positive runtime or processor count.
    pub dropped: usize,
}

fn field(cols: &[&str], idx: usize) -> Option<f64> {
    cols.get(idx.checked_sub(1)?)
        .and_then(|s| s.parse::<f64>().ok())
}

fn positive(v: Option<f64>) -> Option<f64> {
    v.filter(|&x| x > 0.0)
}

pub fn parse_swf(path: &Path, columns: &ColumnMap) -> Result<SwfParse> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let required = columns.required_fields();
    let mut jobs = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        if cols.len() < required {
            return Err(parse_err(format!(
                "expected at least {required} fields, found {}",
                cols.len()
            )));
        }
        let submit = field(&cols, columns.submit)
            .ok_or_else(|| parse_err("unparsable submit time".into()))?;
        let runtime = positive(field(&cols, columns.runtime)).or_else(|| {
            columns
                .requested_time
                .and_then(|c| positive(field(&cols, c)))
        });
        let procs = positive(field(&cols, columns.processors)).or_else(|| {
            columns
                .requested_processors
                .and_then(|c| positive(field(&cols, c)))
        });
        let (Some(runtime), Some(procs)) = (runtime, procs) else {
            dropped += 1;
            continue;
        };
        if submit < 0.0 {
            dropped += 1;
            continue;
        }
        let job_id = field(&cols, columns.job_id).map_or(jobs.len() as u64 + 1, |v| v as u64);
        jobs.push(Job {
            job_id,
            submit_s: submit as u64,
            runtime_s: (runtime.round() as u64).max(1),
            nodes: procs.round() as u32,
        });
    }
    if jobs.is_empty() {
        return Err(Error::EmptyTrace(format!(
            "{} contains no valid jobs ({dropped} dropped)",
            path.display()
        )));
    }
    if dropped > 0 {
        log::info!(
            "{}: dropped {dropped} jobs without runtime or processors",
            path.display()
        );
    }
    let horizon = jobs
        .iter()
        .map(|j| j.submit_s + j.runtime_s)
        .max()
        .unwrap_or(0);
    Ok(SwfParse {
        trace: JobTrace::new(jobs, horizon),
        dropped,
    })
}

/// Writes an 18-field log; fields the simulator does not model are `-1`.
pub fn write_swf(trace: &JobTrace, path: &Path, header: &[&str]) -> Result<()> {
    let mut out = Vec::new();
    for h in header {
        writeln!(out, "; {h}").expect("write to vec");
    }
    for j in trace.jobs() {
        writeln!(
            out,
            "{} {} -1 {} {} -1 -1 {} {} -1 1 -1 -1 -1 -1 -1 -1 -1",
            j.job_id, j.submit_s, j.runtime_s, j.nodes, j.nodes, j.runtime_s
        )
        .expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
