use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DemandSample, RateSample, WsDemandTrace};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct WsRow {
    time_s: u64,
    nodes: u32,
}

#[derive(Deserialize)]
struct RateRow {
    time_s: u64,
    requests_per_s: f64,
}

/// Reads a `time_s,nodes` step series. The horizon is the last sample time
/// unless the caller overrides it with [`WsDemandTrace::with_duration`].
pub fn read_ws_csv(path: &Path) -> Result<WsDemandTrace> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_open(path, e))?;
    let mut samples = Vec::new();
    for row in rdr.deserialize() {
        let row: WsRow = row?;
        samples.push(DemandSample {
            time_s: row.time_s,
            nodes: row.nodes,
        });
    }
    let last = samples.last().map_or(0, |s| s.time_s);
    WsDemandTrace::new(samples, last)
}

pub fn write_ws_csv(trace: &WsDemandTrace, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_open(path, e))?;
    for s in trace.samples() {
        wtr.serialize(WsRow {
            time_s: s.time_s,
            nodes: s.nodes,
        })?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rate_csv(path: &Path) -> Result<Vec<RateSample>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_open(path, e))?;
    let mut out: Vec<RateSample> = Vec::new();
    for row in rdr.deserialize() {
        let row: RateRow = row?;
        if let Some(prev) = out.last() {
            if row.time_s <= prev.time_s {
                return Err(Error::Precondition(format!(
                    "{}: request-rate times must strictly increase",
                    path.display()
                )));
            }
        }
        out.push(RateSample {
            time_s: row.time_s,
            requests_per_s: row.requests_per_s,
        });
    }
    Ok(out)
}

fn csv_open(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}
