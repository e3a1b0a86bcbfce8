//! Run metrics: batch throughput and turnaround, node-hour consumption,
//! peak nodes and management overhead.

use serde::{Deserialize, Serialize};

use crate::ledger::Pool;
use crate::pbj::{JobRecord, JobState};

/// Ownership snapshot taken after every instant in which it changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocSample {
    pub time_s: u64,
    pub pbj_owned: u32,
    pub pbj_in_use: u32,
    pub ws_owned: u32,
    pub provider_idle: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentKind {
    Request,
    Release,
    Provision,
}

/// One dynamic request, release or provisioning of nodes for a TRE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjustment {
    pub time_s: u64,
    pub kind: AdjustmentKind,
    pub tre: Pool,
    pub nodes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub completed_jobs: u64,
    pub avg_turnaround_s: f64,
    pub avg_execution_s: f64,
    pub peak_resource_nodes: u32,
    pub total_resource_node_hours: f64,
    pub pbj_node_hours: f64,
    pub ws_node_hours: f64,
    pub mgmt_overhead_adjustments: u64,
    /// `None` for the unbounded public-cloud regimes.
    pub config_size_nodes: Option<u32>,
    pub killed_runs: u64,
    pub ws_unmet_node_hours: f64,
}

impl MetricsReport {
    pub fn zeroed(config_size_nodes: Option<u32>) -> Self {
        MetricsReport {
            completed_jobs: 0,
            avg_turnaround_s: 0.0,
            avg_execution_s: 0.0,
            peak_resource_nodes: 0,
            total_resource_node_hours: 0.0,
            pbj_node_hours: 0.0,
            ws_node_hours: 0.0,
            mgmt_overhead_adjustments: 0,
            config_size_nodes,
            killed_runs: 0,
            ws_unmet_node_hours: 0.0,
        }
    }
}

/// Collapses samples sharing a timestamp to the last one and drops samples
/// that repeat the previous state.
pub fn normalize_series(series: &[AllocSample]) -> Vec<AllocSample> {
    let mut out: Vec<AllocSample> = Vec::with_capacity(series.len());
    for s in series {
        if let Some(last) = out.last_mut() {
            if last.time_s == s.time_s {
                *last = *s;
                continue;
            }
        }
        out.push(*s);
    }
    out.dedup_by(|b, a| {
        (a.pbj_owned, a.pbj_in_use, a.ws_owned, a.provider_idle)
            == (b.pbj_owned, b.pbj_in_use, b.ws_owned, b.provider_idle)
    });
    out
}

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Computes the report over `[0, horizon_s]`. Jobs count only if they
/// completed by the horizon; consumption integrates the ownership step
/// function exactly.
pub fn finalize(
    records: &[JobRecord],
    series: &[AllocSample],
    adjustments: &[Adjustment],
    horizon_s: u64,
    config_size_nodes: Option<u32>,
    ws_unmet_node_s: u64,
) -> MetricsReport {
    let mut report = MetricsReport::zeroed(config_size_nodes);

    let done: Vec<&JobRecord> = records
        .iter()
        .filter(|r| {
            r.state == JobState::Completed && r.completion_s.is_some_and(|c| c <= horizon_s)
        })
        .collect();
    report.completed_jobs = done.len() as u64;
    if !done.is_empty() {
        let n = done.len() as f64;
        let turnaround: u64 = done.iter().filter_map(|r| r.turnaround_s()).sum();
        let execution: u64 = done.iter().filter_map(|r| r.execution_s()).sum();
        report.avg_turnaround_s = turnaround as f64 / n;
        report.avg_execution_s = execution as f64 / n;
    }
    report.killed_runs = records.iter().map(|r| u64::from(r.kill_count)).sum();

    let series = normalize_series(series);
    let (mut pbj_ns, mut ws_ns) = (0u64, 0u64);
    for (i, s) in series.iter().enumerate() {
        if s.time_s > horizon_s {
            break;
        }
        let end = series
            .get(i + 1)
            .map_or(horizon_s, |n| n.time_s.min(horizon_s));
        let span = end - s.time_s;
        pbj_ns += u64::from(s.pbj_owned) * span;
        ws_ns += u64::from(s.ws_owned) * span;
        report.peak_resource_nodes = report.peak_resource_nodes.max(s.pbj_owned + s.ws_owned);
    }
    report.pbj_node_hours = pbj_ns as f64 / SECONDS_PER_HOUR;
    report.ws_node_hours = ws_ns as f64 / SECONDS_PER_HOUR;
    report.total_resource_node_hours = (pbj_ns + ws_ns) as f64 / SECONDS_PER_HOUR;
    report.mgmt_overhead_adjustments =
        adjustments.iter().filter(|a| a.time_s <= horizon_s).count() as u64;
    report.ws_unmet_node_hours = ws_unmet_node_s as f64 / SECONDS_PER_HOUR;
    report
}
