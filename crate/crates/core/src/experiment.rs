//! Experiment runner: a JSON config fully determines a run or a sweep.
//!
//! Trace paths resolve relative to the config file. Sweep points run in
//! parallel; rows are sorted by their parameter vector before writing, so the
//! output bytes do not depend on scheduling.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::pbj::PbjPolicyParams;
use crate::provision::{simulate, RegimeKind, RunConfig, RunOutput};
use crate::runtime_env::{CoordinationGroup, RuntimeEnvSpec};
use crate::traces::{
    autoscale_to_demand, parse_swf, read_rate_csv, read_ws_csv, synth_batch, synth_bursty_ws,
    AutoscalerParams, BurstWindow, ColumnMap, JobTrace, ScaleToPeak, SynthBatchParams,
    WsDemandTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_s: u64,
    pub length_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSource {
    Swf {
        path: PathBuf,
        #[serde(default)]
        columns: ColumnMap,
        /// Divide processor counts into nodes of this many CPUs.
        #[serde(default)]
        cpus_per_node: Option<u32>,
        #[serde(default)]
        segment: Option<Segment>,
    },
    Synth(SynthBatchParams),
}

fn default_sample_period() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WsSource {
    Csv {
        path: PathBuf,
    },
    Constant {
        nodes: u32,
        duration_s: u64,
    },
    SynthBursty {
        duration_s: u64,
        base_nodes: u32,
        peak_nodes: u32,
        windows: Vec<BurstWindow>,
    },
    /// Instance counts produced by replaying a request-rate series through
    /// the threshold autoscaler.
    Autoscale {
        rates: PathBuf,
        #[serde(default)]
        params: AutoscalerParams,
        #[serde(default = "default_sample_period")]
        sample_period_s: u64,
    },
}

/// Peak demands the two traces are scaled to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuple {
    pub prc_pbj: u32,
    pub prc_ws: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    /// FLB-NUB batch lower bound in nodes.
    pub b: Option<u32>,
    /// Alternative to `b`: fraction of `prc_pbj + prc_ws`.
    pub b_ratio: Option<f64>,
    pub u: f64,
    pub v: f64,
    pub g: f64,
    pub lease_s: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = PbjPolicyParams::default();
        PolicyConfig {
            b: None,
            b_ratio: None,
            u: p.u,
            v: p.v,
            g: p.g,
            lease_s: p.lease_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub b: Option<Vec<u32>>,
    pub b_ratio: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub g: Option<Vec<f64>>,
    pub lease_s: Option<Vec<u64>>,
    pub cluster_size: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrePair {
    pub pbj: RuntimeEnvSpec,
    pub ws: RuntimeEnvSpec,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: RegimeKind,
    pub batch_trace: BatchSource,
    pub ws_trace: WsSource,
    #[serde(default)]
    pub tuple: Option<Tuple>,
    #[serde(default)]
    pub cluster_size: Option<u32>,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub setup_latency_s: u64,
    /// Defaults to the batch trace duration.
    #[serde(default)]
    pub horizon_s: Option<u64>,
    #[serde(default)]
    pub tres: Option<TrePair>,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Emit per-run allocation and job CSVs next to the report.
    #[serde(default = "yes")]
    pub write_series: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        if self.policy.b.is_some() && self.policy.b_ratio.is_some() {
            return fail("policy.b_ratio", "give either b or b_ratio, not both");
        }
        if self.sweep.b.is_some() && self.sweep.b_ratio.is_some() {
            return fail("sweep.b_ratio", "sweep either b or b_ratio, not both");
        }
        let has_b = self.policy.b.is_some()
            || self.policy.b_ratio.is_some()
            || self.sweep.b.is_some()
            || self.sweep.b_ratio.is_some()
            || self.tres.is_some();
        if self.regime == RegimeKind::PhoenixFlbnub && !has_b {
            return fail("policy.b", "required for phoenix_flbnub");
        }
        let sized = self.cluster_size.is_some() || self.sweep.cluster_size.is_some();
        if sized && self.regime != RegimeKind::PhoenixFb {
            return fail("cluster_size", "only meaningful for phoenix_fb");
        }
        if self.tres.is_some()
            && !matches!(
                self.regime,
                RegimeKind::PhoenixFb | RegimeKind::PhoenixFlbnub
            )
        {
            return fail(
                "tres",
                "only coordinated regimes take environment documents",
            );
        }
        let axes_empty = [
            self.sweep.b.as_ref().map(Vec::len),
            self.sweep.b_ratio.as_ref().map(Vec::len),
            self.sweep.u.as_ref().map(Vec::len),
            self.sweep.v.as_ref().map(Vec::len),
            self.sweep.g.as_ref().map(Vec::len),
            self.sweep.lease_s.as_ref().map(Vec::len),
            self.sweep.cluster_size.as_ref().map(Vec::len),
        ]
        .contains(&Some(0));
        if axes_empty {
            return fail("sweep", "axes must list at least one value");
        }
        Ok(())
    }
}

/// Both traces, scaled and cut to a common horizon.
#[derive(Debug, Clone)]
pub struct PreparedTraces {
    pub batch: JobTrace,
    pub ws: WsDemandTrace,
    pub prc_pbj: u32,
    pub prc_ws: u32,
    pub horizon_s: u64,
}

pub fn prepare_traces(cfg: &ExperimentConfig) -> Result<PreparedTraces> {
    let mut batch = match &cfg.batch_trace {
        BatchSource::Swf {
            path,
            columns,
            cpus_per_node,
            segment,
        } => {
            let parsed = parse_swf(&cfg.resolve(path), columns)?;
            if parsed.dropped > 0 {
                info!("dropped {} jobs without usable fields", parsed.dropped);
            }
            let mut t = parsed.trace;
            if let Some(s) = segment {
                t = t.extract_segment(s.start_s, s.length_s)?;
            }
            if let Some(cpus) = cpus_per_node {
                t = t.normalize_per_node_cpus(*cpus)?;
            }
            t
        }
        BatchSource::Synth(params) => synth_batch(params, cfg.seed)?,
    };
    let mut ws = match &cfg.ws_trace {
        WsSource::Csv { path } => read_ws_csv(&cfg.resolve(path))?,
        WsSource::Constant { nodes, duration_s } => WsDemandTrace::constant(*nodes, *duration_s),
        WsSource::SynthBursty {
            duration_s,
            base_nodes,
            peak_nodes,
            windows,
        } => synth_bursty_ws(*duration_s, *base_nodes, *peak_nodes, windows, cfg.seed)?,
        WsSource::Autoscale {
            rates,
            params,
            sample_period_s,
        } => autoscale_to_demand(
            &read_rate_csv(&cfg.resolve(rates))?,
            params,
            *sample_period_s,
        )?,
    };
    if let Some(t) = cfg.tuple {
        if !batch.is_empty() {
            batch = batch.scale_to_peak(t.prc_pbj)?;
        }
        ws = ws.scale_to_peak(t.prc_ws)?;
    }
    let horizon_s = cfg.horizon_s.unwrap_or(batch.duration_s());
    let prc_pbj = cfg.tuple.map_or(batch.peak_demand(), |t| t.prc_pbj);
    let prc_ws = cfg.tuple.map_or(ws.peak_demand(), |t| t.prc_ws);
    Ok(PreparedTraces {
        batch: batch.with_duration(horizon_s),
        ws: ws.with_duration(horizon_s),
        prc_pbj,
        prc_ws,
        horizon_s,
    })
}

/// One point of the sweep cross product.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPoint {
    pub regime: RegimeKind,
    pub cluster_size: Option<u32>,
    pub b: Option<u32>,
    pub policy: PbjPolicyParams,
    pub setup_latency_s: u64,
}

impl RunPoint {
    fn cmp_key(&self, other: &Self) -> Ordering {
        (self.regime, self.cluster_size, self.b, self.policy.lease_s)
            .cmp(&(
                other.regime,
                other.cluster_size,
                other.b,
                other.policy.lease_s,
            ))
            .then(self.policy.u.total_cmp(&other.policy.u))
            .then(self.policy.v.total_cmp(&other.policy.v))
            .then(self.policy.g.total_cmp(&other.policy.g))
    }
}

fn axis<T: Copy>(values: &Option<Vec<T>>, base: T) -> Vec<T> {
    values.clone().unwrap_or_else(|| vec![base])
}

fn b_from_ratio(ratio: f64, sum: u32) -> u32 {
    (ratio * f64::from(sum)).round() as u32
}

/// Full cross product of the sweep axes, sorted by parameter vector.
pub fn expand_points(cfg: &ExperimentConfig, traces: &PreparedTraces) -> Vec<RunPoint> {
    let sum = traces.prc_pbj + traces.prc_ws;
    let coordinated_b = cfg.regime == RegimeKind::PhoenixFlbnub;
    let bs: Vec<Option<u32>> = if !coordinated_b {
        vec![None]
    } else if let Some(ratios) = &cfg.sweep.b_ratio {
        ratios.iter().map(|&r| Some(b_from_ratio(r, sum))).collect()
    } else if let Some(bs) = &cfg.sweep.b {
        bs.iter().copied().map(Some).collect()
    } else {
        let b = cfg
            .policy
            .b
            .or(cfg.policy.b_ratio.map(|r| b_from_ratio(r, sum)))
            .or(cfg.tres.as_ref().map(|t| t.pbj.lower_bound));
        vec![b]
    };
    let sizes: Vec<Option<u32>> = if cfg.regime == RegimeKind::PhoenixFb {
        axis(&cfg.sweep.cluster_size, cfg.cluster_size.unwrap_or(sum))
            .into_iter()
            .map(Some)
            .collect()
    } else {
        vec![None]
    };

    let mut points = Vec::new();
    for &cluster_size in &sizes {
        for &b in &bs {
            for u in axis(&cfg.sweep.u, cfg.policy.u) {
                for v in axis(&cfg.sweep.v, cfg.policy.v) {
                    for g in axis(&cfg.sweep.g, cfg.policy.g) {
                        for lease_s in axis(&cfg.sweep.lease_s, cfg.policy.lease_s) {
                            points.push(RunPoint {
                                regime: cfg.regime,
                                cluster_size,
                                b,
                                policy: PbjPolicyParams { u, v, g, lease_s },
                                setup_latency_s: cfg.setup_latency_s,
                            });
                        }
                    }
                }
            }
        }
    }
    points.sort_by(RunPoint::cmp_key);
    points.dedup();
    points
}

pub fn run_point(
    cfg: &ExperimentConfig,
    point: &RunPoint,
    traces: &PreparedTraces,
    assert_invariants: bool,
) -> Result<RunOutput> {
    let group = match &cfg.tres {
        Some(t) => Some(CoordinationGroup::new(
            t.pbj.clone(),
            t.ws.clone(),
            point.b.unwrap_or(t.pbj.lower_bound),
        )?),
        None => None,
    };
    let run = RunConfig {
        regime: point.regime,
        prc_pbj: traces.prc_pbj,
        prc_ws: traces.prc_ws,
        cluster_size: point.cluster_size,
        b: point.b.unwrap_or(0),
        policy: point.policy,
        setup_latency_s: point.setup_latency_s,
        horizon_s: Some(traces.horizon_s),
        group,
        assert_invariants,
    };
    simulate(&run, &traces.batch, &traces.ws)
}

/// One report.csv row: every metric plus its full parameter provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub regime: RegimeKind,
    pub prc_pbj: u32,
    pub prc_ws: u32,
    pub cluster_size: Option<u32>,
    pub b: Option<u32>,
    pub u: f64,
    pub v: f64,
    pub g: f64,
    pub lease_s: u64,
    pub setup_latency_s: u64,
    pub horizon_s: u64,
    pub completed_jobs: u64,
    pub avg_turnaround_s: u64,
    pub avg_execution_s: u64,
    pub peak_resource_nodes: u32,
    pub total_resource_node_hours: f64,
    pub pbj_node_hours: f64,
    pub ws_node_hours: f64,
    pub mgmt_overhead_adjustments: u64,
    pub config_size_nodes: String,
    pub killed_runs: u64,
    pub ws_unmet_node_hours: f64,
}

fn tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

impl ReportRow {
    pub fn new(
        run_id: String,
        point: &RunPoint,
        traces: &PreparedTraces,
        r: &MetricsReport,
    ) -> Self {
        ReportRow {
            run_id,
            regime: point.regime,
            prc_pbj: traces.prc_pbj,
            prc_ws: traces.prc_ws,
            cluster_size: point.cluster_size,
            b: point.b,
            u: point.policy.u,
            v: point.policy.v,
            g: point.policy.g,
            lease_s: point.policy.lease_s,
            setup_latency_s: point.setup_latency_s,
            horizon_s: traces.horizon_s,
            completed_jobs: r.completed_jobs,
            avg_turnaround_s: r.avg_turnaround_s.round() as u64,
            avg_execution_s: r.avg_execution_s.round() as u64,
            peak_resource_nodes: r.peak_resource_nodes,
            total_resource_node_hours: tenth(r.total_resource_node_hours),
            pbj_node_hours: tenth(r.pbj_node_hours),
            ws_node_hours: tenth(r.ws_node_hours),
            mgmt_overhead_adjustments: r.mgmt_overhead_adjustments,
            config_size_nodes: r
                .config_size_nodes
                .map_or_else(|| "unbounded".to_string(), |n| n.to_string()),
            killed_runs: r.killed_runs,
            ws_unmet_node_hours: tenth(r.ws_unmet_node_hours),
        }
    }
}

#[derive(Serialize)]
struct JobRow {
    job_id: u64,
    submit_s: u64,
    start_s: Option<u64>,
    completion_s: Option<u64>,
    nodes: u32,
    kill_count: u32,
    turnaround_s: Option<u64>,
    execution_s: Option<u64>,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_run_files(dir: &Path, run_id: &str, out: &RunOutput) -> Result<()> {
    write_csv(&dir.join(format!("alloc_{run_id}.csv")), &out.series)?;
    let jobs = out.records.iter().map(|r| JobRow {
        job_id: r.job.job_id,
        submit_s: r.job.submit_s,
        start_s: r.start_s,
        completion_s: r.completion_s,
        nodes: r.job.nodes,
        kill_count: r.kill_count,
        turnaround_s: r.turnaround_s(),
        execution_s: r.execution_s(),
    });
    write_csv(&dir.join(format!("jobs_{run_id}.csv")), jobs)
}

/// Runs every sweep point and writes report.csv (plus per-run series) into
/// `out_dir`, falling back to the config's `output_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    assert_invariants: bool,
) -> Result<Vec<ReportRow>> {
    let dir = match (out_dir, &cfg.output_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => cfg.resolve(d),
        (None, None) => {
            return Err(Error::Config(
                "output_dir: no output directory given".into(),
            ))
        }
    };
    let traces = prepare_traces(cfg)?;
    let points = expand_points(cfg, &traces);
    info!(
        "{} runs over {} jobs, horizon {} s",
        points.len(),
        traces.batch.len(),
        traces.horizon_s
    );
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let run_id = format!("{}-{i:03}", point.regime.as_str());
            let out = run_point(cfg, point, &traces, assert_invariants)?;
            if cfg.write_series {
                write_run_files(&dir, &run_id, &out)?;
            }
            Ok(ReportRow::new(run_id, point, &traces, &out.report))
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&dir.join("report.csv"), &rows)?;
    Ok(rows)
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()?;
    if rows.is_empty() {
        return Err(Error::EmptyTrace(format!(
            "{}: no report rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// One metric of one system measured against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub baseline_run_id: String,
    pub run_id: String,
    pub regime: RegimeKind,
    pub metric: String,
    pub baseline: f64,
    pub value: f64,
    pub delta: f64,
    /// value / baseline.
    pub ratio: Option<f64>,
    /// (baseline − value) / baseline, in percent.
    pub saved_pct: Option<f64>,
    /// Total consumption only: saving against the static
    /// `(prc_pbj + prc_ws) × horizon` provisioning, in percent.
    pub saved_vs_static_pct: Option<f64>,
}

fn round_to(x: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (x * k).round() / k
}

fn metric_values(r: &ReportRow) -> [(&'static str, f64); 6] {
    [
        ("completed_jobs", r.completed_jobs as f64),
        ("avg_turnaround_s", r.avg_turnaround_s as f64),
        ("avg_execution_s", r.avg_execution_s as f64),
        ("peak_resource_nodes", f64::from(r.peak_resource_nodes)),
        ("total_resource_node_hours", r.total_resource_node_hours),
        (
            "mgmt_overhead_adjustments",
            r.mgmt_overhead_adjustments as f64,
        ),
    ]
}

pub fn compare_rows(baseline: &ReportRow, others: &[ReportRow]) -> Result<Vec<ComparisonRow>> {
    let mut out = Vec::new();
    for other in others {
        if other.horizon_s != baseline.horizon_s {
            return Err(Error::Precondition(format!(
                "{} covers {} s but baseline {} covers {} s",
                other.run_id, other.horizon_s, baseline.run_id, baseline.horizon_s
            )));
        }
        let static_nh = f64::from(other.prc_pbj + other.prc_ws) * other.horizon_s as f64 / 3_600.0;
        for ((metric, base), (_, value)) in metric_values(baseline)
            .into_iter()
            .zip(metric_values(other))
        {
            let (ratio, saved_pct) = if base == 0.0 {
                (None, None)
            } else {
                (
                    Some(round_to(value / base, 4)),
                    Some(round_to((base - value) / base * 100.0, 2)),
                )
            };
            let saved_vs_static_pct = (metric == "total_resource_node_hours" && static_nh > 0.0)
                .then(|| round_to((static_nh - value) / static_nh * 100.0, 2));
            out.push(ComparisonRow {
                baseline_run_id: baseline.run_id.clone(),
                run_id: other.run_id.clone(),
                regime: other.regime,
                metric: metric.to_string(),
                baseline: base,
                value,
                delta: round_to(value - base, 4),
                ratio,
                saved_pct,
                saved_vs_static_pct,
            });
        }
    }
    Ok(out)
}

/// Compares every row of `others` with the single row of `baseline`.
pub fn compare_files(
    baseline: &Path,
    others: &[PathBuf],
    out: &Path,
) -> Result<Vec<ComparisonRow>> {
    let base = read_report(baseline)?;
    let [base] = base.as_slice() else {
        return Err(Error::Precondition(format!(
            "{}: baseline report must hold exactly one row, found {}",
            baseline.display(),
            base.len()
        )));
    };
    let mut rows = Vec::new();
    for p in others {
        rows.extend(read_report(p)?);
    }
    let table = compare_rows(base, &rows)?;
    write_csv(out, &table)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run_id: &str, total: f64, peak: u32, horizon_s: u64) -> ReportRow {
        ReportRow {
            run_id: run_id.into(),
            regime: RegimeKind::Ec2Rightscale,
            prc_pbj: 128,
            prc_ws: 64,
            cluster_size: None,
            b: None,
            u: 1.2,
            v: 0.2,
            g: 0.5,
            lease_s: 3_600,
            setup_latency_s: 0,
            horizon_s,
            completed_jobs: 100,
            avg_turnaround_s: 573,
            avg_execution_s: 573,
            peak_resource_nodes: peak,
            total_resource_node_hours: total,
            pbj_node_hours: total,
            ws_node_hours: 0.0,
            mgmt_overhead_adjustments: 10,
            config_size_nodes: "unbounded".into(),
            killed_runs: 0,
            ws_unmet_node_hours: 0.0,
        }
    }

    fn metric<'a>(t: &'a [ComparisonRow], m: &str) -> &'a ComparisonRow {
        t.iter().find(|r| r.metric == m).unwrap()
    }

    #[test]
    fn compare_reproduces_published_savings() {
        let ec2 = row("ec2", 63_336.0, 1_319, 1_209_600);
        let phoenix = row("phoenix", 45_803.0, 412, 1_209_600);
        let t = compare_rows(&ec2, &[phoenix]).unwrap();
        assert_eq!(
            metric(&t, "total_resource_node_hours").saved_pct,
            Some(27.68)
        );
        assert_eq!(metric(&t, "peak_resource_nodes").ratio, Some(0.3124));
    }

    #[test]
    fn compare_identity_has_zero_deltas() {
        let a = row("a", 1_000.0, 50, 3_600);
        let t = compare_rows(&a, std::slice::from_ref(&a)).unwrap();
        assert!(t.iter().all(|r| r.delta == 0.0));
        assert!(t.iter().all(|r| r.saved_pct.is_none_or(|p| p == 0.0)));
    }

    #[test]
    fn compare_rejects_mismatched_horizons() {
        let a = row("a", 1.0, 1, 3_600);
        let b = row("b", 1.0, 1, 7_200);
        assert!(matches!(
            compare_rows(&a, &[b]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn static_saving_uses_prc_sum() {
        // (128 + 64) nodes for 10 h = 1920 node-hours
        let a = row("a", 1_000.0, 50, 36_000);
        let b = row("b", 960.0, 50, 36_000);
        let t = compare_rows(&a, &[b]).unwrap();
        assert_eq!(
            metric(&t, "total_resource_node_hours").saved_vs_static_pct,
            Some(50.0)
        );
        assert_eq!(metric(&t, "peak_resource_nodes").saved_vs_static_pct, None);
    }

    const BASE: &str = r#"{
        "regime": "phoenix_flbnub",
        "batch_trace": {"synth": {
            "duration_s": 86400, "capacity": 32, "peak_nodes": 16,
            "target_utilization": 0.3, "min_runtime_s": 60, "max_runtime_s": 7200}},
        "ws_trace": {"constant": {"nodes": 4, "duration_s": 86400}},
        "policy": {"b": 8},
        "sweep": {"lease_s": [3600, 900], "u": [1.5, 1.2]}
    }"#;

    #[test]
    fn sweep_is_sorted_cross_product() {
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        let traces = prepare_traces(&cfg).unwrap();
        let points = expand_points(&cfg, &traces);
        let keys: Vec<(u64, f64)> = points
            .iter()
            .map(|p| (p.policy.lease_s, p.policy.u))
            .collect();
        assert_eq!(
            keys,
            vec![(900, 1.2), (900, 1.5), (3_600, 1.2), (3_600, 1.5)]
        );
        assert!(points.iter().all(|p| p.b == Some(8)));
    }

    #[test]
    fn config_errors_name_the_field() {
        let no_b = BASE.replace(r#""policy": {"b": 8},"#, "");
        let err = ExperimentConfig::from_json(&no_b).unwrap_err().to_string();
        assert!(err.contains("policy.b"), "{err}");

        let sized = BASE.replace(
            r#""policy": {"b": 8},"#,
            r#""policy": {"b": 8}, "cluster_size": 9,"#,
        );
        let err = ExperimentConfig::from_json(&sized).unwrap_err().to_string();
        assert!(err.contains("cluster_size"), "{err}");

        let unknown = BASE
            .replace(r#""seed""#, r#""sed""#)
            .replace(r#""policy""#, r#""polcy""#);
        assert!(ExperimentConfig::from_json(&unknown).is_err());
    }

    #[test]
    fn run_writes_report_and_series() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        let rows = run_experiment(&cfg, Some(dir.path()), true).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(read_report(&dir.path().join("report.csv")).unwrap(), rows);
        let jobs = fs::read_to_string(dir.path().join("jobs_phoenix_flbnub-000.csv")).unwrap();
        assert!(jobs.starts_with(
            "job_id,submit_s,start_s,completion_s,nodes,kill_count,turnaround_s,execution_s\n"
        ));
        let alloc = fs::read_to_string(dir.path().join("alloc_phoenix_flbnub-003.csv")).unwrap();
        assert!(alloc.starts_with("time_s,pbj_owned,pbj_in_use,ws_owned,provider_idle\n"));
    }
}
