//! Batch-job traces and web-service demand traces: ingestion, normalization,
//! scaling and synthesis.

mod autoscale;
mod io;
mod swf;
mod synth;

pub use autoscale::{autoscale_to_demand, scale_decision, AutoscalerParams, RateSample, ScaleStep};
pub use io::{read_rate_csv, read_ws_csv, write_ws_csv};
pub use swf::{parse_swf, write_swf, ColumnMap, SwfParse};
pub use synth::{synth_batch, synth_bursty_ws, BurstWindow, SynthBatchParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One batch job as it appears in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Job {
    pub job_id: u64,
    pub submit_s: u64,
    pub runtime_s: u64,
    pub nodes: u32,
}

impl Job {
    /// Node-seconds of work in one uninterrupted run.
    pub fn work(&self) -> u64 {
        self.runtime_s * u64::from(self.nodes)
    }
}

/// A batch workload: jobs ordered by `(submit_s, job_id)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobTrace {
    jobs: Vec<Job>,
    duration_s: u64,
    peak_demand: u32,
}

impl JobTrace {
    /// Builds a trace, sorting jobs and clamping node counts and runtimes to at
    /// least one. `duration_s` is raised to the last submit time if shorter.
    pub fn new(mut jobs: Vec<Job>, duration_s: u64) -> Self {
        for job in &mut jobs {
            job.nodes = job.nodes.max(1);
            job.runtime_s = job.runtime_s.max(1);
        }
        jobs.sort_by_key(|j| (j.submit_s, j.job_id));
        let last_submit = jobs.last().map_or(0, |j| j.submit_s);
        let peak_demand = jobs.iter().map(|j| j.nodes).max().unwrap_or(0);
        JobTrace {
            jobs,
            duration_s: duration_s.max(last_submit),
            peak_demand,
        }
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn duration_s(&self) -> u64 {
        self.duration_s
    }

    /// Largest single-job node demand (PRC_PBJ once scaled).
    pub fn peak_demand(&self) -> u32 {
        self.peak_demand
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn with_duration(mut self, duration_s: u64) -> Self {
        let last_submit = self.jobs.last().map_or(0, |j| j.submit_s);
        self.duration_s = duration_s.max(last_submit);
        self
    }

    /// Offered load as a fraction of `capacity` nodes over the trace horizon.
    pub fn utilization(&self, capacity: u32) -> f64 {
        if self.duration_s == 0 || capacity == 0 {
            return 0.0;
        }
        let work: u64 = self.jobs.iter().map(Job::work).sum();
        work as f64 / (f64::from(capacity) * self.duration_s as f64)
    }

    /// Keeps jobs submitted in `[start_s, start_s + length_s)` and rebases
    /// their submit times to zero.
    pub fn extract_segment(&self, start_s: u64, length_s: u64) -> Result<JobTrace> {
        if length_s == 0 {
            return Err(Error::Precondition(
                "segment length must be positive".into(),
            ));
        }
        let end = start_s.saturating_add(length_s);
        let jobs: Vec<Job> = self
            .jobs
            .iter()
            .filter(|j| j.submit_s >= start_s && j.submit_s < end)
            .map(|j| Job {
                submit_s: j.submit_s - start_s,
                ..*j
            })
            .collect();
        if jobs.is_empty() {
            log::warn!("segment [{start_s}, {end}) contains no jobs");
        }
        Ok(JobTrace::new(jobs, length_s))
    }

    /// Converts CPU counts into node counts for nodes of `cpus_per_node` CPUs.
    pub fn normalize_per_node_cpus(&self, cpus_per_node: u32) -> Result<JobTrace> {
        if cpus_per_node == 0 {
            return Err(Error::Precondition(
                "cpus_per_node must be at least 1".into(),
            ));
        }
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job {
                nodes: j.nodes.div_ceil(cpus_per_node).max(1),
                ..*j
            })
            .collect();
        Ok(JobTrace::new(jobs, self.duration_s))
    }
}

/// One step of a web-service demand series: `nodes` holds from `time_s`
/// until the next sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandSample {
    pub time_s: u64,
    pub nodes: u32,
}

/// Step-function node demand of a web service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WsDemandTrace {
    samples: Vec<DemandSample>,
    duration_s: u64,
    peak_demand: u32,
}

impl WsDemandTrace {
    pub fn new(samples: Vec<DemandSample>, duration_s: u64) -> Result<Self> {
        match samples.first() {
            None => return Err(Error::EmptyTrace("demand trace has no samples".into())),
            Some(first) if first.time_s != 0 => {
                return Err(Error::Precondition(format!(
                    "first demand sample must be at time 0, found {}",
                    first.time_s
                )))
            }
            _ => {}
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].time_s <= w[0].time_s) {
            return Err(Error::Precondition(format!(
                "demand sample times must strictly increase ({} then {})",
                w[0].time_s, w[1].time_s
            )));
        }
        let last = samples.last().map_or(0, |s| s.time_s);
        let peak_demand = samples.iter().map(|s| s.nodes).max().unwrap_or(0);
        Ok(WsDemandTrace {
            samples,
            duration_s: duration_s.max(last),
            peak_demand,
        })
    }

    /// Constant demand over `[0, duration_s]`.
    pub fn constant(nodes: u32, duration_s: u64) -> Self {
        WsDemandTrace {
            samples: vec![DemandSample { time_s: 0, nodes }],
            duration_s,
            peak_demand: nodes,
        }
    }

    pub fn samples(&self) -> &[DemandSample] {
        &self.samples
    }

    pub fn duration_s(&self) -> u64 {
        self.duration_s
    }

    /// PRC_WS once scaled.
    pub fn peak_demand(&self) -> u32 {
        self.peak_demand
    }

    pub fn initial_demand(&self) -> u32 {
        self.samples[0].nodes
    }

    pub fn with_duration(mut self, duration_s: u64) -> Self {
        let last = self.samples.last().map_or(0, |s| s.time_s);
        self.duration_s = duration_s.max(last);
        self
    }

    /// Demand in effect at `time_s`.
    pub fn demand_at(&self, time_s: u64) -> u32 {
        let idx = self.samples.partition_point(|s| s.time_s <= time_s);
        self.samples[idx.saturating_sub(1)].nodes
    }

    /// Node-seconds of demand over `[0, horizon_s)`.
    pub fn node_seconds(&self, horizon_s: u64) -> u64 {
        let mut total = 0;
        for (i, s) in self.samples.iter().enumerate() {
            if s.time_s >= horizon_s {
                break;
            }
            let end = self
                .samples
                .get(i + 1)
                .map_or(horizon_s, |n| n.time_s.min(horizon_s));
            total += u64::from(s.nodes) * (end - s.time_s);
        }
        total
    }
}

/// Rescales demands so the trace peak equals a target node count.
pub trait ScaleToPeak: Sized {
    fn scale_to_peak(&self, target_peak: u32) -> Result<Self>;
}

/// Round-half-up of `nodes * target / old_peak`, clamped to `[1, target]`.
fn scale_nodes(nodes: u32, old_peak: u32, target_peak: u32) -> u32 {
    let num = 2 * u64::from(nodes) * u64::from(target_peak) + u64::from(old_peak);
    let scaled = num / (2 * u64::from(old_peak));
    scaled.clamp(1, u64::from(target_peak)) as u32
}

fn check_scale(old_peak: u32, target_peak: u32) -> Result<()> {
    if target_peak == 0 {
        return Err(Error::Precondition("target peak must be at least 1".into()));
    }
    if old_peak == 0 {
        return Err(Error::Precondition(
            "cannot scale a trace with zero peak".into(),
        ));
    }
    Ok(())
}

impl ScaleToPeak for JobTrace {
    fn scale_to_peak(&self, target_peak: u32) -> Result<Self> {
        check_scale(self.peak_demand, target_peak)?;
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job {
                nodes: scale_nodes(j.nodes, self.peak_demand, target_peak),
                ..*j
            })
            .collect();
        Ok(JobTrace::new(jobs, self.duration_s))
    }
}

impl ScaleToPeak for WsDemandTrace {
    fn scale_to_peak(&self, target_peak: u32) -> Result<Self> {
        check_scale(self.peak_demand, target_peak)?;
        let samples = self
            .samples
            .iter()
            .map(|s| DemandSample {
                nodes: scale_nodes(s.nodes, self.peak_demand, target_peak),
                ..*s
            })
            .collect();
        WsDemandTrace::new(samples, self.duration_s)
    }
}
