//! The parallel-batch-jobs TRE: job queue, first-fit scheduler, the
//! threshold-driven resource manager used with FLB-NUB, and forced release
//! with job kills used with FB.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traces::{Job, JobTrace};

/// Thresholds of the batch resource manager.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PbjPolicyParams {
    /// Request when queued demand / owned exceeds this.
    pub u: f64,
    /// Release when queued demand / owned falls below this.
    pub v: f64,
    /// Fraction of idle nodes handed back on release.
    pub g: f64,
    /// Lease unit in seconds; also the manager's timer period.
    pub lease_s: u64,
}

impl Default for PbjPolicyParams {
    fn default() -> Self {
        PbjPolicyParams {
            u: 1.2,
            v: 0.2,
            g: 0.5,
            lease_s: 3600,
        }
    }
}

impl PbjPolicyParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.u.is_nan() || self.u <= 0.0 {
            problems.push(format!("u must be positive, got {}", self.u));
        }
        if !(self.v > 0.0 && self.v < self.u) {
            problems.push(format!("v must lie in (0, u), got {}", self.v));
        }
        if !(self.g > 0.0 && self.g < 1.0) {
            problems.push(format!("g must lie in (0, 1), got {}", self.g));
        }
        if self.lease_s == 0 {
            problems.push("lease_s must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    KilledRequeued,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobRecord {
    pub job: Job,
    pub state: JobState,
    pub start_s: Option<u64>,
    pub completion_s: Option<u64>,
    pub kill_count: u32,
    /// Bumped on every start; completion events carry it so a killed run's
    /// stale completion is ignored.
    pub run: u32,
}

impl JobRecord {
    pub fn new(job: Job) -> Self {
        JobRecord {
            job,
            state: JobState::Queued,
            start_s: None,
            completion_s: None,
            kill_count: 0,
            run: 0,
        }
    }

    pub fn turnaround_s(&self) -> Option<u64> {
        self.completion_s.map(|c| c - self.job.submit_s)
    }

    pub fn execution_s(&self) -> Option<u64> {
        Some(self.completion_s? - self.start_s?)
    }
}

/// One arrival-order pass: every job that fits the remaining idle nodes
/// starts. Returns the positions started and the idle nodes left.
pub fn first_fit_schedule(queued_nodes: &[u32], idle_nodes: u32) -> (Vec<usize>, u32) {
    let mut idle = idle_nodes;
    let mut started = Vec::new();
    for (pos, &nodes) in queued_nodes.iter().enumerate() {
        if idle == 0 {
            break;
        }
        if nodes <= idle {
            idle -= nodes;
            started.push(pos);
        }
    }
    (started, idle)
}

/// Queued node demand over owned nodes. With nothing owned, any demand is an
/// infinite ratio.
pub fn ratio_of_adjusting(queued_demand: u64, owned: u32) -> f64 {
    if owned == 0 {
        if queued_demand == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        queued_demand as f64 / f64::from(owned)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbjAction {
    /// Queued demand exceeds `u` times owned: ask for the difference.
    RequestDr1(u32),
    /// The biggest queued job cannot fit even in everything owned.
    RequestDr2(u32),
    Release(u32),
    None,
}

/// One manager decision at a lease tick. `lower_bound` is never released
/// through.
pub fn flbnub_adjust(
    queued_nodes: &[u32],
    owned: u32,
    idle_owned: u32,
    lower_bound: u32,
    params: &PbjPolicyParams,
) -> PbjAction {
    let demand: u64 = queued_nodes.iter().map(|&n| u64::from(n)).sum();
    let ratio = ratio_of_adjusting(demand, owned);
    // with u < 1 the ratio can exceed u while demand <= owned; nothing to ask
    if ratio > params.u && demand > u64::from(owned) {
        let dr1 = demand - u64::from(owned);
        return PbjAction::RequestDr1(u32::try_from(dr1).unwrap_or(u32::MAX));
    }
    // earliest-queued among equal maxima
    let biggest = queued_nodes
        .iter()
        .copied()
        .fold(None, |best: Option<u32>, n| match best {
            Some(b) if b >= n => Some(b),
            _ => Some(n),
        });
    if let Some(big) = biggest {
        if big > owned {
            return PbjAction::RequestDr2(big - idle_owned);
        }
    }
    if ratio < params.v {
        let releasable = idle_owned.min(owned.saturating_sub(lower_bound));
        // decimal G is inexact in binary (0.29 * 100 = 28.99..), so nudge
        // before flooring
        let rss = ((params.g * f64::from(idle_owned) + 1e-9).floor() as u32).min(releasable);
        if rss >= 1 {
            return PbjAction::Release(rss);
        }
    }
    PbjAction::None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunningJob {
    pub id: usize,
    pub nodes: u32,
    pub start_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ForcedRelease {
    /// Jobs to kill, in kill order.
    pub killed: Vec<usize>,
    /// Idle nodes plus nodes of killed jobs.
    pub freed: u32,
    /// Nodes still missing after killing everything.
    pub shortfall: u32,
}

/// Order in which running jobs are killed: smallest first, latest start
/// first among equal sizes, then highest id.
pub fn kill_order(running: &[RunningJob]) -> Vec<RunningJob> {
    let mut order = running.to_vec();
    order.sort_by(|a, b| {
        a.nodes
            .cmp(&b.nodes)
            .then(b.start_s.cmp(&a.start_s))
            .then(b.id.cmp(&a.id))
    });
    order
}

/// Frees at least `needed` nodes, using idle nodes first and then killing
/// running jobs in [`kill_order`].
pub fn fb_force_release(running: &[RunningJob], needed: u32, idle_owned: u32) -> ForcedRelease {
    let mut freed = idle_owned;
    let mut killed = Vec::new();
    if freed < needed {
        for job in kill_order(running) {
            killed.push(job.id);
            freed += job.nodes;
            if freed >= needed {
                break;
            }
        }
    }
    ForcedRelease {
        killed,
        freed,
        shortfall: needed.saturating_sub(freed),
    }
}

/// Job bookkeeping of the batch TRE. Node accounting lives in the ledger.
#[derive(Debug, Clone)]
pub struct BatchTre {
    records: Vec<JobRecord>,
    queue: BTreeSet<(u64, u64, usize)>,
    running: BTreeSet<usize>,
}

impl BatchTre {
    pub fn new(trace: &JobTrace) -> Self {
        BatchTre {
            records: trace.jobs().iter().copied().map(JobRecord::new).collect(),
            queue: BTreeSet::new(),
            running: BTreeSet::new(),
        }
    }

    pub fn records(&self) -> &[JobRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<JobRecord> {
        self.records
    }

    pub fn job(&self, idx: usize) -> &Job {
        &self.records[idx].job
    }

    fn queue_key(&self, idx: usize) -> (u64, u64, usize) {
        let job = &self.records[idx].job;
        (job.submit_s, job.job_id, idx)
    }

    pub fn enqueue(&mut self, idx: usize) {
        let key = self.queue_key(idx);
        self.queue.insert(key);
    }

    pub fn queued_nodes(&self) -> Vec<u32> {
        self.queue
            .iter()
            .map(|&(_, _, i)| self.records[i].job.nodes)
            .collect()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn running_jobs(&self) -> Vec<RunningJob> {
        self.running
            .iter()
            .map(|&id| RunningJob {
                id,
                nodes: self.records[id].job.nodes,
                start_s: self.records[id].start_s.expect("running job has a start"),
            })
            .collect()
    }

    /// Marks a job running at `now_s` and returns its run number.
    pub fn start(&mut self, idx: usize, now_s: u64) -> u32 {
        let key = self.queue_key(idx);
        self.queue.remove(&key);
        self.running.insert(idx);
        let rec = &mut self.records[idx];
        rec.state = JobState::Running;
        rec.start_s = Some(now_s);
        rec.run += 1;
        rec.run
    }

    /// First-fit over the queue. Returns `(job index, run)` for each start.
    pub fn schedule(&mut self, idle_nodes: u32, now_s: u64) -> Vec<(usize, u32)> {
        let order: Vec<usize> = self.queue.iter().map(|&(_, _, i)| i).collect();
        let nodes: Vec<u32> = order.iter().map(|&i| self.records[i].job.nodes).collect();
        let (started, _) = first_fit_schedule(&nodes, idle_nodes);
        started
            .into_iter()
            .map(|pos| {
                let idx = order[pos];
                (idx, self.start(idx, now_s))
            })
            .collect()
    }

    /// Finishes a run. Returns `false` for a completion of a killed run.
    pub fn complete(&mut self, idx: usize, run: u32, now_s: u64) -> bool {
        let rec = &mut self.records[idx];
        if rec.run != run || rec.state != JobState::Running {
            return false;
        }
        rec.state = JobState::Completed;
        rec.completion_s = Some(now_s);
        self.running.remove(&idx);
        true
    }

    /// Kills a running job and puts it back at its original queue position.
    pub fn kill(&mut self, idx: usize) -> u32 {
        let rec = &mut self.records[idx];
        debug_assert_eq!(rec.state, JobState::Running);
        rec.state = JobState::KilledRequeued;
        rec.start_s = None;
        rec.kill_count += 1;
        let nodes = rec.job.nodes;
        self.running.remove(&idx);
        self.enqueue(idx);
        nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_fit_examples() {
        assert_eq!(first_fit_schedule(&[4, 8, 2], 5), (vec![0], 1));
        assert_eq!(first_fit_schedule(&[4, 8, 2], 0), (vec![], 0));
        assert_eq!(first_fit_schedule(&[4, 8, 2], 14), (vec![0, 1, 2], 0));
        assert_eq!(first_fit_schedule(&[4, 8, 2], 7), (vec![0, 2], 1));
    }

    #[test]
    fn ratio_examples() {
        assert!((ratio_of_adjusting(100, 60) - 1.666_666_666_7).abs() < 1e-9);
        assert_eq!(ratio_of_adjusting(0, 60), 0.0);
        assert_eq!(ratio_of_adjusting(60, 60), 1.0);
        assert_eq!(ratio_of_adjusting(5, 0), f64::INFINITY);
        assert_eq!(ratio_of_adjusting(0, 0), 0.0);
    }

    #[test]
    fn adjust_examples() {
        let p = PbjPolicyParams::default();
        assert_eq!(
            flbnub_adjust(&[50, 50], 60, 0, 0, &p),
            PbjAction::RequestDr1(40)
        );
        assert_eq!(
            flbnub_adjust(&[70], 60, 10, 0, &p),
            PbjAction::RequestDr2(60)
        );
        assert_eq!(flbnub_adjust(&[5], 60, 20, 0, &p), PbjAction::Release(10));
        assert_eq!(flbnub_adjust(&[30], 60, 20, 0, &p), PbjAction::None);
        assert_eq!(flbnub_adjust(&[3], 0, 0, 0, &p), PbjAction::RequestDr1(3));
    }

    #[test]
    fn release_respects_lower_bound() {
        let p = PbjPolicyParams::default();
        assert_eq!(flbnub_adjust(&[], 30, 20, 25, &p), PbjAction::Release(5));
        assert_eq!(flbnub_adjust(&[], 25, 25, 25, &p), PbjAction::None);
        assert_eq!(flbnub_adjust(&[], 60, 1, 0, &p), PbjAction::None);
    }

    #[test]
    fn dr2_with_tied_biggest_jobs() {
        let p = PbjPolicyParams {
            u: 5.0,
            ..Default::default()
        };
        assert_eq!(
            flbnub_adjust(&[70, 10, 70], 60, 10, 0, &p),
            PbjAction::RequestDr2(60)
        );
    }

    #[test]
    fn params_validation() {
        assert!(PbjPolicyParams::default().validate().is_ok());
        let bad = PbjPolicyParams {
            v: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PbjPolicyParams {
            g: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PbjPolicyParams {
            lease_s: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn rj(id: usize, nodes: u32, start_s: u64) -> RunningJob {
        RunningJob { id, nodes, start_s }
    }

    #[test]
    fn kill_examples() {
        let running = [rj(0, 8, 10), rj(1, 4, 5), rj(2, 4, 7)];
        let r = fb_force_release(&running, 6, 0);
        assert_eq!(r.killed, vec![2, 1]);
        assert_eq!(r.freed, 8);
        assert_eq!(r.shortfall, 0);

        assert_eq!(fb_force_release(&running, 6, 6).killed, Vec::<usize>::new());
        let r = fb_force_release(&[rj(0, 8, 10)], 6, 0);
        assert_eq!((r.killed, r.freed), (vec![0], 8));

        let r = fb_force_release(&[rj(0, 2, 1)], 6, 1);
        assert_eq!(r.killed, vec![0]);
        assert_eq!(r.shortfall, 3);
    }

    fn trace() -> JobTrace {
        let jobs = [(0, 4), (1, 8), (2, 2)]
            .iter()
            .enumerate()
            .map(|(i, &(submit_s, nodes))| Job {
                job_id: i as u64 + 1,
                submit_s,
                runtime_s: 100,
                nodes,
            })
            .collect();
        JobTrace::new(jobs, 1_000)
    }

    #[test]
    fn killed_job_requeues_in_submit_order() {
        let mut tre = BatchTre::new(&trace());
        for i in 0..3 {
            tre.enqueue(i);
        }
        let started = tre.schedule(6, 10);
        assert_eq!(started, vec![(0, 1), (2, 1)]);
        assert_eq!(tre.queued_nodes(), vec![8]);
        tre.kill(0);
        assert_eq!(tre.queued_nodes(), vec![4, 8]);
        assert_eq!(tre.records()[0].kill_count, 1);
        assert!(!tre.complete(0, 1, 110));
        let restarted = tre.schedule(4, 20);
        assert_eq!(restarted, vec![(0, 2)]);
        assert!(tre.complete(0, 2, 120));
        let rec = &tre.records()[0];
        assert_eq!(rec.turnaround_s(), Some(120));
        assert_eq!(rec.execution_s(), Some(100));
    }
}
