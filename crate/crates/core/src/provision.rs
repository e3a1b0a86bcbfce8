//! The resource provision service: sets up one of four regimes, drives the
//! event engine and collects metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{self, Event, EventKind, EventQueue, Handler, RunStats};
use crate::error::{Error, Result};
use crate::ledger::{Capacity, ClusterLedger, Pool};
use crate::metrics::{self, Adjustment, AdjustmentKind, AllocSample, MetricsReport};
use crate::pbj::{self, BatchTre, JobRecord, PbjAction, PbjPolicyParams};
use crate::runtime_env::{CoordinationGroup, CoordinationModel, RuntimeEnvSpec, WorkloadType};
use crate::traces::{JobTrace, WsDemandTrace};
use crate::ws::{self, WsDelta, WsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    /// Dedicated cluster, static split.
    Dcs,
    PhoenixFb,
    PhoenixFlbnub,
    Ec2Rightscale,
}

impl RegimeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeKind::Dcs => "dcs",
            RegimeKind::PhoenixFb => "phoenix_fb",
            RegimeKind::PhoenixFlbnub => "phoenix_flbnub",
            RegimeKind::Ec2Rightscale => "ec2_rightscale",
        }
    }

    fn has_lease_ticks(self) -> bool {
        matches!(self, RegimeKind::PhoenixFb | RegimeKind::PhoenixFlbnub)
    }
}

/// Everything one run needs besides the traces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub regime: RegimeKind,
    /// Peak batch demand of the scaled trace pair.
    pub prc_pbj: u32,
    /// Peak web-service demand of the scaled trace pair.
    pub prc_ws: u32,
    /// FB cluster size; defaults to `prc_pbj + prc_ws`.
    pub cluster_size: Option<u32>,
    /// FLB-NUB batch lower bound, the coordinated pool size B.
    pub b: u32,
    pub policy: PbjPolicyParams,
    pub setup_latency_s: u64,
    /// Metrics window; defaults to the batch trace duration.
    pub horizon_s: Option<u64>,
    /// Explicit environment documents replacing the derived bounds.
    pub group: Option<CoordinationGroup>,
    /// Check ledger conservation after every event.
    pub assert_invariants: bool,
}

impl RunConfig {
    pub fn new(regime: RegimeKind, prc_pbj: u32, prc_ws: u32) -> Self {
        RunConfig {
            regime,
            prc_pbj,
            prc_ws,
            cluster_size: None,
            b: 0,
            policy: PbjPolicyParams::default(),
            setup_latency_s: 0,
            horizon_s: None,
            group: None,
            assert_invariants: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub records: Vec<JobRecord>,
    pub series: Vec<AllocSample>,
    pub adjustments: Vec<Adjustment>,
    pub stats: RunStats,
    pub horizon_s: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Payload {
    Submit(usize),
    Complete { job: usize, run: u32 },
    Demand(u32),
    Tick,
    LeaseEnd(usize),
    Setup(u64),
}

struct Sim {
    regime: RegimeKind,
    policy: PbjPolicyParams,
    pbj_lower: u32,
    pbj_latency_s: u64,
    ws_latency_s: u64,
    assert_invariants: bool,
    ledger: ClusterLedger,
    tre: BatchTre,
    ws: WsState,
    series: Vec<AllocSample>,
    adjustments: Vec<Adjustment>,
    /// EC2: when each job's lease began.
    lease_start: Vec<Option<u64>>,
    /// EC2: setups that carry a job to start.
    setup_jobs: HashMap<u64, usize>,
}

/// Lower bounds and coordinated pool for a coordinated regime.
fn derive_group(
    cfg: &RunConfig,
    ws_trace: &WsDemandTrace,
    capacity: Option<u32>,
) -> Result<CoordinationGroup> {
    let model = match cfg.regime {
        RegimeKind::PhoenixFb => CoordinationModel::Fb,
        RegimeKind::PhoenixFlbnub => CoordinationModel::FlbNub,
        _ => unreachable!("only coordinated regimes derive groups"),
    };
    if let Some(group) = &cfg.group {
        if group.model() != model {
            return Err(Error::Config(format!(
                "{} needs {model:?} environments, documents declare {:?}",
                cfg.regime.as_str(),
                group.model()
            )));
        }
        return Ok(group.clone());
    }
    let ws_lower = ws_trace.initial_demand();
    let pbj_lower = match (model, capacity) {
        (CoordinationModel::Fb, Some(c)) => c.saturating_sub(ws_lower),
        _ => cfg.b,
    };
    let mut pbj = RuntimeEnvSpec::coordinated(WorkloadType::ParallelBatchJobs, model, pbj_lower);
    let mut ws = RuntimeEnvSpec::coordinated(WorkloadType::WebService, model, ws_lower);
    pbj.setup_latency_s = cfg.setup_latency_s;
    ws.setup_latency_s = cfg.setup_latency_s;
    CoordinationGroup::new(pbj, ws, cfg.b)
}

impl Sim {
    fn now_sample(&self, time_s: u64) -> AllocSample {
        AllocSample {
            time_s,
            // nodes in setup are already leased, so they count as consumed
            pbj_owned: self.ledger.pbj_owned() + self.ledger.pending_to(Pool::Pbj),
            pbj_in_use: self.ledger.pbj_in_use(),
            ws_owned: self.ledger.ws_owned() + self.ledger.pending_to(Pool::Ws),
            provider_idle: self.ledger.provider_idle(),
        }
    }

    fn adjust(&mut self, time_s: u64, kind: AdjustmentKind, tre: Pool, nodes: u32) {
        self.adjustments.push(Adjustment {
            time_s,
            kind,
            tre,
            nodes,
        });
    }

    fn latency_for(&self, dest: Pool) -> u64 {
        match dest {
            Pool::Pbj => self.pbj_latency_s,
            Pool::Ws => self.ws_latency_s,
            Pool::Provider => 0,
        }
    }

    /// Ledger transfer that schedules the setup completion when needed.
    fn transfer(
        &mut self,
        q: &mut EventQueue<Payload>,
        from: Pool,
        to: Pool,
        n: u32,
    ) -> Result<Option<u64>> {
        let now = q.now_s();
        let latency = self.latency_for(to);
        match self.ledger.transfer(from, to, n, latency, now)? {
            Some(p) => {
                q.schedule(p.ready_s, EventKind::SetupDone, Payload::Setup(p.id))?;
                Ok(Some(p.id))
            }
            None => Ok(None),
        }
    }

    fn start_job(&mut self, q: &mut EventQueue<Payload>, idx: usize) -> Result<()> {
        let now = q.now_s();
        let job = *self.tre.job(idx);
        self.ledger.start_jobs(job.nodes, now)?;
        let run = self.tre.start(idx, now);
        q.schedule(
            now + job.runtime_s,
            EventKind::JobComplete,
            Payload::Complete { job: idx, run },
        )
    }

    fn schedule_pass(&mut self, q: &mut EventQueue<Payload>) -> Result<()> {
        if self.regime == RegimeKind::Ec2Rightscale {
            return Ok(());
        }
        let now = q.now_s();
        for (idx, run) in self.tre.schedule(self.ledger.pbj_idle(), now) {
            let job = *self.tre.job(idx);
            self.ledger.start_jobs(job.nodes, now)?;
            q.schedule(
                now + job.runtime_s,
                EventKind::JobComplete,
                Payload::Complete { job: idx, run },
            )?;
        }
        Ok(())
    }

    /// Lease tick: hand every idle coordinated node to the batch TRE, then
    /// let the FLB-NUB manager adjust.
    fn on_tick(&mut self, q: &mut EventQueue<Payload>) -> Result<()> {
        let now = q.now_s();
        let idle = self.ledger.provider_idle();
        if idle > 0 {
            self.transfer(q, Pool::Provider, Pool::Pbj, idle)?;
            self.adjust(now, AdjustmentKind::Provision, Pool::Pbj, idle);
        }
        if self.regime == RegimeKind::PhoenixFlbnub {
            let action = pbj::flbnub_adjust(
                &self.tre.queued_nodes(),
                self.ledger.pbj_owned(),
                self.ledger.pbj_idle(),
                self.pbj_lower,
                &self.policy,
            );
            match action {
                PbjAction::RequestDr1(n) | PbjAction::RequestDr2(n) if n > 0 => {
                    self.transfer(q, Pool::Provider, Pool::Pbj, n)?;
                    self.adjust(now, AdjustmentKind::Request, Pool::Pbj, n);
                }
                PbjAction::Release(n) => {
                    self.transfer(q, Pool::Pbj, Pool::Provider, n)?;
                    self.adjust(now, AdjustmentKind::Release, Pool::Pbj, n);
                }
                _ => {}
            }
        }
        self.schedule_pass(q)
    }

    /// Brings WS holdings in line with its demand.
    fn reconcile_ws(&mut self, q: &mut EventQueue<Payload>) -> Result<()> {
        let now = q.now_s();
        let delta = ws::on_demand_change(
            self.ledger.ws_owned(),
            self.ledger.pending_to(Pool::Ws),
            self.ws.current_demand,
        );
        match delta {
            WsDelta::None => Ok(()),
            WsDelta::Release(n) => {
                self.transfer(q, Pool::Ws, Pool::Provider, n)?;
                self.adjust(now, AdjustmentKind::Release, Pool::Ws, n);
                Ok(())
            }
            WsDelta::Request(n) if self.regime == RegimeKind::PhoenixFb => {
                let from_idle = n.min(self.ledger.provider_idle());
                if from_idle > 0 {
                    self.transfer(q, Pool::Provider, Pool::Ws, from_idle)?;
                }
                let short = n - from_idle;
                self.adjust(now, AdjustmentKind::Request, Pool::Ws, n);
                if short > 0 {
                    self.force_release(q, short)?;
                }
                Ok(())
            }
            WsDelta::Request(n) => {
                self.transfer(q, Pool::Provider, Pool::Ws, n)?;
                self.adjust(now, AdjustmentKind::Request, Pool::Ws, n);
                Ok(())
            }
        }
    }

    /// FB: take `needed` nodes from the batch TRE for the web service,
    /// killing jobs when its idle nodes do not suffice.
    fn force_release(&mut self, q: &mut EventQueue<Payload>, needed: u32) -> Result<()> {
        let now = q.now_s();
        let plan = pbj::fb_force_release(&self.tre.running_jobs(), needed, self.ledger.pbj_idle());
        if plan.shortfall > 0 {
            return Err(Error::Config(format!(
                "t={now}: web-service demand exceeds the coordinated pool by {} nodes",
                plan.shortfall
            )));
        }
        for idx in plan.killed {
            let nodes = self.tre.kill(idx);
            self.ledger.finish_jobs(nodes, now)?;
        }
        self.transfer(q, Pool::Pbj, Pool::Ws, needed)?;
        self.adjust(now, AdjustmentKind::Release, Pool::Pbj, needed);
        self.schedule_pass(q)
    }

    fn ec2_submit(&mut self, q: &mut EventQueue<Payload>, idx: usize) -> Result<()> {
        let now = q.now_s();
        let nodes = self.tre.job(idx).nodes;
        self.lease_start[idx] = Some(now);
        self.adjust(now, AdjustmentKind::Request, Pool::Pbj, nodes);
        match self.transfer(q, Pool::Provider, Pool::Pbj, nodes)? {
            Some(setup) => {
                self.setup_jobs.insert(setup, idx);
                Ok(())
            }
            None => self.start_job(q, idx),
        }
    }

    /// EC2: nodes stay leased until the end of the lease unit in which the
    /// job finished, counted from the lease start.
    fn ec2_complete(&mut self, q: &mut EventQueue<Payload>, idx: usize) -> Result<()> {
        let now = q.now_s();
        let start = self.lease_start[idx].expect("leased job has a start");
        let lease = self.policy.lease_s;
        let units = (now - start).div_ceil(lease).max(1);
        let end = start + units * lease;
        if end == now {
            self.ec2_release(q, idx)
        } else {
            q.schedule(end, EventKind::LeaseTimer, Payload::LeaseEnd(idx))
        }
    }

    fn ec2_release(&mut self, q: &mut EventQueue<Payload>, idx: usize) -> Result<()> {
        let now = q.now_s();
        let nodes = self.tre.job(idx).nodes;
        self.transfer(q, Pool::Pbj, Pool::Provider, nodes)?;
        self.adjust(now, AdjustmentKind::Release, Pool::Pbj, nodes);
        Ok(())
    }
}

impl Handler for Sim {
    type Payload = Payload;

    fn handle(&mut self, ev: Event<Payload>, q: &mut EventQueue<Payload>) -> Result<()> {
        let now = ev.time_s;
        self.ws.accrue(now, self.ledger.ws_owned());
        match ev.payload {
            Payload::Submit(idx) => {
                if self.regime == RegimeKind::Ec2Rightscale {
                    self.ec2_submit(q, idx)?;
                } else {
                    self.tre.enqueue(idx);
                    self.schedule_pass(q)?;
                }
            }
            Payload::Complete { job, run } => {
                if self.tre.complete(job, run, now) {
                    self.ledger.finish_jobs(self.tre.job(job).nodes, now)?;
                    if self.regime == RegimeKind::Ec2Rightscale {
                        self.ec2_complete(q, job)?;
                    } else {
                        self.schedule_pass(q)?;
                    }
                }
            }
            Payload::Demand(nodes) => {
                self.ws.current_demand = nodes;
                if self.regime != RegimeKind::Dcs {
                    self.reconcile_ws(q)?;
                }
            }
            Payload::Tick => self.on_tick(q)?,
            Payload::LeaseEnd(idx) => self.ec2_release(q, idx)?,
            Payload::Setup(id) => {
                let entry = self.ledger.complete_setup(id, now)?;
                if let Some(idx) = self.setup_jobs.remove(&id) {
                    self.start_job(q, idx)?;
                } else if entry.dest == Pool::Pbj {
                    self.schedule_pass(q)?;
                } else {
                    self.reconcile_ws(q)?;
                }
            }
        }
        if self.assert_invariants {
            self.ledger.check_conservation(now)?;
        }
        Ok(())
    }

    fn after_instant(&mut self, now_s: u64) -> Result<()> {
        let s = self.now_sample(now_s);
        self.series.push(s);
        Ok(())
    }
}

/// Runs one regime over a batch trace and a web-service demand trace.
pub fn simulate(cfg: &RunConfig, batch: &JobTrace, ws_trace: &WsDemandTrace) -> Result<RunOutput> {
    cfg.policy.validate()?;
    let horizon_s = cfg.horizon_s.unwrap_or(batch.duration_s());
    let sum = cfg.prc_pbj + cfg.prc_ws;

    let (capacity, config_size) = match cfg.regime {
        RegimeKind::Dcs => (Capacity::Finite(sum), Some(sum)),
        RegimeKind::PhoenixFb => {
            let c = cfg.cluster_size.unwrap_or(sum);
            (Capacity::Finite(c), Some(c))
        }
        RegimeKind::PhoenixFlbnub | RegimeKind::Ec2Rightscale => {
            (Capacity::Unbounded { reserved: 0 }, None)
        }
    };

    let group = match cfg.regime {
        RegimeKind::PhoenixFb | RegimeKind::PhoenixFlbnub => {
            let g = derive_group(cfg, ws_trace, capacity.finite())?;
            if let Some(v) = g.check_capacity(capacity.finite()).first() {
                return Err(Error::Config(v.to_string()));
            }
            Some(g)
        }
        _ => None,
    };
    if cfg.regime == RegimeKind::PhoenixFb {
        let c = capacity.finite().expect("FB is finite");
        if ws_trace.peak_demand() > c {
            return Err(Error::Config(format!(
                "web-service peak {} exceeds FB cluster size {c}",
                ws_trace.peak_demand()
            )));
        }
    }
    let capacity = match (cfg.regime, &group) {
        (RegimeKind::PhoenixFlbnub, Some(g)) => Capacity::Unbounded {
            reserved: g.reserved_nodes(),
        },
        _ => capacity,
    };

    let ws_initial = ws_trace.initial_demand();
    let (pbj_start, ws_start) = match (cfg.regime, &group) {
        (RegimeKind::Dcs, _) => (cfg.prc_pbj, cfg.prc_ws),
        (_, Some(g)) => (g.pbj.lower_bound, g.ws.lower_bound),
        (_, None) => (0, ws_initial),
    };
    let (pbj_latency_s, ws_latency_s) = group
        .as_ref()
        .map_or((cfg.setup_latency_s, cfg.setup_latency_s), |g| {
            (g.pbj.setup_latency_s, g.ws.setup_latency_s)
        });

    let mut ledger = ClusterLedger::new(capacity);
    ledger.transfer(Pool::Provider, Pool::Pbj, pbj_start, 0, 0)?;
    ledger.transfer(Pool::Provider, Pool::Ws, ws_start, 0, 0)?;

    let mut sim = Sim {
        regime: cfg.regime,
        policy: cfg.policy,
        pbj_lower: group.as_ref().map_or(0, |g| g.pbj.lower_bound),
        pbj_latency_s,
        ws_latency_s,
        assert_invariants: cfg.assert_invariants,
        ledger,
        tre: BatchTre::new(batch),
        ws: WsState::new(ws_initial),
        series: Vec::new(),
        adjustments: Vec::new(),
        lease_start: vec![None; batch.len()],
        setup_jobs: HashMap::new(),
    };
    sim.series.push(sim.now_sample(0));
    if cfg.assert_invariants {
        sim.ledger.check_conservation(0)?;
    }

    let mut queue = EventQueue::new();
    for (idx, job) in batch.jobs().iter().enumerate() {
        if job.submit_s <= horizon_s {
            queue.schedule(job.submit_s, EventKind::JobSubmit, Payload::Submit(idx))?;
        }
    }
    for s in ws_trace.samples() {
        if s.time_s <= horizon_s {
            queue.schedule(
                s.time_s,
                EventKind::WsDemandChange,
                Payload::Demand(s.nodes),
            )?;
        }
    }
    if cfg.regime.has_lease_ticks() {
        let lease = cfg.policy.lease_s;
        let mut t = lease;
        while t <= horizon_s {
            queue.schedule(t, EventKind::LeaseTimer, Payload::Tick)?;
            t += lease;
        }
    }

    let stats = engine::run(&mut queue, &mut sim, horizon_s)?;
    sim.ws.accrue(horizon_s, sim.ledger.ws_owned());

    let records = sim.tre.into_records();
    let report = metrics::finalize(
        &records,
        &sim.series,
        &sim.adjustments,
        horizon_s,
        config_size,
        sim.ws.unmet_node_s,
    );
    Ok(RunOutput {
        report,
        records,
        series: metrics::normalize_series(&sim.series),
        adjustments: sim.adjustments,
        stats,
        horizon_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbj::JobState;
    use crate::traces::{DemandSample, Job};

    fn jobs(spec: &[(u64, u64, u32)]) -> JobTrace {
        let jobs = spec
            .iter()
            .enumerate()
            .map(|(i, &(submit_s, runtime_s, nodes))| Job {
                job_id: i as u64 + 1,
                submit_s,
                runtime_s,
                nodes,
            })
            .collect();
        JobTrace::new(jobs, 0)
    }

    fn demand(spec: &[(u64, u32)]) -> WsDemandTrace {
        let samples = spec
            .iter()
            .map(|&(time_s, nodes)| DemandSample { time_s, nodes })
            .collect();
        WsDemandTrace::new(samples, 0).unwrap()
    }

    fn run(cfg: RunConfig, batch: &JobTrace, ws: &WsDemandTrace) -> RunOutput {
        let cfg = RunConfig {
            assert_invariants: true,
            ..cfg
        };
        simulate(&cfg, batch, ws).unwrap()
    }

    #[test]
    fn empty_run_is_zeroed_except_static_consumption() {
        let batch = JobTrace::new(vec![], 3_600);
        let ws = WsDemandTrace::constant(0, 3_600);
        let out = run(RunConfig::new(RegimeKind::Ec2Rightscale, 1, 1), &batch, &ws);
        assert_eq!(out.report, MetricsReport::zeroed(None));
    }

    #[test]
    fn dcs_is_static() {
        let batch = jobs(&[(0, 100, 8), (10, 50, 8), (20, 10, 2)]).with_duration(7_200);
        let ws = demand(&[(0, 2), (100, 6), (300, 1)]);
        let out = run(RunConfig::new(RegimeKind::Dcs, 8, 6), &batch, &ws);
        let r = &out.report;
        assert_eq!(r.mgmt_overhead_adjustments, 0);
        assert_eq!(r.peak_resource_nodes, 14);
        assert_eq!(r.total_resource_node_hours, 28.0);
        assert_eq!(r.config_size_nodes, Some(14));
        assert_eq!(r.completed_jobs, 3);
        // second 8-node job waits for the first
        assert_eq!(out.records[1].start_s, Some(100));
        // first fit at t=100 gives all 8 idle nodes to the earlier 8-node job
        assert_eq!(out.records[2].start_s, Some(150));
        assert!(out
            .series
            .iter()
            .all(|s| s.pbj_owned == 8 && s.ws_owned == 6));
    }

    #[test]
    fn ec2_holds_nodes_to_lease_boundary() {
        let batch = jobs(&[(100, 3_500, 2), (200, 3_700, 1)]).with_duration(20_000);
        let ws = WsDemandTrace::constant(0, 20_000);
        let out = run(RunConfig::new(RegimeKind::Ec2Rightscale, 2, 1), &batch, &ws);
        for rec in &out.records {
            assert_eq!(rec.start_s, Some(rec.job.submit_s));
            assert_eq!(rec.turnaround_s(), Some(rec.job.runtime_s));
        }
        // job 1 held [100, 3700), job 2 held [200, 7400)
        assert_eq!(
            out.report.pbj_node_hours,
            (2.0 * 3_600.0 + 7_200.0) / 3_600.0
        );
        let at = |t| {
            out.series
                .iter()
                .rev()
                .find(|s| s.time_s <= t)
                .unwrap()
                .pbj_owned
        };
        assert_eq!(at(3_699), 3);
        assert_eq!(at(3_700), 1);
        assert_eq!(at(7_400), 0);
        assert_eq!(out.report.mgmt_overhead_adjustments, 4);
    }

    #[test]
    fn fb_tick_sweeps_ws_releases_to_pbj() {
        let batch = JobTrace::new(vec![], 10_000);
        let ws = demand(&[(0, 30), (100, 10)]);
        let cfg = RunConfig {
            cluster_size: Some(100),
            policy: PbjPolicyParams {
                lease_s: 3_600,
                ..Default::default()
            },
            ..RunConfig::new(RegimeKind::PhoenixFb, 70, 30)
        };
        let out = run(cfg, &batch, &ws);
        let at = |t| *out.series.iter().rev().find(|s| s.time_s <= t).unwrap();
        assert_eq!(at(0).pbj_owned, 70);
        assert_eq!(at(100).provider_idle, 20);
        assert_eq!(at(3_599).pbj_owned, 70);
        assert_eq!(at(3_600).pbj_owned, 90);
        assert_eq!(at(3_600).provider_idle, 0);
        // ws release, then one provisioning tick
        assert_eq!(out.report.mgmt_overhead_adjustments, 2);
    }

    #[test]
    fn fb_spike_kills_smallest_latest_jobs() {
        // 100-node cluster, WS starts at 10 so PBJ owns 90
        let batch = jobs(&[
            (0, 10_000, 40),
            (5, 10_000, 20),
            (7, 10_000, 20),
            (8, 10_000, 5),
        ])
        .with_duration(20_000);
        let ws = demand(&[(0, 10), (100, 40)]);
        let cfg = RunConfig {
            cluster_size: Some(100),
            ..RunConfig::new(RegimeKind::PhoenixFb, 90, 40)
        };
        let out = run(cfg, &batch, &ws);
        // idle 5, needs 30: kill 5@8 (freed 10), 20@7 (freed 30)
        let kills: Vec<u32> = out.records.iter().map(|r| r.kill_count).collect();
        assert_eq!(kills, vec![0, 0, 1, 1]);
        assert_eq!(out.report.killed_runs, 2);
        let at100 = *out.series.iter().find(|s| s.time_s == 100).unwrap();
        assert_eq!(at100.ws_owned, 40);
        assert_eq!(at100.pbj_owned, 60);
        assert_eq!(at100.pbj_in_use, 60);
        // both victims restart when the 40-node job finishes
        assert_eq!(out.records[2].start_s, Some(10_000));
        assert_eq!(out.records[3].start_s, Some(10_000));
        assert_eq!(out.records[3].state, JobState::Completed);
    }

    #[test]
    fn fb_rejects_ws_above_cluster() {
        let batch = JobTrace::new(vec![], 100);
        let ws = demand(&[(0, 10), (50, 120)]);
        let cfg = RunConfig {
            cluster_size: Some(100),
            ..RunConfig::new(RegimeKind::PhoenixFb, 90, 120)
        };
        assert!(matches!(simulate(&cfg, &batch, &ws), Err(Error::Config(_))));
    }

    #[test]
    fn flbnub_requests_dr1_and_releases_to_bound() {
        // B = 10; 40 nodes of work queued at the first tick
        let batch = jobs(&[
            (0, 5_000, 10),
            (1, 5_000, 10),
            (2, 5_000, 10),
            (3, 5_000, 10),
        ])
        .with_duration(4 * 3_600);
        let ws = WsDemandTrace::constant(5, 4 * 3_600);
        let cfg = RunConfig {
            b: 10,
            ..RunConfig::new(RegimeKind::PhoenixFlbnub, 10, 5)
        };
        let out = run(cfg, &batch, &ws);
        let at = |t| *out.series.iter().rev().find(|s| s.time_s <= t).unwrap();
        assert_eq!(at(0).pbj_owned, 10);
        // queue 30 over owned 10 -> DR1 = 20
        assert_eq!(at(3_600).pbj_owned, 30);
        assert_eq!(at(3_600).pbj_in_use, 30);
        assert_eq!(out.records[3].start_s, Some(5_000));
        // t=7200: queue empty but nothing idle, so nothing to release
        assert_eq!(at(7_200).pbj_owned, 30);
        // t=10800: all idle, release floor(0.5 * 30)
        assert_eq!(at(10_800).pbj_owned, 15);
        // floor(0.5 * 15) = 7 would cross B, capped at 5
        assert_eq!(at(14_400).pbj_owned, 10);
        assert!(out.series.iter().all(|s| s.pbj_owned >= 10));
    }

    #[test]
    fn setup_latency_delays_usable_nodes() {
        let batch = JobTrace::new(vec![], 2_000);
        let ws = demand(&[(0, 2), (100, 8)]);
        let cfg = RunConfig {
            setup_latency_s: 300,
            ..RunConfig::new(RegimeKind::Ec2Rightscale, 1, 8)
        };
        let out = run(cfg, &batch, &ws);
        let at = |t| {
            out.series
                .iter()
                .rev()
                .find(|s| s.time_s <= t)
                .unwrap()
                .ws_owned
        };
        // leased from the request on, usable only after setup
        assert_eq!(at(99), 2);
        assert_eq!(at(100), 8);
        assert_eq!(out.report.ws_unmet_node_hours, 6.0 * 300.0 / 3_600.0);
    }

    #[test]
    fn ec2_job_waits_for_setup() {
        let batch = jobs(&[(0, 100, 4)]).with_duration(10_000);
        let ws = WsDemandTrace::constant(0, 10_000);
        let cfg = RunConfig {
            setup_latency_s: 60,
            ..RunConfig::new(RegimeKind::Ec2Rightscale, 4, 1)
        };
        let out = run(cfg, &batch, &ws);
        assert_eq!(out.records[0].start_s, Some(60));
        assert_eq!(out.records[0].completion_s, Some(160));
        assert_eq!(out.report.pbj_node_hours, 4.0);
    }

    #[test]
    fn explicit_group_must_match_regime() {
        let fb = CoordinationGroup::new(
            RuntimeEnvSpec::coordinated(WorkloadType::ParallelBatchJobs, CoordinationModel::Fb, 5),
            RuntimeEnvSpec::coordinated(WorkloadType::WebService, CoordinationModel::Fb, 5),
            0,
        )
        .unwrap();
        let cfg = RunConfig {
            group: Some(fb),
            ..RunConfig::new(RegimeKind::PhoenixFlbnub, 5, 5)
        };
        let batch = JobTrace::new(vec![], 100);
        assert!(simulate(&cfg, &batch, &WsDemandTrace::constant(1, 100)).is_err());
    }
}
