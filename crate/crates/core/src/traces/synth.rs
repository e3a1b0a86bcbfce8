//! Seeded synthetic workloads used when archive traces are unavailable.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DemandSample, Job, JobTrace, WsDemandTrace};
use crate::error::{Error, Result};

/// Half-open interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstWindow {
    pub start_s: u64,
    pub end_s: u64,
}

impl BurstWindow {
    pub fn new(start_s: u64, end_s: u64) -> Self {
        BurstWindow { start_s, end_s }
    }

    fn len(&self) -> u64 {
        self.end_s - self.start_s
    }
}

fn check_windows(windows: &[BurstWindow], duration_s: u64) -> Result<Vec<BurstWindow>> {
    let mut sorted = windows.to_vec();
    sorted.sort_by_key(|w| w.start_s);
    for w in &sorted {
        if w.end_s <= w.start_s || w.end_s > duration_s {
            return Err(Error::Precondition(format!(
                "burst window [{}, {}) must be non-empty and within [0, {duration_s})",
                w.start_s, w.end_s
            )));
        }
    }
    if let Some(p) = sorted.windows(2).find(|p| p[1].start_s < p[0].end_s) {
        return Err(Error::Precondition(format!(
            "burst windows [{}, {}) and [{}, {}) overlap",
            p[0].start_s, p[0].end_s, p[1].start_s, p[1].end_s
        )));
    }
    Ok(sorted)
}

const RAMP_STEP_S: u64 = 300;

/// Constant `base_nodes` demand with a ramp-plateau-ramp excursion to
/// `peak_nodes` inside every burst window. Ramp levels carry a seeded ±1 node
/// jitter; plateaus sit exactly on the peak.
pub fn synth_bursty_ws(
    duration_s: u64,
    base_nodes: u32,
    peak_nodes: u32,
    burst_windows: &[BurstWindow],
    seed: u64,
) -> Result<WsDemandTrace> {
    if base_nodes == 0 || peak_nodes < base_nodes {
        return Err(Error::Precondition(format!(
            "need 1 <= base_nodes <= peak_nodes, got base {base_nodes} peak {peak_nodes}"
        )));
    }
    let windows = check_windows(burst_windows, duration_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![DemandSample {
        time_s: 0,
        nodes: base_nodes,
    }];
    let mut push = |time_s: u64, nodes: u32| {
        let last = samples.last_mut().expect("non-empty");
        if last.time_s == time_s {
            last.nodes = nodes;
        } else if last.nodes != nodes {
            samples.push(DemandSample { time_s, nodes });
        }
    };
    let span = f64::from(peak_nodes - base_nodes);
    for w in &windows {
        let steps = w.len().div_ceil(RAMP_STEP_S);
        for k in 0..steps {
            let t = w.start_s + k * RAMP_STEP_S;
            let frac = k as f64 / steps as f64;
            let level = if steps < 4 || (0.25..0.75).contains(&frac) {
                1.0
            } else if frac < 0.25 {
                frac / 0.25
            } else {
                (1.0 - frac) / 0.25
            };
            let nodes = if level >= 1.0 {
                peak_nodes
            } else {
                let jitter: i64 = rng.gen_range(-1..=1);
                let v = i64::from(base_nodes) + (span * level).round() as i64 + jitter;
                v.clamp(
                    i64::from(base_nodes),
                    i64::from(peak_nodes.saturating_sub(1).max(base_nodes)),
                ) as u32
            };
            push(t, nodes);
        }
        if w.end_s < duration_s {
            push(w.end_s, base_nodes);
        }
    }
    WsDemandTrace::new(samples, duration_s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthBatchParams {
    pub duration_s: u64,
    /// Reference cluster size for the utilization target.
    pub capacity: u32,
    /// Largest job; at least one job has exactly this size.
    pub peak_nodes: u32,
    pub target_utilization: f64,
    pub min_runtime_s: u64,
    pub max_runtime_s: u64,
    /// Periods of elevated submission density.
    #[serde(default)]
    pub busy_windows: Vec<BurstWindow>,
    /// Arrival density inside busy windows relative to outside.
    #[serde(default = "default_busy_weight")]
    pub busy_weight: f64,
    /// Delay submissions so that jobs started on arrival never exceed
    /// `capacity` nodes in total.
    #[serde(default)]
    pub no_contention: bool,
}

fn default_busy_weight() -> f64 {
    1.0
}

fn draw_nodes(rng: &mut ChaCha8Rng, peak: u32) -> u32 {
    let max_exp = 31 - peak.leading_zeros();
    // weight 1/(k+1) over power-of-two sizes favors small jobs
    let weights: Vec<f64> = (0..=max_exp).map(|k| 1.0 / f64::from(k + 1)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    let mut exp = max_exp;
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            exp = k as u32;
            break;
        }
        x -= w;
    }
    let size = (1u32 << exp).min(peak);
    if size > 2 && rng.gen_bool(0.2) {
        rng.gen_range(size / 2 + 1..=size)
    } else {
        size
    }
}

fn draw_submit(rng: &mut ChaCha8Rng, params: &SynthBatchParams, windows: &[BurstWindow]) -> u64 {
    let busy: u64 = windows.iter().map(BurstWindow::len).sum();
    let extra = (params.busy_weight - 1.0).max(0.0);
    let mass = params.duration_s as f64 + extra * busy as f64;
    let x = rng.gen::<f64>() * mass;
    if x < params.duration_s as f64 {
        return x as u64;
    }
    let mut rest = (x - params.duration_s as f64) / extra.max(f64::MIN_POSITIVE);
    for w in windows {
        if rest < w.len() as f64 {
            return w.start_s + rest as u64;
        }
        rest -= w.len() as f64;
    }
    windows.last().map_or(0, |w| w.end_s - 1)
}

/// Batch workload with log-uniform runtimes and power-of-two-biased sizes,
/// generated until the offered work reaches the utilization target.
pub fn synth_batch(params: &SynthBatchParams, seed: u64) -> Result<JobTrace> {
    if params.peak_nodes == 0 || params.capacity < params.peak_nodes {
        return Err(Error::Precondition(
            "need 1 <= peak_nodes <= capacity".into(),
        ));
    }
    if params.min_runtime_s == 0 || params.max_runtime_s < params.min_runtime_s {
        return Err(Error::Precondition(
            "need 1 <= min_runtime_s <= max_runtime_s".into(),
        ));
    }
    if params.target_utilization.is_nan()
        || params.target_utilization <= 0.0
        || params.duration_s == 0
    {
        return Err(Error::Precondition(
            "need positive utilization and duration".into(),
        ));
    }
    let windows = check_windows(&params.busy_windows, params.duration_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_work =
        params.target_utilization * f64::from(params.capacity) * params.duration_s as f64;
    let (lo, hi) = (
        (params.min_runtime_s as f64).ln(),
        (params.max_runtime_s as f64).ln(),
    );

    let mut drafts = Vec::new();
    let mut work = 0.0;
    while work < target_work {
        let nodes = if drafts.is_empty() {
            params.peak_nodes
        } else {
            draw_nodes(&mut rng, params.peak_nodes)
        };
        let runtime_s = rng.gen_range(lo..=hi).exp().round() as u64;
        let submit_s = draw_submit(&mut rng, params, &windows);
        work += runtime_s as f64 * f64::from(nodes);
        drafts.push((submit_s, runtime_s.max(1), nodes));
    }
    drafts.sort_unstable();

    if params.no_contention {
        let mut running: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
        let mut used = 0u32;
        let mut clock = 0u64;
        let mut kept = Vec::with_capacity(drafts.len());
        for (submit, runtime, nodes) in drafts {
            clock = clock.max(submit);
            loop {
                while let Some(&Reverse((end, n))) = running.peek() {
                    if end > clock {
                        break;
                    }
                    running.pop();
                    used -= n;
                }
                if used + nodes <= params.capacity {
                    break;
                }
                let Reverse((end, _)) = *running
                    .peek()
                    .expect("capacity exceeded with nothing running");
                clock = end;
            }
            if clock >= params.duration_s {
                break;
            }
            used += nodes;
            running.push(Reverse((clock + runtime, nodes)));
            kept.push((clock, runtime, nodes));
        }
        drafts = kept;
    }

    let jobs = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (submit_s, runtime_s, nodes))| Job {
            job_id: i as u64 + 1,
            submit_s,
            runtime_s,
            nodes,
        })
        .collect();
    Ok(JobTrace::new(jobs, params.duration_s))
}
