//! Instance-count control loop that turns a request-rate series into a
//! web-service node-demand trace (one instance per node).

use serde::{Deserialize, Serialize};

use super::{DemandSample, WsDemandTrace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutoscalerParams {
    pub util_threshold: f64,
    pub window_s: u64,
    pub initial_instances: u32,
    /// Requests per second one instance serves at 100% utilization.
    pub capacity_per_instance: f64,
}

impl Default for AutoscalerParams {
    fn default() -> Self {
        AutoscalerParams {
            util_threshold: 0.80,
            window_s: 20,
            initial_instances: 2,
            capacity_per_instance: 100.0,
        }
    }
}

impl AutoscalerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("autoscaler: {m}")));
        if !(self.util_threshold > 0.0 && self.util_threshold < 1.0) {
            return bad("util_threshold must lie in (0, 1)");
        }
        if self.window_s == 0 {
            return bad("window_s must be at least 1");
        }
        if self.initial_instances == 0 {
            return bad("initial_instances must be at least 1");
        }
        if self.capacity_per_instance.is_nan() || self.capacity_per_instance <= 0.0 {
            return bad("capacity_per_instance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub time_s: u64,
    pub requests_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleStep {
    Up,
    Down,
    Hold,
}

/// Add an instance when the window mean exceeds the threshold; remove one
/// when it falls below `threshold * (n - 1) / n`.
pub fn scale_decision(instances: u32, mean_util: f64, threshold: f64) -> ScaleStep {
    if mean_util > threshold {
        ScaleStep::Up
    } else if instances > 1 {
        let n = f64::from(instances);
        if mean_util < threshold * (n - 1.0) / n {
            ScaleStep::Down
        } else {
            ScaleStep::Hold
        }
    } else {
        ScaleStep::Hold
    }
}

/// Mean of a window, summed per run of equal values so constant windows
/// reproduce their value exactly.
fn window_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i + 1;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        sum += v * (j - i) as f64;
        i = j;
    }
    sum / values.len() as f64
}

/// Replays `rates` second by second. At every multiple of `sample_period_s`
/// the mean utilization of the preceding `window_s` seconds (fewer at the
/// start) decides a step of at most one instance. The series runs until one
/// sample period past its last rate sample.
pub fn autoscale_to_demand(
    rates: &[RateSample],
    params: &AutoscalerParams,
    sample_period_s: u64,
) -> Result<WsDemandTrace> {
    params.validate()?;
    if sample_period_s == 0 {
        return Err(Error::Precondition(
            "sample_period_s must be at least 1".into(),
        ));
    }
    match rates.first() {
        None => return Err(Error::EmptyTrace("request-rate series is empty".into())),
        Some(r) if r.time_s != 0 => {
            return Err(Error::Precondition(
                "request-rate series must start at time 0".into(),
            ))
        }
        _ => {}
    }
    if rates.windows(2).any(|w| w[1].time_s <= w[0].time_s) {
        return Err(Error::Precondition(
            "request-rate times must strictly increase".into(),
        ));
    }

    let horizon = rates.last().map_or(0, |r| r.time_s) + sample_period_s;
    let window = params.window_s as usize;
    let mut n = params.initial_instances;
    let mut samples = vec![DemandSample {
        time_s: 0,
        nodes: n,
    }];
    let mut util = Vec::with_capacity(horizon as usize);
    let mut rate_idx = 0;

    for t in 0..horizon {
        if t > 0 && t % sample_period_s == 0 {
            let lo = util.len().saturating_sub(window);
            let mean = window_mean(&util[lo..]);
            let next = match scale_decision(n, mean, params.util_threshold) {
                ScaleStep::Up => n + 1,
                ScaleStep::Down => n - 1,
                ScaleStep::Hold => n,
            };
            if next != n {
                n = next;
                samples.push(DemandSample {
                    time_s: t,
                    nodes: n,
                });
            }
        }
        while rate_idx + 1 < rates.len() && rates[rate_idx + 1].time_s <= t {
            rate_idx += 1;
        }
        let rate = rates[rate_idx].requests_per_s.max(0.0);
        let u = (rate / (f64::from(n) * params.capacity_per_instance)).min(1.0);
        util.push(u);
    }
    WsDemandTrace::new(samples, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_rule_examples() {
        assert_eq!(scale_decision(4, 0.82, 0.80), ScaleStep::Up);
        // 0.55 < 0.80 * 3 / 4 = 0.60
        assert_eq!(scale_decision(4, 0.55, 0.80), ScaleStep::Down);
        assert_eq!(scale_decision(4, 0.61, 0.80), ScaleStep::Hold);
        assert_eq!(scale_decision(4, 0.80, 0.80), ScaleStep::Hold);
        assert_eq!(scale_decision(1, 0.0, 0.80), ScaleStep::Hold);
    }

    #[test]
    fn constant_rate_on_threshold_holds() {
        let params = AutoscalerParams {
            initial_instances: 1,
            ..Default::default()
        };
        let rates = [
            RateSample {
                time_s: 0,
                requests_per_s: 80.0,
            },
            RateSample {
                time_s: 600,
                requests_per_s: 80.0,
            },
        ];
        let tr = autoscale_to_demand(&rates, &params, 20).unwrap();
        assert_eq!(tr.samples().len(), 1);
        assert_eq!(tr.peak_demand(), 1);
    }

    #[test]
    fn constant_rate_converges() {
        let params = AutoscalerParams::default();
        // 450 req/s at 100 req/s per instance settles at 6 instances (u = 0.75,
        // between 0.80 * 5 / 6 = 0.667 and 0.80)
        let rates = [
            RateSample {
                time_s: 0,
                requests_per_s: 450.0,
            },
            RateSample {
                time_s: 3_600,
                requests_per_s: 450.0,
            },
        ];
        let tr = autoscale_to_demand(&rates, &params, 20).unwrap();
        let last = tr.samples().last().unwrap();
        assert_eq!(last.nodes, 6);
        assert!(last.time_s < 600);
        for w in tr.samples().windows(2) {
            assert_eq!(w[1].nodes.abs_diff(w[0].nodes), 1);
        }
    }

    #[test]
    fn scales_down_after_load_drops() {
        let params = AutoscalerParams::default();
        let rates = [
            RateSample {
                time_s: 0,
                requests_per_s: 900.0,
            },
            RateSample {
                time_s: 1_800,
                requests_per_s: 50.0,
            },
            RateSample {
                time_s: 3_600,
                requests_per_s: 50.0,
            },
        ];
        let tr = autoscale_to_demand(&rates, &params, 20).unwrap();
        assert!(tr.peak_demand() >= 10);
        assert_eq!(tr.samples().last().unwrap().nodes, 1);
    }

    #[test]
    fn rejects_bad_input() {
        let params = AutoscalerParams::default();
        assert!(autoscale_to_demand(&[], &params, 20).is_err());
        let late = [RateSample {
            time_s: 5,
            requests_per_s: 1.0,
        }];
        assert!(autoscale_to_demand(&late, &params, 20).is_err());
        let ok = [RateSample {
            time_s: 0,
            requests_per_s: 1.0,
        }];
        assert!(autoscale_to_demand(&ok, &params, 0).is_err());
        let bad = AutoscalerParams {
            util_threshold: 1.0,
            ..params
        };
        assert!(autoscale_to_demand(&ok, &bad, 20).is_err());
    }
}
