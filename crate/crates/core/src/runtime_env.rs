//! Runtime environment documents: what a service provider asks for when a
//! thin runtime environment (TRE) is created, and how two of them are grouped
//! for coordinated provisioning.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderRelationship {
    Same,
    Affiliated,
    Business,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadType {
    ParallelBatchJobs,
    WebService,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Node,
    VirtualMachine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordinationModel {
    /// Fixed bound: lower bound equals upper bound.
    #[serde(rename = "FB")]
    Fb,
    /// Fixed lower bound, no upper bound.
    #[serde(rename = "FLB_NUB")]
    FlbNub,
    #[serde(rename = "none")]
    None,
}

/// Upper resource bound: a node count or `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperBound {
    Nodes(u32),
    Undefined,
}

impl Serialize for UpperBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UpperBound::Nodes(n) => s.serialize_u32(*n),
            UpperBound::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for UpperBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Nodes(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Nodes(n) => Ok(UpperBound::Nodes(n)),
            Raw::Word(w) if w == "undefined" => Ok(UpperBound::Undefined),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "upper_bound must be a node count or \"undefined\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeEnvSpec {
    /// Owner of the environment; decides whether same-provider or
    /// cross-provider coordination rules apply when pairing.
    #[serde(default)]
    pub service_provider: String,
    pub provider_relationship: ProviderRelationship,
    pub workload_type: WorkloadType,
    pub granularity: Granularity,
    pub allow_coordination_same_provider: bool,
    pub allow_coordination_other_provider: bool,
    pub lower_bound: u32,
    pub upper_bound: UpperBound,
    pub coordination_model: CoordinationModel,
    /// Delay applied to every node handed to this environment.
    #[serde(default)]
    pub setup_latency_s: u64,
}

impl RuntimeEnvSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// A coordinating environment of the given model with defaults elsewhere.
    pub fn coordinated(
        workload_type: WorkloadType,
        coordination_model: CoordinationModel,
        lower_bound: u32,
    ) -> Self {
        let upper_bound = match coordination_model {
            CoordinationModel::FlbNub => UpperBound::Undefined,
            _ => UpperBound::Nodes(lower_bound),
        };
        RuntimeEnvSpec {
            service_provider: String::new(),
            provider_relationship: ProviderRelationship::Business,
            workload_type,
            granularity: Granularity::Node,
            allow_coordination_same_provider: coordination_model != CoordinationModel::None,
            allow_coordination_other_provider: coordination_model != CoordinationModel::None,
            lower_bound,
            upper_bound,
            coordination_model,
            setup_latency_s: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

pub fn validate(spec: &RuntimeEnvSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    match (spec.coordination_model, spec.upper_bound) {
        (CoordinationModel::Fb, UpperBound::Undefined) => out.push(Violation {
            field: "upper_bound",
            rule: "FB requires a defined upper bound".into(),
        }),
        (CoordinationModel::Fb, UpperBound::Nodes(u)) if u != spec.lower_bound => {
            out.push(Violation {
                field: "upper_bound",
                rule: format!(
                    "FB requires upper_bound = lower_bound ({u} != {})",
                    spec.lower_bound
                ),
            })
        }
        (CoordinationModel::FlbNub, UpperBound::Nodes(u)) => out.push(Violation {
            field: "upper_bound",
            rule: format!("FLB_NUB requires upper_bound = \"undefined\", got {u}"),
        }),
        (CoordinationModel::None, UpperBound::Nodes(u)) if u < spec.lower_bound => {
            out.push(Violation {
                field: "upper_bound",
                rule: format!("upper_bound {u} is below lower_bound {}", spec.lower_bound),
            })
        }
        _ => {}
    }
    out
}

/// One batch environment and one web-service environment provisioned from a
/// shared pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinationGroup {
    pub pbj: RuntimeEnvSpec,
    pub ws: RuntimeEnvSpec,
    /// FB: sum of the two lower bounds. FLB-NUB: the configured pool size B.
    pub coordinated_pool: u32,
}

impl CoordinationGroup {
    pub fn new(pbj: RuntimeEnvSpec, ws: RuntimeEnvSpec, pool_b: u32) -> Result<Self> {
        let mut problems: Vec<String> = Vec::new();
        if pbj.workload_type != WorkloadType::ParallelBatchJobs {
            problems.push("first member must be a parallel_batch_jobs environment".into());
        }
        if ws.workload_type != WorkloadType::WebService {
            problems.push("second member must be a web_service environment".into());
        }
        if pbj.coordination_model != ws.coordination_model {
            problems.push("members must share one coordination_model".into());
        }
        if pbj.coordination_model == CoordinationModel::None {
            problems.push("coordination_model none cannot be grouped".into());
        }
        problems.extend(validate(&pbj).iter().map(|v| format!("pbj {v}")));
        problems.extend(validate(&ws).iter().map(|v| format!("ws {v}")));
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let coordinated_pool = match pbj.coordination_model {
            CoordinationModel::Fb => pbj.lower_bound + ws.lower_bound,
            _ => pool_b,
        };
        Ok(CoordinationGroup {
            pbj,
            ws,
            coordinated_pool,
        })
    }

    pub fn model(&self) -> CoordinationModel {
        self.pbj.coordination_model
    }

    /// Nodes a provider must hold back for the two lower bounds.
    pub fn reserved_nodes(&self) -> u32 {
        self.pbj.lower_bound + self.ws.lower_bound
    }

    /// Rejects groups whose lower bounds cannot fit a finite cluster.
    pub fn check_capacity(&self, capacity: Option<u32>) -> Vec<Violation> {
        match capacity {
            Some(c) if self.reserved_nodes() > c => vec![Violation {
                field: "lower_bound",
                rule: format!(
                    "lower bounds {} + {} exceed cluster capacity {c}",
                    self.pbj.lower_bound, self.ws.lower_bound
                ),
            }],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    /// Groups with the declaration indices of their members.
    pub groups: Vec<(usize, usize, CoordinationGroup)>,
    /// Indices of environments provisioned independently.
    pub unpaired: Vec<usize>,
}

fn compatible(a: &RuntimeEnvSpec, b: &RuntimeEnvSpec) -> bool {
    if a.workload_type == b.workload_type
        || a.coordination_model != b.coordination_model
        || a.coordination_model == CoordinationModel::None
    {
        return false;
    }
    if a.service_provider == b.service_provider {
        a.allow_coordination_same_provider && b.allow_coordination_same_provider
    } else {
        a.allow_coordination_other_provider && b.allow_coordination_other_provider
    }
}

/// First-fit grouping in declaration order: each environment takes the
/// earliest later-declared, still-unmatched partner it is compatible with.
pub fn pair(specs: &[RuntimeEnvSpec], pool_b: u32) -> Pairing {
    let mut taken = vec![false; specs.len()];
    let mut groups = Vec::new();
    for i in 0..specs.len() {
        if taken[i] || !validate(&specs[i]).is_empty() {
            continue;
        }
        let partner = (i + 1..specs.len()).find(|&j| {
            !taken[j] && validate(&specs[j]).is_empty() && compatible(&specs[i], &specs[j])
        });
        if let Some(j) = partner {
            let (p, w) = if specs[i].workload_type == WorkloadType::ParallelBatchJobs {
                (i, j)
            } else {
                (j, i)
            };
            if let Ok(group) = CoordinationGroup::new(specs[p].clone(), specs[w].clone(), pool_b) {
                taken[i] = true;
                taken[j] = true;
                groups.push((p, w, group));
            }
        }
    }
    let unpaired = (0..specs.len()).filter(|&i| !taken[i]).collect();
    Pairing { groups, unpaired }
}
