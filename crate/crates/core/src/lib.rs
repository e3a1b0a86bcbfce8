//! Trace-driven simulation of coordinated resource provisioning for two
//! heterogeneous workloads, parallel batch jobs (PBJ) and a web service (WS),
//! consolidated on one cluster.
//!
//! Four provisioning regimes are modeled:
//!
//! * `Dcs`: a dedicated cluster statically split between the two workloads.
//! * `PhoenixFb`: fixed-bound coordination on a finite private cluster. The WS
//!   has priority and may force the batch side to release nodes, killing jobs.
//! * `PhoenixFlbnub`: fixed lower bound, no upper bound, on an unbounded
//!   public cloud. The batch side requests and releases nodes at lease ticks.
//! * `Ec2Rightscale`: every batch job leases its own nodes, released only at
//!   lease-unit boundaries; the WS tracks its demand.
//!
//! The entry point for a single run is [`provision::simulate`]; experiment
//! files, sweeps and CSV output live in [`experiment`].

pub mod engine;
pub mod error;
pub mod experiment;
pub mod ledger;
pub mod metrics;
pub mod pbj;
pub mod provision;
pub mod runtime_env;
pub mod traces;
pub mod ws;

pub use error::{Error, Result};
