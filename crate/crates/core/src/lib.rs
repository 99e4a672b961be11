//! Radio-card sleep-mode energy saving on a simulated O-RAN deployment.
//!
//! A grid of O-RUs, each carrying two radio cards on different carriers,
//! serves randomly dropped UEs. A mock Near-RT RIC collects per-cell KPMs,
//! hands them to an xApp, validates the returned sleep/wake/handover
//! actions against the network constraints and applies the accepted ones.

// `!(x > 0.0)` style guards double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod config;
pub mod harness;
pub mod netmodel;
pub mod power;
pub mod radio;
pub mod ric;
pub mod rng;
pub mod xapps;

pub use association::{associate_all, check_constraints, AssociationMap, ConstraintReport};
pub use config::{ConfigError, ScenarioConfig};
pub use harness::{run_experiment, run_trial, write_csv, Experiment, HarnessError, TrialResult};
pub use netmodel::{build_scenario, NetworkState, RcId, RcState, UeId};
pub use power::{total_power, PowerBreakdown};
pub use xapps::{oracle_solve, PolicyKind};
