//! Mock Near-RT RIC: KPM collection, control-action validation, the xApp
//! wire protocol and the closed control loop.

pub mod action;
pub mod control_loop;
pub mod kpm;
pub mod protocol;
pub mod transport;

use thiserror::Error;

pub use action::{apply_action, apply_batch, apply_in_place, ControlAction, RejectReason};
pub use control_loop::{run_control_loop, run_to_fixed_point, LoopTrace, Policy, StepRecord};
pub use kpm::{collect_kpms, CellKpm, KpmReport, UeKpm};
pub use protocol::{decode_message, encode_message, DecodeError, Message};

#[derive(Debug, Error)]
pub enum RicError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("peer did not answer in time")]
    Timeout,
    #[error("peer closed the session {0}")]
    Closed(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("expected {expected}, got {got}")]
    UnexpectedMessage { expected: &'static str, got: String },
    #[error("step mismatch: expected {expected}, got {got}")]
    StepMismatch { expected: u64, got: u64 },
    #[error("constraint violation after step {step}: {details}")]
    ConstraintViolation { step: u64, details: String },
    #[error("{0}")]
    Config(String),
}
