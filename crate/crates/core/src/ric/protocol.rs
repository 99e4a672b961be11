//! Line-delimited JSON protocol between the RIC and an xApp.
//!
//! One message per line, UTF-8, `"v"` first and `"type"` second:
//!
//! ```text
//! {"v":1,"type":"kpm_request","step":0}
//! {"v":1,"type":"kpm_report","step":0,"cells":[...],"ues":[...]}
//! {"v":1,"type":"control","step":0,"actions":[{"op":"sleep","rc_id":3}]}
//! {"v":1,"type":"ack","step":0,"applied":1,"rejected":[]}
//! ```
//!
//! Throughputs and rates travel in Mbps. Unknown types, unknown fields and
//! missing fields are decode errors.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::config::BandName;
use crate::netmodel::{OruId, RcId, RcState, UeId};
use crate::ric::action::{ControlAction, RejectReason};
use crate::ric::kpm::{CellKpm, KpmReport, UeKpm};

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Error, PartialEq)]
#[error("decode error at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

fn required<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpmRequest {
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCell {
    pub rc_id: u32,
    pub oru_id: u32,
    pub band: BandName,
    pub state: RcState,
    pub rrc_conn_mean: u32,
    pub prb_usage: f64,
    pub dl_throughput_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireUe {
    pub ue_id: u32,
    #[serde(deserialize_with = "required")]
    pub serving_rc: Option<u32>,
    pub rsrp_dbm: BTreeMap<u32, f64>,
    pub rate_mbps: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireReport {
    pub step: u64,
    pub cells: Vec<WireCell>,
    pub ues: Vec<WireUe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireAction {
    Sleep { rc_id: u32 },
    Wake { rc_id: u32 },
    Handover { ue_id: u32, target_rc: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    pub step: u64,
    pub actions: Vec<WireAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rejected {
    pub index: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ack {
    pub step: u64,
    pub applied: u64,
    pub rejected: Vec<Rejected>,
}

impl Ack {
    pub fn from_verdicts(step: u64, verdicts: &[Result<(), RejectReason>]) -> Self {
        let rejected: Vec<Rejected> = verdicts
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                v.err().map(|reason| Rejected {
                    index: i as u64,
                    reason,
                })
            })
            .collect();
        Ack {
            step,
            applied: (verdicts.len() - rejected.len()) as u64,
            rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    KpmRequest(KpmRequest),
    KpmReport(WireReport),
    Control(Control),
    Ack(Ack),
}

impl Message {
    pub fn type_name(&self) -> &'static str {
        match self {
            Message::KpmRequest(_) => "kpm_request",
            Message::KpmReport(_) => "kpm_report",
            Message::Control(_) => "control",
            Message::Ack(_) => "ack",
        }
    }

    pub fn step(&self) -> u64 {
        match self {
            Message::KpmRequest(m) => m.step,
            Message::KpmReport(m) => m.step,
            Message::Control(m) => m.step,
            Message::Ack(m) => m.step,
        }
    }
}

#[derive(Serialize)]
struct Framed<'a, T: Serialize> {
    v: u64,
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn frame<T: Serialize>(kind: &'static str, body: &T) -> String {
    serde_json::to_string(&Framed {
        v: PROTOCOL_VERSION,
        kind,
        body,
    })
    .expect("protocol messages contain only finite numbers")
}

/// Encodes one message as a single line, without the trailing newline.
pub fn encode_message(msg: &Message) -> String {
    match msg {
        Message::KpmRequest(b) => frame("kpm_request", b),
        Message::KpmReport(b) => frame("kpm_report", b),
        Message::Control(b) => frame("control", b),
        Message::Ack(b) => frame("ack", b),
    }
}

fn semantic(message: impl Into<String>) -> DecodeError {
    DecodeError {
        offset: 0,
        message: message.into(),
    }
}

fn body<T: for<'de> Deserialize<'de>>(rest: Map<String, Value>) -> Result<T, DecodeError> {
    serde_json::from_value(Value::Object(rest)).map_err(|e| semantic(e.to_string()))
}

/// Decodes one line (a trailing `\n` or `\r\n` is tolerated).
pub fn decode_message(line: &str) -> Result<Message, DecodeError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let value: Value = serde_json::from_str(line).map_err(|e| DecodeError {
        offset: e.column().saturating_sub(1).min(line.len()),
        message: e.to_string(),
    })?;
    let Value::Object(mut obj) = value else {
        return Err(semantic("message is not a JSON object"));
    };
    match obj.remove("v") {
        Some(Value::Number(n)) if n.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(other) => return Err(semantic(format!("unsupported protocol version {other}"))),
        None => return Err(semantic("missing field `v`")),
    }
    let kind = match obj.remove("type") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(semantic("field `type` is not a string")),
        None => return Err(semantic("missing field `type`")),
    };
    match kind.as_str() {
        "kpm_request" => body(obj).map(Message::KpmRequest),
        "kpm_report" => body(obj).map(Message::KpmReport),
        "control" => body(obj).map(Message::Control),
        "ack" => body(obj).map(Message::Ack),
        other => Err(semantic(format!("unknown message type `{other}`"))),
    }
}

impl From<&KpmReport> for WireReport {
    fn from(r: &KpmReport) -> Self {
        WireReport {
            step: r.step,
            cells: r
                .cells
                .iter()
                .map(|c| WireCell {
                    rc_id: c.rc_id.0,
                    oru_id: c.oru_id.0,
                    band: c.band,
                    state: c.state,
                    rrc_conn_mean: c.rrc_conn_mean,
                    prb_usage: c.prb_usage,
                    dl_throughput_mbps: c.dl_throughput_bps / 1e6,
                })
                .collect(),
            ues: r
                .ues
                .iter()
                .map(|u| WireUe {
                    ue_id: u.ue_id.0,
                    serving_rc: u.serving_rc.map(|rc| rc.0),
                    rsrp_dbm: u.rsrp_dbm_by_rc.iter().map(|(rc, v)| (rc.0, *v)).collect(),
                    rate_mbps: u.rate_bps / 1e6,
                    outage: u.outage,
                })
                .collect(),
        }
    }
}

impl From<&WireReport> for KpmReport {
    fn from(r: &WireReport) -> Self {
        KpmReport {
            step: r.step,
            cells: r
                .cells
                .iter()
                .map(|c| CellKpm {
                    rc_id: RcId(c.rc_id),
                    oru_id: OruId(c.oru_id),
                    band: c.band,
                    state: c.state,
                    rrc_conn_mean: c.rrc_conn_mean,
                    prb_usage: c.prb_usage,
                    dl_throughput_bps: c.dl_throughput_mbps * 1e6,
                })
                .collect(),
            ues: r
                .ues
                .iter()
                .map(|u| UeKpm {
                    ue_id: UeId(u.ue_id),
                    serving_rc: u.serving_rc.map(RcId),
                    rsrp_dbm_by_rc: u.rsrp_dbm.iter().map(|(rc, v)| (RcId(*rc), *v)).collect(),
                    rate_bps: u.rate_mbps * 1e6,
                    outage: u.outage,
                })
                .collect(),
        }
    }
}

impl From<ControlAction> for WireAction {
    fn from(a: ControlAction) -> Self {
        match a {
            ControlAction::SleepRc(rc) => WireAction::Sleep { rc_id: rc.0 },
            ControlAction::WakeRc(rc) => WireAction::Wake { rc_id: rc.0 },
            ControlAction::Handover { ue, target } => WireAction::Handover {
                ue_id: ue.0,
                target_rc: target.0,
            },
        }
    }
}

impl From<WireAction> for ControlAction {
    fn from(a: WireAction) -> Self {
        match a {
            WireAction::Sleep { rc_id } => ControlAction::SleepRc(RcId(rc_id)),
            WireAction::Wake { rc_id } => ControlAction::WakeRc(RcId(rc_id)),
            WireAction::Handover { ue_id, target_rc } => ControlAction::Handover {
                ue: UeId(ue_id),
                target: RcId(target_rc),
            },
        }
    }
}
