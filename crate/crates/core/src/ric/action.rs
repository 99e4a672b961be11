use std::fmt;

use serde::{Deserialize, Serialize};

use crate::association::{check_constraints, AssociationMap};
use crate::netmodel::{NetworkState, RcId, RcState, UeId};
use crate::radio::{prb_demand, PrbDemand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlAction {
    SleepRc(RcId),
    WakeRc(RcId),
    Handover { ue: UeId, target: RcId },
}

impl fmt::Display for ControlAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlAction::SleepRc(rc) => write!(f, "sleep {rc}"),
            ControlAction::WakeRc(rc) => write!(f, "wake {rc}"),
            ControlAction::Handover { ue, target } => write!(f, "handover {ue} -> {target}"),
        }
    }
}

/// Machine-readable rejection codes, spelled as on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    RcNotIdle,
    RcUnknown,
    UeUnknown,
    TargetAsleep,
    RsrpBelowMin,
    Overload,
    InfeasibleAfter,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::RcNotIdle => "rc_not_idle",
            RejectReason::RcUnknown => "rc_unknown",
            RejectReason::UeUnknown => "ue_unknown",
            RejectReason::TargetAsleep => "target_asleep",
            RejectReason::RsrpBelowMin => "rsrp_below_min",
            RejectReason::Overload => "overload",
            RejectReason::InfeasibleAfter => "infeasible_after",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Validates and applies one action in place. On rejection `state` and
/// `assoc` are left untouched.
pub fn apply_in_place(
    state: &mut NetworkState,
    assoc: &mut AssociationMap,
    action: ControlAction,
) -> Result<(), RejectReason> {
    let mut next_state = state.clone();
    let mut next_assoc = assoc.clone();
    match action {
        ControlAction::SleepRc(rc) => {
            state.rc(rc).ok_or(RejectReason::RcUnknown)?;
            if assoc.served_count(rc) > 0 {
                return Err(RejectReason::RcNotIdle);
            }
            next_state.set_state(rc, RcState::Sleep);
        }
        ControlAction::WakeRc(rc) => {
            state.rc(rc).ok_or(RejectReason::RcUnknown)?;
            next_state.set_state(rc, RcState::Active);
        }
        ControlAction::Handover { ue, target } => {
            let user = state.ue(ue).ok_or(RejectReason::UeUnknown)?;
            let card = state.rc(target).ok_or(RejectReason::RcUnknown)?;
            if !card.is_active() {
                return Err(RejectReason::TargetAsleep);
            }
            if assoc.serving(ue) == Some(target) {
                return Ok(());
            }
            let link = state.link(ue, target);
            if link.rsrp_dbm < state.config.rsrp_min_dbm {
                return Err(RejectReason::RsrpBelowMin);
            }
            let PrbDemand::Prbs(need) =
                prb_demand(user.min_rate_bps, link.per_prb_rate_bps, card.total_prbs)
            else {
                return Err(RejectReason::Overload);
            };
            if assoc.used_prbs(target) + need > card.total_prbs {
                return Err(RejectReason::Overload);
            }
            next_assoc.attach(ue, target, need, need as f64 * link.per_prb_rate_bps);
        }
    }
    if !check_constraints(&next_state, &next_assoc).feasible {
        return Err(RejectReason::InfeasibleAfter);
    }
    *state = next_state;
    *assoc = next_assoc;
    Ok(())
}

pub fn apply_action(
    state: &NetworkState,
    assoc: &AssociationMap,
    action: ControlAction,
) -> Result<(NetworkState, AssociationMap), RejectReason> {
    let mut s = state.clone();
    let mut a = assoc.clone();
    apply_in_place(&mut s, &mut a, action)?;
    Ok((s, a))
}

/// Applies a batch in list order. A rejection does not stop the batch.
pub fn apply_batch(
    state: &mut NetworkState,
    assoc: &mut AssociationMap,
    actions: &[ControlAction],
) -> Vec<Result<(), RejectReason>> {
    actions
        .iter()
        .map(|&a| apply_in_place(state, assoc, a))
        .collect()
}
