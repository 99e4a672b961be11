use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::association::{load, AssociationMap};
use crate::config::BandName;
use crate::netmodel::{NetworkState, OruId, RcId, RcState, UeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKpm {
    pub rc_id: RcId,
    pub oru_id: OruId,
    pub band: BandName,
    pub state: RcState,
    /// Number of RRC-connected (served) UEs.
    pub rrc_conn_mean: u32,
    pub prb_usage: f64,
    pub dl_throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeKpm {
    pub ue_id: UeId,
    pub serving_rc: Option<RcId>,
    /// RSRP toward every RC, sleeping ones included.
    pub rsrp_dbm_by_rc: BTreeMap<RcId, f64>,
    pub rate_bps: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpmReport {
    pub step: u64,
    pub cells: Vec<CellKpm>,
    pub ues: Vec<UeKpm>,
}

impl KpmReport {
    pub fn cell(&self, rc: RcId) -> Option<&CellKpm> {
        self.cells.iter().find(|c| c.rc_id == rc)
    }
}

pub fn collect_kpms(state: &NetworkState, assoc: &AssociationMap, step: u64) -> KpmReport {
    let mut conn = vec![0u32; state.rcs.len()];
    let mut tput = vec![0.0f64; state.rcs.len()];
    for ue in &state.ues {
        if let Some(rc) = assoc.serving(ue.ue_id) {
            conn[rc.0 as usize] += 1;
            tput[rc.0 as usize] += assoc.achieved_rate(ue.ue_id);
        }
    }
    let cells = state
        .rcs
        .iter()
        .map(|rc| {
            let m = rc.rc_id.0 as usize;
            let (rrc_conn_mean, prb_usage, dl_throughput_bps) = match rc.state {
                RcState::Active => (conn[m], load(state, rc.rc_id, assoc), tput[m]),
                RcState::Sleep => (0, 0.0, 0.0),
            };
            CellKpm {
                rc_id: rc.rc_id,
                oru_id: rc.oru_id,
                band: rc.band.name,
                state: rc.state,
                rrc_conn_mean,
                prb_usage,
                dl_throughput_bps,
            }
        })
        .collect();
    let ues = state
        .ues
        .iter()
        .map(|ue| {
            let serving_rc = assoc.serving(ue.ue_id);
            UeKpm {
                ue_id: ue.ue_id,
                serving_rc,
                rsrp_dbm_by_rc: state
                    .links_of(ue.ue_id)
                    .iter()
                    .enumerate()
                    .map(|(m, l)| (RcId(m as u32), l.rsrp_dbm))
                    .collect(),
                rate_bps: assoc.achieved_rate(ue.ue_id),
                outage: serving_rc.is_none(),
            }
        })
        .collect();
    KpmReport { step, cells, ues }
}
