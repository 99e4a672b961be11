//! UE to RC association, per-RC PRB load and the feasibility check of the
//! power-minimisation constraints (RSRP floor, rate floor, single
//! association, load at most one).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::netmodel::{NetworkState, RcId, UeId};
use crate::radio::PrbDemand;

/// Serving map with the PRBs and rate each served UE holds.
///
/// A UE without a serving RC is in outage and holds no PRBs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMap {
    serving: Vec<Option<RcId>>,
    prbs: Vec<u32>,
    achieved_rate: Vec<f64>,
    used_prbs: Vec<u32>,
}

impl AssociationMap {
    pub fn empty(n_ues: usize, n_rcs: usize) -> Self {
        AssociationMap {
            serving: vec![None; n_ues],
            prbs: vec![0; n_ues],
            achieved_rate: vec![0.0; n_ues],
            used_prbs: vec![0; n_rcs],
        }
    }

    pub fn n_ues(&self) -> usize {
        self.serving.len()
    }

    pub fn serving(&self, ue: UeId) -> Option<RcId> {
        self.serving[ue.0 as usize]
    }

    pub fn prbs(&self, ue: UeId) -> u32 {
        self.prbs[ue.0 as usize]
    }

    pub fn achieved_rate(&self, ue: UeId) -> f64 {
        self.achieved_rate[ue.0 as usize]
    }

    pub fn used_prbs(&self, rc: RcId) -> u32 {
        self.used_prbs[rc.0 as usize]
    }

    pub fn is_outage(&self, ue: UeId) -> bool {
        self.serving(ue).is_none()
    }

    pub fn outages(&self) -> impl Iterator<Item = UeId> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(k, _)| UeId(k as u32))
    }

    pub fn outage_count(&self) -> usize {
        self.serving.iter().filter(|s| s.is_none()).count()
    }

    pub fn served_by(&self, rc: RcId) -> impl Iterator<Item = UeId> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == Some(rc))
            .map(|(k, _)| UeId(k as u32))
    }

    pub fn served_count(&self, rc: RcId) -> usize {
        self.served_by(rc).count()
    }

    /// Attaches `ue` to `rc`, replacing any previous serving RC.
    pub fn attach(&mut self, ue: UeId, rc: RcId, prbs: u32, rate_bps: f64) {
        self.detach(ue);
        let k = ue.0 as usize;
        self.serving[k] = Some(rc);
        self.prbs[k] = prbs;
        self.achieved_rate[k] = rate_bps;
        self.used_prbs[rc.0 as usize] += prbs;
    }

    pub fn detach(&mut self, ue: UeId) {
        let k = ue.0 as usize;
        if let Some(old) = self.serving[k].take() {
            self.used_prbs[old.0 as usize] -= self.prbs[k];
        }
        self.prbs[k] = 0;
        self.achieved_rate[k] = 0.0;
    }
}

/// PRB load of one RC: occupied PRBs over the RC's PRB budget.
pub fn load(state: &NetworkState, rc: RcId, assoc: &AssociationMap) -> f64 {
    let total = state.rc(rc).map_or(1, |r| r.total_prbs).max(1);
    let used: u64 = assoc.served_by(rc).map(|k| assoc.prbs(k) as u64).sum();
    used as f64 / total as f64
}

/// Candidate RC for admission or reassignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub rc: RcId,
    pub rsrp_dbm: f64,
    /// Load used for tie-breaking (current load on admission, post-move load
    /// on reassignment).
    pub load: f64,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.rsrp_dbm
        .total_cmp(&a.rsrp_dbm)
        .then(a.load.total_cmp(&b.load))
        .then(a.rc.cmp(&b.rc))
}

/// Highest RSRP first, then lower load, then lower RC id.
pub fn best_candidate(candidates: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    candidates.into_iter().min_by(rank)
}

fn admission_for(
    state: &NetworkState,
    assoc: &AssociationMap,
    ue: UeId,
) -> Option<(RcId, u32, f64)> {
    let gamma_min = state.config.rsrp_min_dbm;
    let min_rate = state.ues[ue.0 as usize].min_rate_bps;
    let mut best: Option<(Candidate, u32, f64)> = None;
    for rc in state.rcs.iter().filter(|rc| rc.is_active()) {
        let link = state.link(ue, rc.rc_id);
        if link.rsrp_dbm < gamma_min {
            continue;
        }
        let PrbDemand::Prbs(need) =
            crate::radio::prb_demand(min_rate, link.per_prb_rate_bps, rc.total_prbs)
        else {
            continue;
        };
        let used = assoc.used_prbs(rc.rc_id);
        if used + need > rc.total_prbs {
            continue;
        }
        let cand = Candidate {
            rc: rc.rc_id,
            rsrp_dbm: link.rsrp_dbm,
            load: used as f64 / rc.total_prbs as f64,
        };
        if best
            .as_ref()
            .is_none_or(|(b, _, _)| rank(&cand, b) == Ordering::Less)
        {
            best = Some((cand, need, need as f64 * link.per_prb_rate_bps));
        }
    }
    best.map(|(c, need, rate)| (c.rc, need, rate))
}

/// Tries to attach one UE using the greedy admission rule. Returns whether
/// the UE ended up served.
pub fn admit(state: &NetworkState, assoc: &mut AssociationMap, ue: UeId) -> bool {
    match admission_for(state, assoc, ue) {
        Some((rc, prbs, rate)) => {
            assoc.attach(ue, rc, prbs, rate);
            true
        }
        None => false,
    }
}

/// Greedy max-RSRP admission in ascending UE id.
///
/// Each UE attaches to the active RC with the highest RSRP among those that
/// clear the RSRP floor and still have room for its PRB demand; ties go to
/// the lower current load, then the lower RC id. UEs with no such RC are in
/// outage.
pub fn associate_all(state: &NetworkState) -> AssociationMap {
    let mut assoc = AssociationMap::empty(state.ues.len(), state.rcs.len());
    for ue in &state.ues {
        admit(state, &mut assoc, ue.ue_id);
    }
    assoc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// RSRP floor per UE; vacuously true for UEs in outage.
    pub rsrp_ok: Vec<bool>,
    /// Rate floor per UE; vacuously true for UEs in outage.
    pub rate_ok: Vec<bool>,
    pub single_assoc_ok: bool,
    pub load_ok: Vec<bool>,
    pub feasible: bool,
}

impl ConstraintReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, ok) in self.rsrp_ok.iter().enumerate() {
            if !ok {
                out.push(format!("ue{k}: rsrp below floor"));
            }
        }
        for (k, ok) in self.rate_ok.iter().enumerate() {
            if !ok {
                out.push(format!("ue{k}: rate below floor"));
            }
        }
        if !self.single_assoc_ok {
            out.push("association map is inconsistent".into());
        }
        for (m, ok) in self.load_ok.iter().enumerate() {
            if !ok {
                out.push(format!("rc{m}: load above 1"));
            }
        }
        out
    }
}

pub fn check_constraints(state: &NetworkState, assoc: &AssociationMap) -> ConstraintReport {
    let gamma_min = state.config.rsrp_min_dbm;
    let n_ues = state.ues.len();
    let mut rsrp_ok = vec![true; n_ues];
    let mut rate_ok = vec![true; n_ues];
    let mut single_assoc_ok = assoc.n_ues() == n_ues && assoc.used_prbs.len() == state.rcs.len();

    let mut recount = vec![0u32; state.rcs.len()];
    if single_assoc_ok {
        for ue in &state.ues {
            let k = ue.ue_id;
            match assoc.serving(k) {
                Some(rc) => {
                    let Some(card) = state.rc(rc) else {
                        single_assoc_ok = false;
                        continue;
                    };
                    if !card.is_active() {
                        single_assoc_ok = false;
                    }
                    recount[rc.0 as usize] += assoc.prbs(k);
                    rsrp_ok[k.0 as usize] = state.link(k, rc).rsrp_dbm >= gamma_min;
                    rate_ok[k.0 as usize] = assoc.achieved_rate(k) >= ue.min_rate_bps;
                }
                None => {
                    if assoc.prbs(k) != 0 || assoc.achieved_rate(k) != 0.0 {
                        single_assoc_ok = false;
                    }
                }
            }
        }
        if recount != assoc.used_prbs {
            single_assoc_ok = false;
        }
    }

    let load_ok: Vec<bool> = state
        .rcs
        .iter()
        .map(|rc| recount.get(rc.rc_id.0 as usize).copied().unwrap_or(0) <= rc.total_prbs)
        .collect();
    let feasible = single_assoc_ok
        && rsrp_ok.iter().all(|&b| b)
        && rate_ok.iter().all(|&b| b)
        && load_ok.iter().all(|&b| b);
    ConstraintReport {
        rsrp_ok,
        rate_ok,
        single_assoc_ok,
        load_ok,
        feasible,
    }
}

/// Plans (without applying) a move of `ue` away from `from_rc`.
///
/// Eligible targets are active RCs other than `from_rc` where the UE clears
/// the RSRP floor and whose load after the move stays within `load_cap`.
/// Ranked by RSRP, then post-move load, then RC id.
pub fn try_reassign(
    ue: UeId,
    from_rc: RcId,
    state: &NetworkState,
    assoc: &AssociationMap,
    load_cap: f64,
) -> Option<RcId> {
    let gamma_min = state.config.rsrp_min_dbm;
    let min_rate = state.ue(ue)?.min_rate_bps;
    let candidates = state.rcs.iter().filter_map(|rc| {
        if rc.rc_id == from_rc || !rc.is_active() {
            return None;
        }
        let link = state.link(ue, rc.rc_id);
        if link.rsrp_dbm < gamma_min {
            return None;
        }
        let need =
            crate::radio::prb_demand(min_rate, link.per_prb_rate_bps, rc.total_prbs).prbs()?;
        let post = (assoc.used_prbs(rc.rc_id) + need) as f64 / rc.total_prbs as f64;
        (post <= load_cap).then_some(Candidate {
            rc: rc.rc_id,
            rsrp_dbm: link.rsrp_dbm,
            load: post,
        })
    });
    best_candidate(candidates).map(|c| c.rc)
}
