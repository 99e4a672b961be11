//! Sleep-mode decision policies.
//!
//! * [`XApp1`] sleeps every active RC that serves nobody.
//! * [`XApp2`] does the same, then evacuates lightly loaded RCs whose UEs
//!   can all be moved elsewhere and sleeps them too.
//! * [`AllOn`] never acts; it is the 100 % power reference.
//! * [`oracle_solve`] enumerates every active/sleep subset of a small
//!   network and returns the cheapest feasible one.

mod oracle;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::association::{best_candidate, Candidate};
use crate::config::{ConfigError, ScenarioConfig};
use crate::netmodel::{RcId, RcState, UeId};
use crate::radio::LinkModel;
use crate::ric::{ControlAction, KpmReport, Policy, RicError};

pub use oracle::{oracle_solve, OracleError, OracleResult, DEFAULT_MAX_RCS};

/// Sleeps every active cell reporting zero connected UEs, ascending RC id.
pub fn xapp1_decide(report: &KpmReport) -> Vec<ControlAction> {
    let mut idle: Vec<RcId> = report
        .cells
        .iter()
        .filter(|c| c.state == RcState::Active && c.rrc_conn_mean == 0)
        .map(|c| c.rc_id)
        .collect();
    idle.sort();
    idle.into_iter().map(ControlAction::SleepRc).collect()
}

pub fn all_on_decide(_report: &KpmReport) -> Vec<ControlAction> {
    Vec::new()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XApp2Thresholds {
    /// A cell is lightly loaded below this PRB usage...
    pub low_load_prb: f64,
    /// ...and below this downlink throughput.
    pub low_load_tput_bps: f64,
    /// Highest load a receiving cell may reach.
    pub load_cap: f64,
}

impl XApp2Thresholds {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        XApp2Thresholds {
            low_load_prb: cfg.low_load_prb,
            low_load_tput_bps: cfg.low_load_tput_bps,
            load_cap: cfg.load_cap,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.load_cap > 0.0 && self.load_cap <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "load_cap {} outside (0, 1]",
                self.load_cap
            )));
        }
        if !(self.low_load_prb < self.load_cap) {
            return Err(ConfigError::Invalid(
                "low_load_prb must be below load_cap".into(),
            ));
        }
        Ok(())
    }
}

/// What xApp2 needs besides the thresholds: the RSRP floor and the receiver
/// model used to turn a reported RSRP into a PRB demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XApp2Params {
    pub thresholds: XApp2Thresholds,
    pub rsrp_min_dbm: f64,
    pub link: LinkModel,
}

impl XApp2Params {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        XApp2Params {
            thresholds: XApp2Thresholds::from_config(cfg),
            rsrp_min_dbm: cfg.rsrp_min_dbm,
            link: LinkModel::from_config(cfg),
        }
    }
}

/// Working copy of the network as seen through one report.
#[derive(Clone)]
struct Plan {
    used: Vec<u32>,
    tput: Vec<f64>,
    serving: Vec<Option<RcId>>,
    prbs: Vec<u32>,
    rate: Vec<f64>,
}

impl Plan {
    fn members(&self, rc: RcId) -> Vec<usize> {
        (0..self.serving.len())
            .filter(|&k| self.serving[k] == Some(rc))
            .collect()
    }
}

/// xApp1's idle sweep followed by transactional evacuation of lightly
/// loaded cells.
///
/// Candidate cells are taken in ascending PRB usage (then RC id) and
/// re-checked against the working plan before evacuation. Each UE of the
/// cell goes to the best remaining active cell where it clears the RSRP
/// floor and the receiver's load stays within `load_cap`; if any UE has no
/// such cell, nothing is emitted for that cell.
pub fn xapp2_decide(report: &KpmReport, params: &XApp2Params) -> Vec<ControlAction> {
    let th = params.thresholds;
    let link = params.link;
    let b_m = link.total_prbs;
    let mut actions = xapp1_decide(report);

    let n_rcs = report
        .cells
        .iter()
        .map(|c| c.rc_id.0 as usize + 1)
        .max()
        .unwrap_or(0);
    let mut asleep = vec![true; n_rcs];
    for c in &report.cells {
        asleep[c.rc_id.0 as usize] = c.state == RcState::Sleep;
    }
    for a in &actions {
        if let ControlAction::SleepRc(rc) = a {
            asleep[rc.0 as usize] = true;
        }
    }

    let mut plan = Plan {
        used: vec![0; n_rcs],
        tput: vec![0.0; n_rcs],
        serving: report.ues.iter().map(|u| u.serving_rc).collect(),
        prbs: vec![0; report.ues.len()],
        rate: report.ues.iter().map(|u| u.rate_bps).collect(),
    };
    for c in &report.cells {
        let m = c.rc_id.0 as usize;
        plan.used[m] = (c.prb_usage * b_m as f64).round() as u32;
        plan.tput[m] = c.dl_throughput_bps;
    }
    for (k, ue) in report.ues.iter().enumerate() {
        if let Some(rc) = ue.serving_rc {
            let rsrp = ue
                .rsrp_dbm_by_rc
                .get(&rc)
                .copied()
                .unwrap_or(f64::NEG_INFINITY);
            plan.prbs[k] = link.demand_from_rsrp(rsrp).prbs().unwrap_or(0);
        }
    }

    let mut low: Vec<(f64, RcId)> = report
        .cells
        .iter()
        .filter(|c| !asleep[c.rc_id.0 as usize])
        .filter(|c| c.prb_usage < th.low_load_prb && c.dl_throughput_bps < th.low_load_tput_bps)
        .map(|c| (c.prb_usage, c.rc_id))
        .collect();
    low.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for (_, m) in low {
        let mi = m.0 as usize;
        if asleep[mi] {
            continue;
        }
        let load_now = plan.used[mi] as f64 / b_m as f64;
        if !(load_now < th.low_load_prb && plan.tput[mi] < th.low_load_tput_bps) {
            continue;
        }
        let members = plan.members(m);
        let mut trial = plan.clone();
        let mut moves = Vec::with_capacity(members.len());
        let mut placed_all = true;
        for k in members {
            let ue = &report.ues[k];
            let target = best_candidate(ue.rsrp_dbm_by_rc.iter().filter_map(|(&n, &rsrp)| {
                let ni = n.0 as usize;
                if n == m || ni >= n_rcs || asleep[ni] || rsrp < params.rsrp_min_dbm {
                    return None;
                }
                let need = link.demand_from_rsrp(rsrp).prbs()?;
                let post = (trial.used[ni] + need) as f64 / b_m as f64;
                (post <= th.load_cap).then_some(Candidate {
                    rc: n,
                    rsrp_dbm: rsrp,
                    load: post,
                })
            }));
            let Some(target) = target else {
                placed_all = false;
                break;
            };
            let ni = target.rc.0 as usize;
            let need = link.demand_from_rsrp(target.rsrp_dbm).prbs().unwrap_or(0);
            let rate = need as f64 * link.rate_from_rsrp(target.rsrp_dbm);
            trial.used[mi] -= trial.prbs[k];
            trial.tput[mi] -= trial.rate[k];
            trial.used[ni] += need;
            trial.tput[ni] += rate;
            trial.serving[k] = Some(target.rc);
            trial.prbs[k] = need;
            trial.rate[k] = rate;
            moves.push(ControlAction::Handover {
                ue: UeId(ue.ue_id.0),
                target: target.rc,
            });
        }
        if placed_all {
            plan = trial;
            actions.extend(moves);
            actions.push(ControlAction::SleepRc(m));
            asleep[mi] = true;
        }
    }
    actions
}

pub struct AllOn;

impl Policy for AllOn {
    fn name(&self) -> &str {
        "all-on"
    }

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError> {
        Ok(all_on_decide(report))
    }
}

pub struct XApp1;

impl Policy for XApp1 {
    fn name(&self) -> &str {
        "xapp1"
    }

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError> {
        Ok(xapp1_decide(report))
    }
}

pub struct XApp2 {
    pub params: XApp2Params,
}

impl XApp2 {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        XApp2 {
            params: XApp2Params::from_config(cfg),
        }
    }
}

impl Policy for XApp2 {
    fn name(&self) -> &str {
        "xapp2"
    }

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError> {
        Ok(xapp2_decide(report, &self.params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PolicyKind {
    #[serde(rename = "all-on")]
    AllOn,
    #[serde(rename = "xapp1")]
    XApp1,
    #[serde(rename = "xapp2")]
    XApp2,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::AllOn, PolicyKind::XApp1, PolicyKind::XApp2];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::AllOn => "all-on",
            PolicyKind::XApp1 => "xapp1",
            PolicyKind::XApp2 => "xapp2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn build(self, cfg: &ScenarioConfig) -> Box<dyn Policy + Send> {
        match self {
            PolicyKind::AllOn => Box::new(AllOn),
            PolicyKind::XApp1 => Box::new(XApp1),
            PolicyKind::XApp2 => Box::new(XApp2::from_config(cfg)),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// RCs put to sleep by a batch, in order.
pub fn slept_by(actions: &[ControlAction]) -> BTreeSet<RcId> {
    actions
        .iter()
        .filter_map(|a| match a {
            ControlAction::SleepRc(rc) => Some(*rc),
            _ => None,
        })
        .collect()
}
