use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::association::{associate_all, check_constraints, AssociationMap};
use crate::netmodel::{NetworkState, RcId};
use crate::power::{total_power, PowerBreakdown};

pub const DEFAULT_MAX_RCS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {rcs} RCs, above the exhaustive-search cap of {cap}")]
    TooLarge { rcs: usize, cap: usize },
    #[error("the exhaustive cap must stay below 32 RCs, got {0}")]
    CapTooLarge(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub active_set: Vec<RcId>,
    pub assoc: AssociationMap,
    pub power: PowerBreakdown,
    pub explored: u64,
}

struct Feasible {
    active: Vec<RcId>,
    sleeping: usize,
    assoc: AssociationMap,
    power: PowerBreakdown,
}

/// Lower power first, then more sleeping RCs, then the lexicographically
/// smallest active set.
fn better(a: &Feasible, b: &Feasible) -> Ordering {
    a.power
        .total_w
        .total_cmp(&b.power.total_w)
        .then(b.sleeping.cmp(&a.sleeping))
        .then_with(|| a.active.cmp(&b.active))
}

/// Exhaustive minimum-power active set.
///
/// Every subset of RCs is tried with greedy association restricted to it. A
/// subset is feasible when all constraints hold and every UE that is served
/// with all RCs active is still served.
pub fn oracle_solve(state: &NetworkState, max_rcs: usize) -> Result<OracleResult, OracleError> {
    if max_rcs >= 32 {
        return Err(OracleError::CapTooLarge(max_rcs));
    }
    let n = state.rcs.len();
    if n > max_rcs {
        return Err(OracleError::TooLarge {
            rcs: n,
            cap: max_rcs,
        });
    }
    let all_on = state.with_active_set(|_| true);
    let baseline = associate_all(&all_on);
    let servable: Vec<_> = all_on
        .ues
        .iter()
        .map(|u| u.ue_id)
        .filter(|&k| !baseline.is_outage(k))
        .collect();

    let subsets = 1u64 << n;
    let best = (0..subsets)
        .into_par_iter()
        .filter_map(|mask| {
            let candidate = state.with_active_set(|rc| mask >> rc.0 & 1 == 1);
            let assoc = associate_all(&candidate);
            if servable.iter().any(|&k| assoc.is_outage(k)) {
                return None;
            }
            if !check_constraints(&candidate, &assoc).feasible {
                return None;
            }
            let active: Vec<RcId> = (0..n as u32)
                .filter(|m| mask >> m & 1 == 1)
                .map(RcId)
                .collect();
            Some(Feasible {
                sleeping: n - active.len(),
                power: total_power(&candidate, &assoc),
                active,
                assoc,
            })
        })
        .min_by(better)
        .expect("the all-active subset is always feasible");

    Ok(OracleResult {
        active_set: best.active,
        assoc: best.assoc,
        power: best.power,
        explored: subsets,
    })
}
