//! Radio-card power model: a fixed term that depends on the Active/Sleep
//! mode, a data term proportional to PRB usage, and the transceiver chains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{load, AssociationMap};
use crate::netmodel::{NetworkState, RadioCard, RcId};

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("PA efficiency must be in (0, 1], got {0}")]
    Efficiency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub fixed_w: f64,
    pub data_w: f64,
    pub tc_w: f64,
    pub total_w: f64,
}

impl PowerBreakdown {
    pub fn new(fixed_w: f64, data_w: f64, tc_w: f64) -> Self {
        PowerBreakdown {
            fixed_w,
            data_w,
            tc_w,
            total_w: fixed_w + data_w + tc_w,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn fixed_power(rcs: &[RadioCard], p_active_w: f64, p_sleep_w: f64) -> f64 {
    rcs.iter()
        .map(|rc| {
            let a = rc.state.alpha();
            a * p_active_w + (1.0 - a) * p_sleep_w
        })
        .sum()
}

/// Transmit-power term. Sleeping RCs contribute nothing whatever load is
/// recorded for them; RCs missing from `loads` count as unloaded.
pub fn data_power(
    rcs: &[RadioCard],
    loads: &BTreeMap<RcId, f64>,
    pa_efficiency: f64,
) -> Result<f64, PowerError> {
    if !(pa_efficiency > 0.0 && pa_efficiency <= 1.0) {
        return Err(PowerError::Efficiency(pa_efficiency));
    }
    Ok(rcs
        .iter()
        .map(|rc| {
            let usage = loads.get(&rc.rc_id).copied().unwrap_or(0.0);
            rc.state.alpha() * dbm_to_watts(rc.tx_power_dbm) / pa_efficiency * usage
        })
        .sum())
}

/// One RF chain per active RC.
pub fn transceiver_power(rcs: &[RadioCard], p_tc_w: f64) -> f64 {
    rcs.iter().filter(|rc| rc.is_active()).count() as f64 * p_tc_w
}

pub fn total_power(state: &NetworkState, assoc: &AssociationMap) -> PowerBreakdown {
    let cfg = &state.config;
    let loads: BTreeMap<RcId, f64> = state
        .rcs
        .iter()
        .map(|rc| (rc.rc_id, load(state, rc.rc_id, assoc)))
        .collect();
    let fixed = fixed_power(&state.rcs, cfg.p_active_w, cfg.p_sleep_w);
    let data = data_power(&state.rcs, &loads, cfg.pa_efficiency)
        .expect("validated config has a positive PA efficiency");
    let tc = transceiver_power(&state.rcs, cfg.p_tc_w);
    PowerBreakdown::new(fixed, data, tc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::associate_all;
    use crate::config::ScenarioConfig;
    use crate::netmodel::{build_grid_topology, build_scenario, RcState};
    use proptest::prelude::*;

    fn cards(states: &[RcState]) -> Vec<RadioCard> {
        let base = build_grid_topology(&ScenarioConfig::default()).unwrap().rcs[0];
        states
            .iter()
            .enumerate()
            .map(|(i, &state)| RadioCard {
                rc_id: RcId(i as u32),
                state,
                ..base
            })
            .collect()
    }

    #[test]
    fn fixed_power_reference_values() {
        assert_eq!(
            fixed_power(&cards(&[RcState::Active; 24]), 20.0, 5.0),
            480.0
        );
        assert_eq!(fixed_power(&cards(&[RcState::Sleep; 24]), 20.0, 5.0), 120.0);
        assert_eq!(fixed_power(&[], 20.0, 5.0), 0.0);
    }

    #[test]
    fn data_power_reference_values() {
        let rcs = cards(&[RcState::Active]);
        let loads = BTreeMap::from([(RcId(0), 1.0)]);
        let w = data_power(&rcs, &loads, 0.0167).unwrap();
        assert!((w - 1.0 / 0.0167).abs() < 1e-9);
        assert!((w - 59.88).abs() < 0.01);

        let zero = BTreeMap::from([(RcId(0), 0.0)]);
        assert_eq!(data_power(&rcs, &zero, 0.0167).unwrap(), 0.0);

        let asleep = cards(&[RcState::Sleep]);
        let half = BTreeMap::from([(RcId(0), 0.5)]);
        assert_eq!(data_power(&asleep, &half, 0.0167).unwrap(), 0.0);

        assert_eq!(
            data_power(&rcs, &loads, 0.0),
            Err(PowerError::Efficiency(0.0))
        );
    }

    #[test]
    fn transceiver_power_reference_values() {
        assert_eq!(transceiver_power(&cards(&[RcState::Active; 24]), 1.0), 24.0);
        assert_eq!(transceiver_power(&cards(&[RcState::Sleep; 24]), 1.0), 0.0);
        let mut mixed = vec![RcState::Active; 10];
        mixed.extend([RcState::Sleep; 14]);
        assert_eq!(transceiver_power(&cards(&mixed), 1.0), 10.0);
    }

    #[test]
    fn dbm_conversion() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn empty_network_totals() {
        let s = build_grid_topology(&ScenarioConfig::default()).unwrap();
        let a = associate_all(&s);
        assert_eq!(total_power(&s, &a), PowerBreakdown::new(480.0, 0.0, 24.0));
        assert_eq!(total_power(&s, &a).total_w, 504.0);
        let asleep = s.with_active_set(|_| false);
        assert_eq!(total_power(&asleep, &a).total_w, 120.0);
    }

    #[test]
    fn sleeping_idle_rc_saves_sixteen_watts() {
        let s = build_scenario(&ScenarioConfig::default(), 10, 4).unwrap();
        let a = associate_all(&s);
        let before = total_power(&s, &a);
        for rc in &s.rcs {
            if a.served_count(rc.rc_id) == 0 {
                let mut t = s.clone();
                t.set_state(rc.rc_id, RcState::Sleep);
                let after = total_power(&t, &a);
                assert!((before.total_w - after.total_w - 16.0).abs() < 1e-9);
                assert_eq!(before.data_w, after.data_w);
            }
        }
    }

    proptest! {
        #[test]
        fn breakdown_sums_and_is_permutation_invariant(
            states in proptest::collection::vec(any::<bool>(), 1..30),
            loads in proptest::collection::vec(0.0f64..=1.0, 30),
            rot in 0usize..30,
        ) {
            let st: Vec<RcState> = states.iter().map(|&a| if a { RcState::Active } else { RcState::Sleep }).collect();
            let rcs = cards(&st);
            let lm: BTreeMap<RcId, f64> = rcs.iter().map(|rc| (rc.rc_id, loads[rc.rc_id.0 as usize])).collect();
            let b = PowerBreakdown::new(
                fixed_power(&rcs, 20.0, 5.0),
                data_power(&rcs, &lm, 0.0167).unwrap(),
                transceiver_power(&rcs, 1.0),
            );
            prop_assert_eq!(b.total_w, b.fixed_w + b.data_w + b.tc_w);
            prop_assert!(b.fixed_w >= 0.0 && b.data_w >= 0.0 && b.tc_w >= 0.0);

            // Relabel: rotate ids, carry loads along.
            let n = rcs.len();
            let relabeled: Vec<RadioCard> = rcs.iter().map(|rc| RadioCard { rc_id: RcId(((rc.rc_id.0 as usize + rot) % n) as u32), ..*rc }).collect();
            let lm2: BTreeMap<RcId, f64> = rcs.iter().zip(&relabeled).map(|(a, b)| (b.rc_id, lm[&a.rc_id])).collect();
            let b2 = PowerBreakdown::new(
                fixed_power(&relabeled, 20.0, 5.0),
                data_power(&relabeled, &lm2, 0.0167).unwrap(),
                transceiver_power(&relabeled, 1.0),
            );
            prop_assert!((b.total_w - b2.total_w).abs() < 1e-9);
        }

        #[test]
        fn data_power_linear_in_load(l1 in 0.0f64..=1.0, l2 in 0.0f64..=1.0) {
            let rcs = cards(&[RcState::Active]);
            let p = |l: f64| data_power(&rcs, &BTreeMap::from([(RcId(0), l)]), 0.0167).unwrap();
            prop_assert!((p(l1) + p(l2) - (p(l1 + l2) )).abs() < 1e-9);
        }
    }
}
