//! Link-level quantities: LOS probability, path loss (3GPP TR 38.901 UMi
//! street canyon and UMa), RSRP, per-PRB Shannon rate and PRB demand.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{PathlossPreset, ScenarioConfig};
use crate::netmodel::RadioCard;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const SUBCARRIERS_PER_PRB: f64 = 12.0;
/// Effective environment height for the breakpoint distance.
const ENV_HEIGHT_M: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("3D distance {0} m is below the 1 m model floor")]
    DistanceTooShort(f64),
    #[error("carrier {0} GHz outside the (0.5, 100) GHz model range")]
    CarrierOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub los: bool,
    pub rsrp_dbm: f64,
    pub snr_per_prb_db: f64,
    pub per_prb_rate_bps: f64,
}

/// Number of PRBs a UE needs on a given RC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrbDemand {
    Prbs(u32),
    Infeasible,
}

impl PrbDemand {
    pub fn prbs(self) -> Option<u32> {
        match self {
            PrbDemand::Prbs(n) => Some(n),
            PrbDemand::Infeasible => None,
        }
    }
}

pub fn los_probability(d2d: f64, preset: PathlossPreset, ue_height_m: f64) -> f64 {
    let d = d2d.max(0.0);
    if d <= 18.0 {
        return 1.0;
    }
    let p = match preset {
        PathlossPreset::UmiStreetCanyon => 18.0 / d + (-d / 36.0).exp() * (1.0 - 18.0 / d),
        PathlossPreset::Uma => {
            let c_prime = if ue_height_m <= 13.0 {
                0.0
            } else {
                ((ue_height_m - 13.0) / 10.0).powf(1.5)
            };
            (18.0 / d + (-d / 63.0).exp() * (1.0 - 18.0 / d))
                * (1.0 + c_prime * 1.25 * (d / 100.0).powi(3) * (-d / 150.0).exp())
        }
    };
    p.clamp(0.0, 1.0)
}

/// Path loss in dB. NLOS is floored at the LOS value of the same geometry.
pub fn path_loss(
    d3d: f64,
    fc_ghz: f64,
    los: bool,
    (bs_m, ue_m): (f64, f64),
    preset: PathlossPreset,
) -> Result<f64, RadioError> {
    if !(d3d >= 1.0) {
        return Err(RadioError::DistanceTooShort(d3d));
    }
    if !(fc_ghz > 0.5 && fc_ghz < 100.0) {
        return Err(RadioError::CarrierOutOfRange(fc_ghz));
    }
    let dh = bs_m - ue_m;
    let d2d = (d3d * d3d - dh * dh).max(0.0).sqrt();
    let breakpoint =
        4.0 * (bs_m - ENV_HEIGHT_M) * (ue_m - ENV_HEIGHT_M) * fc_ghz * 1e9 / SPEED_OF_LIGHT;
    let log_d = d3d.log10();
    let log_f = fc_ghz.log10();

    let pl_los = match preset {
        PathlossPreset::UmiStreetCanyon => {
            if d2d <= breakpoint {
                32.4 + 21.0 * log_d + 20.0 * log_f
            } else {
                32.4 + 40.0 * log_d + 20.0 * log_f
                    - 9.5 * (breakpoint * breakpoint + dh * dh).log10()
            }
        }
        PathlossPreset::Uma => {
            if d2d <= breakpoint {
                28.0 + 22.0 * log_d + 20.0 * log_f
            } else {
                28.0 + 40.0 * log_d + 20.0 * log_f
                    - 9.0 * (breakpoint * breakpoint + dh * dh).log10()
            }
        }
    };
    if los {
        return Ok(pl_los);
    }
    let pl_nlos = match preset {
        PathlossPreset::UmiStreetCanyon => 35.3 * log_d + 22.4 + 21.3 * log_f - 0.3 * (ue_m - 1.5),
        PathlossPreset::Uma => 13.54 + 39.08 * log_d + 20.0 * log_f - 0.6 * (ue_m - 1.5),
    };
    Ok(pl_los.max(pl_nlos))
}

/// Per-resource-element received power: transmit power spread evenly over
/// every subcarrier of the carrier, minus the total link loss.
pub fn rsrp(rc: &RadioCard, loss_db: f64) -> f64 {
    rsrp_from_tx(rc.tx_power_dbm, rc.total_prbs, loss_db)
}

pub fn rsrp_from_tx(tx_power_dbm: f64, total_prbs: u32, loss_db: f64) -> f64 {
    tx_power_dbm - 10.0 * (total_prbs as f64 * SUBCARRIERS_PER_PRB).log10() - loss_db
}

pub fn per_prb_rate(snr_per_prb_db: f64, prb_bw_hz: f64) -> f64 {
    let linear = 10f64.powf(snr_per_prb_db / 10.0);
    prb_bw_hz * (1.0 + linear).log2()
}

pub fn prb_demand(min_rate_bps: f64, per_prb_rate_bps: f64, total_prbs: u32) -> PrbDemand {
    if min_rate_bps <= 0.0 {
        return PrbDemand::Prbs(0);
    }
    if !(per_prb_rate_bps > 0.0) {
        return PrbDemand::Infeasible;
    }
    let mut need = (min_rate_bps / per_prb_rate_bps).ceil();
    // Guard against the quotient rounding down onto an integer.
    if need * per_prb_rate_bps < min_rate_bps {
        need += 1.0;
    }
    if need > total_prbs as f64 {
        PrbDemand::Infeasible
    } else {
        PrbDemand::Prbs(need as u32)
    }
}

/// Receiver-side parameters shared by the simulator and by xApps that need
/// to estimate PRB demand from reported RSRP.
///
/// SNR is always derived from RSRP, so an estimate made from a reported
/// RSRP matches the simulator's own figure bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub noise_per_prb_dbm: f64,
    pub prb_bandwidth_hz: f64,
    pub min_rate_bps: f64,
    pub total_prbs: u32,
}

impl LinkModel {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        LinkModel {
            noise_per_prb_dbm: cfg.noise_per_prb_dbm(),
            prb_bandwidth_hz: cfg.prb_bandwidth_hz,
            min_rate_bps: cfg.min_rate_bps,
            total_prbs: cfg.total_prbs,
        }
    }

    pub fn snr_from_rsrp(&self, rsrp_dbm: f64) -> f64 {
        rsrp_dbm + 10.0 * SUBCARRIERS_PER_PRB.log10() - self.noise_per_prb_dbm
    }

    pub fn rate_from_rsrp(&self, rsrp_dbm: f64) -> f64 {
        per_prb_rate(self.snr_from_rsrp(rsrp_dbm), self.prb_bandwidth_hz)
    }

    pub fn demand_from_rsrp(&self, rsrp_dbm: f64) -> PrbDemand {
        prb_demand(
            self.min_rate_bps,
            self.rate_from_rsrp(rsrp_dbm),
            self.total_prbs,
        )
    }

    pub fn budget(
        &self,
        rc: &RadioCard,
        pathloss_db: f64,
        shadowing_db: f64,
        los: bool,
    ) -> LinkBudget {
        let rsrp_dbm = rsrp(rc, pathloss_db + shadowing_db);
        let snr = self.snr_from_rsrp(rsrp_dbm);
        LinkBudget {
            pathloss_db,
            shadowing_db,
            los,
            rsrp_dbm,
            snr_per_prb_db: snr,
            per_prb_rate_bps: per_prb_rate(snr, self.prb_bandwidth_hz),
        }
    }
}
