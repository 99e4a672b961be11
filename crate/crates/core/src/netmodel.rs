//! Physical scenario: the O-RU grid, the radio cards it hosts, the UE drop
//! and the per-link channel realisation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Band, ConfigError, ScenarioConfig, Shadowing};
use crate::radio::{self, LinkBudget, LinkModel};
use crate::rng::TrialRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RcId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OruId(pub u32);

impl fmt::Display for RcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rc{}", self.0)
    }
}

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ue{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn distance_2d(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_3d(&self, other: &Position) -> f64 {
        let d2 = self.distance_2d(other);
        d2.hypot(self.z - other.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RcState {
    Active,
    Sleep,
}

impl RcState {
    /// The binary activity indicator used by the power model.
    pub fn alpha(self) -> f64 {
        match self {
            RcState::Active => 1.0,
            RcState::Sleep => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioCard {
    pub rc_id: RcId,
    pub oru_id: OruId,
    pub band: Band,
    pub tx_power_dbm: f64,
    pub state: RcState,
    pub total_prbs: u32,
}

impl RadioCard {
    pub fn is_active(&self) -> bool {
        self.state == RcState::Active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ORadioUnit {
    pub oru_id: OruId,
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub ue_id: UeId,
    pub position: Position,
    pub min_rate_bps: f64,
}

/// The network a trial operates on.
///
/// RC `2n` is the first configured band of O-RU `n`, RC `2n + 1` the second.
/// Link budgets are fixed once a UE is placed and are shared between clones.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub orus: Vec<ORadioUnit>,
    pub rcs: Vec<RadioCard>,
    pub ues: Vec<UserEquipment>,
    pub config: ScenarioConfig,
    pub rng_seed: u64,
    links: Arc<Vec<Vec<LinkBudget>>>,
}

impl NetworkState {
    pub fn rc(&self, id: RcId) -> Option<&RadioCard> {
        self.rcs.get(id.0 as usize)
    }

    pub fn ue(&self, id: UeId) -> Option<&UserEquipment> {
        self.ues.get(id.0 as usize)
    }

    pub fn link(&self, ue: UeId, rc: RcId) -> &LinkBudget {
        &self.links[ue.0 as usize][rc.0 as usize]
    }

    pub fn links_of(&self, ue: UeId) -> &[LinkBudget] {
        &self.links[ue.0 as usize]
    }

    pub fn link_model(&self) -> LinkModel {
        LinkModel::from_config(&self.config)
    }

    pub fn set_state(&mut self, rc: RcId, state: RcState) {
        self.rcs[rc.0 as usize].state = state;
    }

    /// Sets every RC to `Active` when `active(rc)` holds, `Sleep` otherwise.
    pub fn with_active_set(&self, active: impl Fn(RcId) -> bool) -> NetworkState {
        let mut next = self.clone();
        for rc in &mut next.rcs {
            rc.state = if active(rc.rc_id) {
                RcState::Active
            } else {
                RcState::Sleep
            };
        }
        next
    }

    pub fn sleeping_count(&self) -> usize {
        self.rcs.iter().filter(|rc| !rc.is_active()).count()
    }

    /// Digest of the UE layout; equal hashes mean identical UE drops.
    pub fn layout_hash(&self) -> String {
        let mut h = Sha256::new();
        for ue in &self.ues {
            h.update(ue.ue_id.0.to_le_bytes());
            for v in [ue.position.x, ue.position.y, ue.position.z, ue.min_rate_bps] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn check_integrity(&self) -> Result<(), String> {
        if self.rcs.len() != 2 * self.orus.len() {
            return Err(format!(
                "{} RCs for {} O-RUs",
                self.rcs.len(),
                self.orus.len()
            ));
        }
        for (i, rc) in self.rcs.iter().enumerate() {
            if rc.rc_id.0 as usize != i {
                return Err(format!("RC at slot {i} carries id {}", rc.rc_id.0));
            }
            if rc.oru_id.0 as usize != i / 2 {
                return Err(format!("{} is not hosted by O-RU {}", rc.rc_id, i / 2));
            }
        }
        if self.links.len() != self.ues.len()
            || self.links.iter().any(|l| l.len() != self.rcs.len())
        {
            return Err("link table does not match UE and RC counts".into());
        }
        Ok(())
    }
}

/// Lays O-RUs on a `rows x cols` grid with `isd_m` spacing, centred in the
/// area. Each O-RU gets one RC per band, all initially active.
pub fn build_grid_topology(config: &ScenarioConfig) -> Result<NetworkState, ConfigError> {
    config.validate()?;
    let (rows, cols) = config.grid_shape()?;
    let (width, depth) = config.area_m;
    let off_x = (width - (cols as f64 - 1.0) * config.isd_m) / 2.0;
    let off_y = (depth - (rows as f64 - 1.0) * config.isd_m) / 2.0;

    let mut orus = Vec::with_capacity(config.n_orus);
    let mut rcs = Vec::with_capacity(2 * config.n_orus);
    for row in 0..rows {
        for col in 0..cols {
            let oru_id = OruId((row * cols + col) as u32);
            orus.push(ORadioUnit {
                oru_id,
                position: Position {
                    x: off_x + col as f64 * config.isd_m,
                    y: off_y + row as f64 * config.isd_m,
                    z: config.oru_height_m,
                },
            });
            for band in [config.bands.0, config.bands.1] {
                rcs.push(RadioCard {
                    rc_id: RcId(rcs.len() as u32),
                    oru_id,
                    band,
                    tx_power_dbm: config.tx_power_dbm,
                    state: RcState::Active,
                    total_prbs: config.total_prbs,
                });
            }
        }
    }
    Ok(NetworkState {
        orus,
        rcs,
        ues: Vec::new(),
        config: config.clone(),
        rng_seed: 0,
        links: Arc::new(Vec::new()),
    })
}

/// Drops `n_ues` static UEs uniformly over the area and draws their channel.
///
/// Positions come from the seed's position stream; the LOS state (and
/// shadowing, if enabled) of every (UE, RC) link comes from its channel
/// stream, drawn UE-major then RC-ascending.
pub fn place_ues(mut state: NetworkState, n_ues: usize, seed: u64) -> NetworkState {
    if n_ues == 0 {
        return state;
    }
    let cfg = state.config.clone();
    let (width, depth) = cfg.area_m;
    let mut pos_rng = TrialRng::positions(seed);
    let mut chan_rng = TrialRng::channel(seed);
    let model = LinkModel::from_config(&cfg);
    let mut links: Vec<Vec<LinkBudget>> = state.links.as_ref().clone();

    for _ in 0..n_ues {
        let x = pos_rng.uniform() * width;
        let y = pos_rng.uniform() * depth;
        let ue = UserEquipment {
            ue_id: UeId(state.ues.len() as u32),
            position: Position {
                x,
                y,
                z: cfg.ue_height_m,
            },
            min_rate_bps: cfg.min_rate_bps,
        };
        let row = state
            .rcs
            .iter()
            .map(|rc| {
                let site = state.orus[rc.oru_id.0 as usize].position;
                let d2d = site.distance_2d(&ue.position);
                let d3d = site.distance_3d(&ue.position).max(1.0);
                let los = chan_rng.uniform()
                    < radio::los_probability(d2d, cfg.pathloss_preset, ue.position.z);
                let shadow = match cfg.shadowing {
                    Shadowing::None => 0.0,
                    Shadowing::LogNormal(sigma) => sigma * chan_rng.standard_normal(),
                };
                let pl = radio::path_loss(
                    d3d,
                    rc.band.carrier_ghz(),
                    los,
                    (site.z, ue.position.z),
                    cfg.pathloss_preset,
                )
                .expect("validated config keeps links inside the model domain");
                model.budget(rc, pl, shadow, los)
            })
            .collect();
        links.push(row);
        state.ues.push(ue);
    }
    state.links = Arc::new(links);
    state.rng_seed = seed;
    state
}

/// Topology plus a seeded UE drop.
pub fn build_scenario(
    config: &ScenarioConfig,
    n_ues: usize,
    seed: u64,
) -> Result<NetworkState, ConfigError> {
    Ok(place_ues(build_grid_topology(config)?, n_ues, seed))
}
