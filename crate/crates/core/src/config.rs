//! Scenario configuration.
//!
//! A scenario file is a TOML document whose keys mirror [`ScenarioConfig`]
//! field names. Every key is optional and falls back to the default below;
//! unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse scenario file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    N77,
    N78,
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandName::N77 => f.write_str("n77"),
            BandName::N78 => f.write_str("n78"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub name: BandName,
    pub carrier_hz: f64,
}

impl Band {
    pub fn n77() -> Self {
        Band {
            name: BandName::N77,
            carrier_hz: 3.5e9,
        }
    }

    pub fn n78() -> Self {
        Band {
            name: BandName::N78,
            carrier_hz: 3.7e9,
        }
    }

    pub fn carrier_ghz(&self) -> f64 {
        self.carrier_hz / 1e9
    }
}

/// Large-scale path-loss model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathlossPreset {
    /// Urban micro, street canyon.
    UmiStreetCanyon,
    /// Urban macro.
    Uma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shadowing {
    None,
    /// Log-normal shadowing with the given standard deviation in dB.
    LogNormal(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario area (width, depth) in meters.
    pub area_m: (f64, f64),
    pub isd_m: f64,
    pub oru_height_m: f64,
    pub ue_height_m: f64,
    pub n_orus: usize,
    /// Grid rows; when absent the largest divisor of `n_orus` not above its
    /// square root is used (3 rows for 12 O-RUs).
    pub grid_rows: Option<usize>,
    /// First band is hosted on even RC ids, second on odd ones.
    pub bands: (Band, Band),
    pub tx_power_dbm: f64,
    pub p_active_w: f64,
    pub p_sleep_w: f64,
    pub p_tc_w: f64,
    pub pa_efficiency: f64,
    pub min_rate_bps: f64,
    pub rsrp_min_dbm: f64,
    pub total_prbs: u32,
    pub prb_bandwidth_hz: f64,
    pub load_cap: f64,
    pub low_load_prb: f64,
    pub low_load_tput_bps: f64,
    pub pathloss_preset: PathlossPreset,
    pub shadowing: Shadowing,
    pub noise_figure_db: f64,
    /// Control-loop step cap per trial.
    pub max_steps: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_m: (500.0, 500.0),
            isd_m: 100.0,
            oru_height_m: 10.0,
            ue_height_m: 1.5,
            n_orus: 12,
            grid_rows: None,
            bands: (Band::n77(), Band::n78()),
            tx_power_dbm: 30.0,
            p_active_w: 20.0,
            p_sleep_w: 5.0,
            p_tc_w: 1.0,
            pa_efficiency: 0.0167,
            min_rate_bps: 10e6,
            rsrp_min_dbm: -110.0,
            total_prbs: 273,
            prb_bandwidth_hz: 360e3,
            load_cap: 0.5,
            low_load_prb: 0.2,
            low_load_tput_bps: 50e6,
            pathloss_preset: PathlossPreset::UmiStreetCanyon,
            shadowing: Shadowing::None,
            noise_figure_db: 9.0,
            max_steps: 10,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_named(text, "<inline>")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_named(&text, &path.display().to_string())
    }

    fn parse_named(text: &str, path: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    /// Grid shape as (rows, cols).
    pub fn grid_shape(&self) -> Result<(usize, usize), ConfigError> {
        let n = self.n_orus;
        if n == 0 {
            return Err(ConfigError::Invalid("n_orus must be at least 1".into()));
        }
        let rows = match self.grid_rows {
            Some(r) => r,
            None => (1..=n)
                .filter(|r| r * r <= n && n.is_multiple_of(*r))
                .max()
                .unwrap_or(1),
        };
        if rows == 0 || !n.is_multiple_of(rows) {
            return Err(ConfigError::Invalid(format!(
                "n_orus = {n} is not factorable into {rows} grid rows"
            )));
        }
        Ok((rows, n / rows))
    }

    /// Thermal noise over one PRB including the receiver noise figure.
    pub fn noise_per_prb_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.prb_bandwidth_hz.log10() + self.noise_figure_db
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let (w, d) = self.area_m;
        if !(w > 0.0 && d > 0.0 && w.is_finite() && d.is_finite()) {
            return bad(format!("area_m must be positive, got ({w}, {d})"));
        }
        if !(self.isd_m > 0.0) {
            return bad(format!("isd_m must be positive, got {}", self.isd_m));
        }
        if !(self.oru_height_m > 0.0) || !(self.ue_height_m > 0.0) {
            return bad("antenna heights must be positive".into());
        }
        if self.oru_height_m <= self.ue_height_m {
            return bad("oru_height_m must exceed ue_height_m".into());
        }
        if self.bands.0.name == self.bands.1.name {
            return bad("the two bands must be distinct".into());
        }
        for b in [self.bands.0, self.bands.1] {
            let ghz = b.carrier_ghz();
            if !(ghz > 0.5 && ghz < 100.0) {
                return bad(format!(
                    "carrier of {} must be within (0.5, 100) GHz",
                    b.name
                ));
            }
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return bad(format!(
                "pa_efficiency must be in (0, 1], got {}",
                self.pa_efficiency
            ));
        }
        if !(self.load_cap > 0.0 && self.load_cap <= 1.0) {
            return bad(format!("load_cap must be in (0, 1], got {}", self.load_cap));
        }
        if !(self.low_load_prb >= 0.0 && self.low_load_prb < self.load_cap) {
            return bad("low_load_prb must be in [0, load_cap)".into());
        }
        if !(self.low_load_tput_bps >= 0.0) {
            return bad("low_load_tput_bps must be non-negative".into());
        }
        if !(self.p_sleep_w >= 0.0 && self.p_sleep_w < self.p_active_w) {
            return bad("require 0 <= p_sleep_w < p_active_w".into());
        }
        if !(self.p_tc_w >= 0.0) {
            return bad("p_tc_w must be non-negative".into());
        }
        if !(self.min_rate_bps >= 0.0) {
            return bad("min_rate_bps must be non-negative".into());
        }
        if self.total_prbs == 0 {
            return bad("total_prbs must be positive".into());
        }
        if !(self.prb_bandwidth_hz > 0.0) {
            return bad("prb_bandwidth_hz must be positive".into());
        }
        if let Shadowing::LogNormal(sigma) = self.shadowing {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad("shadowing sigma must be a finite non-negative dB value".into());
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        let (rows, cols) = self.grid_shape()?;
        let span_x = (cols as f64 - 1.0) * self.isd_m;
        let span_y = (rows as f64 - 1.0) * self.isd_m;
        if span_x > w || span_y > d {
            return bad(format!(
                "{rows}x{cols} grid at {} m spacing does not fit in {w}x{d} m",
                self.isd_m
            ));
        }
        Ok(())
    }
}
