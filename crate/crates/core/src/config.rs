//! Scenario configuration.
//!
//! A scenario is a TOML document. Top-level keys describe the physical
//! system; optional `[rotor]`, `[layout]`, `[reward]` and `[s2dc]` tables
//! hold the propulsion model, node placement, reward shaping and inner
//! solver settings. Unknown keys are rejected so that typos fail loudly.
//!
//! ```toml
//! area_side = 400.0
//! h_uav = 100.0
//! n_uav = 4
//! n_gt = 32
//! n_eve = 5
//! coverage_range = [150.0, 175.0, 125.0, 150.0]
//! service_capacity = [5, 7, 3, 5]
//!
//! [rotor]
//! p0 = 79.86
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotary-wing propulsion constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotorParams {
    /// Fuselage drag ratio.
    pub d0: f64,
    /// Air density, kg/m³.
    pub rho_a: f64,
    /// Rotor solidity.
    pub s_sol: f64,
    /// Rotor disc area, m².
    pub disc_area: f64,
    /// Blade tip speed, m/s.
    pub v_tip: f64,
    /// Blade profile power in hover, W.
    pub p0: f64,
    /// Induced power in hover, W.
    pub p1: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v0: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            d0: 0.3,
            rho_a: 1.225,
            s_sol: 0.05,
            disc_area: 0.503,
            v_tip: 120.0,
            p0: 79.86,
            p1: 88.63,
            v0: 4.03,
        }
    }
}

/// How the coverage test measures UAV-to-node distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMetric {
    /// 3D distance including the flight altitude.
    #[default]
    Slant,
    /// Ground-projected distance.
    Horizontal,
}

/// Ground node placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Number of GT hot spots.
    pub hotspots: usize,
    /// Standard deviation of GT scatter around a hot spot, meters.
    pub hotspot_std: f64,
    /// Fraction of GTs placed uniformly instead of around a hot spot.
    pub scatter_fraction: f64,
    /// Fixed UAV start positions; when empty UAVs start on a ring around the centre.
    pub uav_init: Vec<[f64; 2]>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            hotspots: 3,
            hotspot_std: 20.0,
            scatter_fraction: 0.0,
            uav_init: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub w_sr: f64,
    /// Energy weight. `None` means `1 / (N_K (P0 + P1) Δt)`.
    pub w_ec: Option<f64>,
    pub p_col: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_sr: 1.0,
            w_ec: None,
            p_col: 5.0,
        }
    }
}

/// Inner precoding solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct S2dcConfig {
    /// Maximum number of d.c. iterations.
    pub n_iter: usize,
    /// Stop when the objective moves less than this between iterations.
    pub tol: f64,
    pub mu_init: f64,
    pub mu_max: f64,
    /// Rank-one gap threshold relative to the trace.
    pub rank_tol: f64,
    /// Relative duality-gap target of each convex subproblem.
    pub subproblem_tol: f64,
}

impl Default for S2dcConfig {
    fn default() -> Self {
        Self {
            n_iter: 30,
            tol: 1e-4,
            mu_init: 1.0,
            mu_max: 1e3,
            rank_tol: 1e-4,
            subproblem_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Side D of the square service area, meters.
    pub area_side: f64,
    /// Flight altitude, meters.
    pub h_uav: f64,
    pub n_uav: usize,
    pub n_gt: usize,
    pub n_eve: usize,
    /// Coverage range per UAV, meters.
    pub coverage_range: Vec<f64>,
    /// Service capacity per UAV.
    pub service_capacity: Vec<usize>,
    pub coverage_metric: CoverageMetric,
    pub v_max: f64,
    pub v_min: f64,
    /// Number of selectable speeds, including hover.
    pub speed_levels: usize,
    /// Slot length Δt, seconds.
    pub slot_duration: f64,
    /// Episode length N_T in slots.
    pub n_slots: usize,
    /// Collision protection distance, meters.
    pub protection_distance: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Transmit power budget per UAV, W.
    pub p_max: f64,
    /// Noise power spectral density, dBm/Hz. Shared by GTs and Eves.
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub s_curve_a: f64,
    pub s_curve_b: f64,
    /// Mean excess loss of LoS links, dB.
    pub eta_los: f64,
    /// Mean excess loss of NLoS links, dB.
    pub eta_nlos: f64,
    /// Antennas per UAV.
    pub antennas: usize,
    pub rng_seed: u64,
    pub rotor: RotorParams,
    pub layout: LayoutConfig,
    pub reward: RewardConfig,
    pub s2dc: S2dcConfig,
}

impl Default for ScenarioConfig {
    /// Desk-scale scenario: 2 UAVs, 8 GTs, 2 Eves in a 200 m square.
    fn default() -> Self {
        Self {
            area_side: 200.0,
            h_uav: 100.0,
            n_uav: 2,
            n_gt: 8,
            n_eve: 2,
            coverage_range: vec![130.0, 150.0],
            service_capacity: vec![2, 3],
            coverage_metric: CoverageMetric::Slant,
            v_max: 25.0,
            v_min: 4.0,
            speed_levels: 5,
            slot_duration: 1.0,
            n_slots: 20,
            protection_distance: 10.0,
            f_c: 2.4e9,
            p_max: 35.0,
            noise_psd_dbm_hz: -170.0,
            bandwidth_hz: 1e6,
            s_curve_a: 9.61,
            s_curve_b: 0.15,
            eta_los: 1.0,
            eta_nlos: 20.0,
            antennas: 2,
            rng_seed: 0,
            rotor: RotorParams::default(),
            layout: LayoutConfig {
                hotspots: 2,
                hotspot_std: 15.0,
                scatter_fraction: 0.0,
                uav_init: vec![[60.0, 60.0], [140.0, 140.0]],
            },
            reward: RewardConfig::default(),
            s2dc: S2dcConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// The 400 m x 400 m convergence scenario with four heterogeneous UAVs.
    ///
    /// The listed coverage ranges are below the flight altitude, so they are
    /// measured on the ground plane.
    pub fn convergence_400m() -> Self {
        Self {
            area_side: 400.0,
            n_uav: 4,
            n_gt: 32,
            n_eve: 5,
            coverage_range: vec![50.0, 75.0, 25.0, 50.0],
            service_capacity: vec![5, 7, 3, 5],
            coverage_metric: CoverageMetric::Horizontal,
            n_slots: 40,
            layout: LayoutConfig {
                hotspots: 4,
                hotspot_std: 25.0,
                scatter_fraction: 0.0,
                uav_init: vec![[175.0, 175.0], [225.0, 225.0], [175.0, 225.0], [225.0, 175.0]],
            },
            ..Self::default()
        }
    }

    /// The 800 m x 800 m scaling scenario; heterogeneity is resampled per seed.
    pub fn scaling_800m(n_uav: usize) -> Self {
        Self {
            area_side: 800.0,
            n_uav,
            n_gt: 100,
            n_eve: 5,
            coverage_range: vec![100.0; n_uav],
            service_capacity: vec![15; n_uav],
            coverage_metric: CoverageMetric::Horizontal,
            n_slots: 50,
            layout: LayoutConfig {
                hotspots: 5,
                hotspot_std: 30.0,
                scatter_fraction: 0.2,
                uav_init: Vec::new(),
            },
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::config(toml_key(&e), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_value(value: toml::Value) -> Result<Self> {
        let cfg: ScenarioConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(toml_key(&e), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn noise_power(&self) -> f64 {
        crate::channel::noise_power(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    /// Reward weight of the energy term.
    pub fn energy_weight(&self) -> f64 {
        self.reward.w_ec.unwrap_or_else(|| {
            1.0 / (self.n_uav as f64 * (self.rotor.p0 + self.rotor.p1) * self.slot_duration)
        })
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be a positive finite number, got {v}")))
            }
        }
        positive("area_side", self.area_side)?;
        positive("h_uav", self.h_uav)?;
        positive("v_min", self.v_min)?;
        positive("v_max", self.v_max)?;
        if self.v_max <= self.v_min {
            return Err(Error::config("v_max", "must exceed v_min"));
        }
        if self.speed_levels < 3 {
            return Err(Error::config("speed_levels", "needs at least 3 levels (hover, v_min, v_max)"));
        }
        positive("slot_duration", self.slot_duration)?;
        if self.n_slots == 0 {
            return Err(Error::config("n_slots", "must be at least 1"));
        }
        if !(self.protection_distance >= 0.0) {
            return Err(Error::config("protection_distance", "must be non-negative"));
        }
        positive("f_c", self.f_c)?;
        positive("p_max", self.p_max)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::config("noise_psd_dbm_hz", "must be finite"));
        }
        positive("s_curve_a", self.s_curve_a)?;
        positive("s_curve_b", self.s_curve_b)?;
        if self.antennas == 0 {
            return Err(Error::config("antennas", "must be at least 1"));
        }
        if self.n_uav == 0 {
            return Err(Error::config("n_uav", "must be at least 1"));
        }
        if self.coverage_range.len() != self.n_uav {
            return Err(Error::config(
                "coverage_range",
                format!("expected {} entries, got {}", self.n_uav, self.coverage_range.len()),
            ));
        }
        for &c in &self.coverage_range {
            positive("coverage_range", c)?;
        }
        if self.service_capacity.len() != self.n_uav {
            return Err(Error::config(
                "service_capacity",
                format!("expected {} entries, got {}", self.n_uav, self.service_capacity.len()),
            ));
        }
        if self.service_capacity.iter().any(|&n| n == 0) {
            return Err(Error::config("service_capacity", "every UAV must serve at least one GT"));
        }
        let r = &self.rotor;
        for (key, v) in [
            ("rotor.d0", r.d0),
            ("rotor.rho_a", r.rho_a),
            ("rotor.s_sol", r.s_sol),
            ("rotor.disc_area", r.disc_area),
            ("rotor.v_tip", r.v_tip),
            ("rotor.p0", r.p0),
            ("rotor.p1", r.p1),
            ("rotor.v0", r.v0),
        ] {
            positive(key, v)?;
        }
        let l = &self.layout;
        if !l.uav_init.is_empty() {
            if l.uav_init.len() != self.n_uav {
                return Err(Error::config(
                    "layout.uav_init",
                    format!("expected {} positions, got {}", self.n_uav, l.uav_init.len()),
                ));
            }
            for p in &l.uav_init {
                if p.iter().any(|&c| !(0.0..=self.area_side).contains(&c)) {
                    return Err(Error::config("layout.uav_init", "start positions must lie inside the area"));
                }
            }
        }
        if self.n_gt > 0 && l.hotspots == 0 && l.scatter_fraction < 1.0 {
            return Err(Error::config("layout.hotspots", "must be at least 1 unless scatter_fraction = 1"));
        }
        if !(0.0..=1.0).contains(&l.scatter_fraction) {
            return Err(Error::config("layout.scatter_fraction", "must lie in [0, 1]"));
        }
        if !(l.hotspot_std >= 0.0) {
            return Err(Error::config("layout.hotspot_std", "must be non-negative"));
        }
        if let Some(w) = self.reward.w_ec {
            if !(w >= 0.0) {
                return Err(Error::config("reward.w_ec", "must be non-negative"));
            }
        }
        let s = &self.s2dc;
        if s.n_iter == 0 {
            return Err(Error::config("s2dc.n_iter", "must be at least 1"));
        }
        positive("s2dc.mu_init", s.mu_init)?;
        if s.mu_max < s.mu_init {
            return Err(Error::config("s2dc.mu_max", "must be at least mu_init"));
        }
        positive("s2dc.tol", s.tol)?;
        positive("s2dc.rank_tol", s.rank_tol)?;
        positive("s2dc.subproblem_tol", s.subproblem_tol)?;
        Ok(())
    }
}

pub(crate) fn toml_key(e: &toml::de::Error) -> String {
    // serde reports unknown fields as "unknown field `name`, expected ..."
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "<document>".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ScenarioConfig::default().validate().unwrap();
        ScenarioConfig::convergence_400m().validate().unwrap();
        ScenarioConfig::scaling_800m(6).validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::convergence_400m();
        let text = cfg.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = ScenarioConfig::from_toml_str("p_max = 10.0\n[rotor]\np0 = 80.0\n").unwrap();
        assert_eq!(cfg.p_max, 10.0);
        assert_eq!(cfg.rotor.p0, 80.0);
        assert_eq!(cfg.rotor.p1, 88.63);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::from_toml_str("p_maxx = 3.0").unwrap_err();
        assert!(err.to_string().contains("p_maxx"), "{err}");
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let err = ScenarioConfig::from_toml_str("v_max = 3.0").unwrap_err();
        assert!(err.to_string().contains("v_max"), "{err}");
        let err = ScenarioConfig::from_toml_str("coverage_range = [10.0]").unwrap_err();
        assert!(err.to_string().contains("coverage_range"), "{err}");
        let err = ScenarioConfig::from_toml_str("slot_duration = 0.0").unwrap_err();
        assert!(err.to_string().contains("slot_duration"), "{err}");
        let err = ScenarioConfig::from_toml_str("[rotor]\nv_tip = -1.0").unwrap_err();
        assert!(err.to_string().contains("rotor.v_tip"), "{err}");
    }

    #[test]
    fn default_energy_weight_normalizes_hover() {
        let cfg = ScenarioConfig::default();
        let hover = cfg.n_uav as f64 * (cfg.rotor.p0 + cfg.rotor.p1) * cfg.slot_duration;
        assert!((cfg.energy_weight() * hover - 1.0).abs() < 1e-15);
    }
}
