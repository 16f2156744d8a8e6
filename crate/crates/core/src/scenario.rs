//! Scenario configuration and deployment geometry.
//!
//! A [`ScenarioConfig`] is the single source of truth for a run: every
//! tunable of the simulation setup plus the seed. Configs load from TOML
//! (either a flat config file or a run manifest carrying a `[config]`
//! table) and validate before use.
//!
//! [`build_deployment`] produces the geometry for one drop: the base
//! station at the area center, repeater/AP sites on an equally spaced
//! square mesh, and users placed uniformly from the drop's random stream.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// System architecture under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Centralized massive MIMO: one co-located array at the base station.
    Cmimo,
    /// Distributed MIMO: single-antenna APs on the site mesh, jointly processed.
    Dmimo,
    /// Repeater-assisted massive MIMO: C-MIMO plus amplify-and-forward
    /// repeaters at the site positions.
    Ramimo,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Cmimo, Mode::Dmimo, Mode::Ramimo];

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Cmimo => "cmimo",
            Mode::Dmimo => "dmimo",
            Mode::Ramimo => "ramimo",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cmimo" | "c-mimo" => Ok(Mode::Cmimo),
            "dmimo" | "d-mimo" => Ok(Mode::Dmimo),
            "ramimo" | "ra-mimo" => Ok(Mode::Ramimo),
            other => Err(Error::validation(
                "mode",
                format!("unknown mode `{other}` (expected cmimo, dmimo or ramimo)"),
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Every tunable for a simulation run.
///
/// Defaults reproduce the reference setup: 400 m square, 8 users, 64
/// sites, 3.6 GHz, 20 MHz, 290 K, 5 dB noise figures, 20 dBm terminal and
/// repeater output power, 10 dB K-factor, 45 dB gain cap, 40 dB tau.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulation square side, meters.
    pub area_side_m: f64,
    pub num_users: usize,
    /// Repeater or AP positions; must be a perfect square (mesh constraint).
    pub num_sites: usize,
    /// Base station uniform linear array size.
    pub num_bs_antennas: usize,
    pub carrier_freq_ghz: f64,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    /// Base station (and D-MIMO AP) receiver noise figure, dB.
    pub bs_nf_db: f64,
    /// Repeater noise figure, dB.
    pub rep_nf_db: f64,
    pub user_tx_power_dbm: f64,
    /// Repeater maximum output power, dBm.
    pub rep_max_out_dbm: f64,
    pub bs_height_m: f64,
    pub terminal_height_m: f64,
    /// Site (repeater/AP) height above terminal height, meters.
    pub site_height_above_terminal_m: f64,
    /// Ricean K-factor for LoS links, dB.
    pub k_factor_db: f64,
    pub mode: Mode,
    /// Repeater amplification cap (power gain), dB. `+inf` removes the cap.
    pub gain_cap_db: f64,
    /// Minimum allowed ratio of BS thermal noise power to received amplified
    /// repeater noise power, dB. `+inf` forces all repeater gains to zero.
    pub tau_db: f64,
    /// Activation threshold margin above the repeater noise floor, dB.
    /// `+inf` keeps every repeater idle.
    pub activation_snr_margin_db: f64,
    pub num_drops: usize,
    pub seed: u64,
    /// Debug aid: freeze every repeater response phase at zero instead of
    /// drawing it uniformly per drop.
    pub rep_zero_phase: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_side_m: 400.0,
            num_users: 8,
            num_sites: 64,
            num_bs_antennas: 64,
            carrier_freq_ghz: 3.6,
            bandwidth_hz: 20e6,
            temperature_k: 290.0,
            bs_nf_db: 5.0,
            rep_nf_db: 5.0,
            user_tx_power_dbm: 20.0,
            rep_max_out_dbm: 20.0,
            bs_height_m: 10.0,
            terminal_height_m: 1.5,
            site_height_above_terminal_m: 10.0,
            k_factor_db: 10.0,
            mode: Mode::Ramimo,
            gain_cap_db: 45.0,
            tau_db: 40.0,
            activation_snr_margin_db: 10.0,
            num_drops: 1000,
            seed: 1,
            rep_zero_phase: false,
        }
    }
}

impl ScenarioConfig {
    /// Parse a TOML config. Accepts either a flat config document or a run
    /// manifest containing a `[config]` table; missing keys take defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let config_value = match table.get("config") {
            Some(nested) => nested.clone(),
            None => toml::Value::Table(table),
        };
        let cfg: ScenarioConfig = config_value
            .try_into()
            .map_err(|e| Error::Parse(format!("{e}")))?;
        cfg.validated()
    }

    /// Validate and return the config, or a descriptive error naming the
    /// offending field.
    pub fn validated(self) -> Result<Self> {
        validate_config(self)
    }

    pub fn user_tx_power_w(&self) -> f64 {
        dbm_to_watts(self.user_tx_power_dbm)
    }

    pub fn rep_max_out_w(&self) -> f64 {
        dbm_to_watts(self.rep_max_out_dbm)
    }

    /// Mesh side length: sqrt(num_sites). Only valid after validation.
    pub fn mesh_side(&self) -> usize {
        (self.num_sites as f64).sqrt().round() as usize
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

fn require_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite, got {v}")))
    }
}

fn require_positive(field: &'static str, v: f64) -> Result<()> {
    require_finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

/// Check all config invariants; returns the config unchanged on success.
///
/// `tau_db`, `activation_snr_margin_db` and `gain_cap_db` may be `+inf`
/// (the repeater pipeline degrades gracefully: zero gains, all-idle, or
/// uncapped); NaN is rejected everywhere.
pub fn validate_config(cfg: ScenarioConfig) -> Result<ScenarioConfig> {
    require_positive("area_side_m", cfg.area_side_m)?;
    if cfg.num_users == 0 {
        return Err(Error::validation("num_users", "must be >= 1"));
    }
    if cfg.num_drops == 0 {
        return Err(Error::validation("num_drops", "must be >= 1"));
    }
    if cfg.num_sites == 0 {
        return Err(Error::validation("num_sites", "must be >= 1"));
    }
    if cfg.num_bs_antennas == 0 {
        return Err(Error::validation("num_bs_antennas", "must be >= 1"));
    }
    let side = (cfg.num_sites as f64).sqrt().round() as usize;
    if side * side != cfg.num_sites {
        return Err(Error::validation(
            "num_sites",
            format!("{} is not a perfect square", cfg.num_sites),
        ));
    }
    require_positive("carrier_freq_ghz", cfg.carrier_freq_ghz)?;
    require_positive("bandwidth_hz", cfg.bandwidth_hz)?;
    require_positive("temperature_k", cfg.temperature_k)?;
    require_finite("bs_nf_db", cfg.bs_nf_db)?;
    require_finite("rep_nf_db", cfg.rep_nf_db)?;
    require_finite("user_tx_power_dbm", cfg.user_tx_power_dbm)?;
    require_finite("rep_max_out_dbm", cfg.rep_max_out_dbm)?;
    require_positive("bs_height_m", cfg.bs_height_m)?;
    if !cfg.terminal_height_m.is_finite() || cfg.terminal_height_m < 0.0 {
        return Err(Error::validation("terminal_height_m", "must be finite and >= 0"));
    }
    require_positive("site_height_above_terminal_m", cfg.site_height_above_terminal_m)?;
    require_finite("k_factor_db", cfg.k_factor_db)?;
    for (field, v) in [
        ("gain_cap_db", cfg.gain_cap_db),
        ("tau_db", cfg.tau_db),
        ("activation_snr_margin_db", cfg.activation_snr_margin_db),
    ] {
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::validation(field, format!("must be a number or +inf, got {v}")));
        }
    }
    Ok(cfg)
}

/// A point in the simulation volume, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Horizontal (ground-plane) distance.
    pub fn distance_2d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn distance_3d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Positions for one drop: deterministic infrastructure, random users.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub bs: Point3,
    /// Repeater/AP sites, mesh row-major (x fastest).
    pub sites: Vec<Point3>,
    pub users: Vec<Point3>,
}

/// Generate the deployment for one drop.
///
/// The base station sits at the area center at `bs_height_m`. Sites form a
/// `sqrt(num_sites)` x `sqrt(num_sites)` mesh of pitch `area/side` with a
/// half-pitch edge margin, at `terminal_height + site_height_above_terminal`.
/// Users are drawn uniformly over the square from `rng` (x then y per user,
/// ascending user index).
pub fn build_deployment(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Deployment {
    let a = cfg.area_side_m;
    let bs = Point3::new(a / 2.0, a / 2.0, cfg.bs_height_m);

    let side = cfg.mesh_side();
    let pitch = a / side as f64;
    let site_z = cfg.terminal_height_m + cfg.site_height_above_terminal_m;
    let mut sites = Vec::with_capacity(cfg.num_sites);
    for j in 0..side {
        for i in 0..side {
            sites.push(Point3::new(
                (i as f64 + 0.5) * pitch,
                (j as f64 + 0.5) * pitch,
                site_z,
            ));
        }
    }

    let users = (0..cfg.num_users)
        .map(|_| {
            let x = rng.random_range(0.0..a);
            let y = rng.random_range(0.0..a);
            Point3::new(x, y, cfg.terminal_height_m)
        })
        .collect();

    Deployment { bs, sites, users }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = ScenarioConfig::default().validated().unwrap();
        assert_eq!(cfg.area_side_m, 400.0);
        assert_eq!(cfg.num_users, 8);
        assert_eq!(cfg.num_sites, 64);
        assert_eq!(cfg.carrier_freq_ghz, 3.6);
        assert_eq!(cfg.bandwidth_hz, 20e6);
        assert_eq!(cfg.temperature_k, 290.0);
        assert_eq!(cfg.bs_nf_db, 5.0);
        assert_eq!(cfg.rep_nf_db, 5.0);
        assert_eq!(cfg.k_factor_db, 10.0);
        assert_eq!(cfg.gain_cap_db, 45.0);
        assert_eq!(cfg.tau_db, 40.0);
        assert_eq!(cfg.num_drops, 1000);
    }

    #[test]
    fn empty_toml_yields_defaults() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        let def = ScenarioConfig::default();
        assert_eq!(cfg.area_side_m, def.area_side_m);
        assert_eq!(cfg.num_sites, def.num_sites);
        assert_eq!(cfg.user_tx_power_dbm, def.user_tx_power_dbm);
    }

    #[test]
    fn manifest_style_toml_is_accepted() {
        let text = "[run]\nseed = 9\n[config]\nseed = 9\nnum_drops = 5\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.num_drops, 5);
    }

    #[test]
    fn perfect_square_site_count_is_enforced() {
        let cfg = ScenarioConfig {
            num_sites: 60,
            ..Default::default()
        };
        let err = cfg.validated().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("num_sites"), "{msg}");
        assert!(msg.contains("not a perfect square"), "{msg}");

        let ok = ScenarioConfig {
            num_sites: 64,
            ..Default::default()
        };
        assert!(ok.validated().is_ok());
    }

    #[test]
    fn rejects_nonpositive_dimensions_and_nan() {
        let bad_area = ScenarioConfig {
            area_side_m: 0.0,
            ..Default::default()
        };
        assert!(bad_area.validated().is_err());

        let nan_tau = ScenarioConfig {
            tau_db: f64::NAN,
            ..Default::default()
        };
        assert!(nan_tau.validated().is_err());

        let inf_tau = ScenarioConfig {
            tau_db: f64::INFINITY,
            ..Default::default()
        };
        assert!(inf_tau.validated().is_ok());

        let no_users = ScenarioConfig {
            num_users: 0,
            ..Default::default()
        };
        assert!(no_users.validated().is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml_str("not_a_field = 3\n").is_err());
    }

    #[test]
    fn mesh_geometry_matches_reference() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dep = build_deployment(&cfg, &mut rng);
        assert_eq!(dep.bs, Point3::new(200.0, 200.0, 10.0));
        assert_eq!(dep.sites.len(), 64);
        // first mesh site, pitch 50 with half-pitch margin, 10 m above terminals
        assert_eq!(dep.sites[0], Point3::new(25.0, 25.0, 11.5));
        assert_eq!(dep.sites[63], Point3::new(375.0, 375.0, 11.5));

        // pitch exactly area/sqrt(sites) between nearest neighbours
        let mut min_dist = f64::INFINITY;
        for i in 0..dep.sites.len() {
            for j in (i + 1)..dep.sites.len() {
                min_dist = min_dist.min(dep.sites[i].distance_3d(&dep.sites[j]));
            }
        }
        assert_eq!(min_dist, 50.0);
    }

    #[test]
    fn users_are_inside_square_and_deterministic() {
        let cfg = ScenarioConfig::default();
        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        let dep_a = build_deployment(&cfg, &mut rng_a);
        let dep_b = build_deployment(&cfg, &mut rng_b);
        assert_eq!(dep_a.users, dep_b.users);
        let half_diag = cfg.area_side_m * std::f64::consts::SQRT_2 / 2.0;
        for u in &dep_a.users {
            assert!(u.x >= 0.0 && u.x < cfg.area_side_m);
            assert!(u.y >= 0.0 && u.y < cfg.area_side_m);
            assert_eq!(u.z, cfg.terminal_height_m);
            assert!(u.distance_2d(&dep_a.bs) <= half_diag);
        }
    }

    proptest! {
        #[test]
        fn mesh_pitch_invariance(side in 2usize..12, area in 50.0f64..2000.0) {
            let cfg = ScenarioConfig {
                num_sites: side * side,
                area_side_m: area,
                ..Default::default()
            }.validated().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let dep = build_deployment(&cfg, &mut rng);
            let pitch = area / side as f64;
            let mut min_dist = f64::INFINITY;
            for i in 0..dep.sites.len() {
                for j in (i + 1)..dep.sites.len() {
                    let d = dep.sites[i].distance_3d(&dep.sites[j]);
                    prop_assert!(d > 0.0, "sites must be pairwise distinct");
                    min_dist = min_dist.min(d);
                }
            }
            prop_assert!((min_dist - pitch).abs() <= 1e-9 * pitch);
        }

        #[test]
        fn db_conversions_roundtrip(db in -200.0f64..200.0) {
            let lin = db_to_linear(db);
            prop_assert!((linear_to_db(lin) - db).abs() < 1e-9);
        }
    }
}
