//! Run configuration: one TOML file with `[geometry]`, `[pattern]`,
//! `[scenario]` and `[tsource]` sections. Every key has a default, so an
//! empty file is a valid baseline profile; the shipped
//! `profiles/default-150ghz.toml` spells the defaults out.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::channel::ElementPattern;
use crate::error::{Error, Result};
use crate::geometry::{build_ura, place_feed, SystemGeometry};
use crate::ingest::{PortMap, PortRole};

pub const PROFILE_VERSION: u32 = 1;

fn default_profile_version() -> u32 {
    PROFILE_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_profile_version")]
    pub profile_version: u32,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub pattern: PatternConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub tsource: TSourceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub ris_n_x: usize,
    pub ris_n_y: usize,
    pub ris_spacing: f64,
    pub amaf_n_x: usize,
    pub amaf_n_y: usize,
    pub amaf_spacing: f64,
    /// Feed-to-surface separation in half-wavelength units.
    pub focal_distance: f64,
    pub carrier_ghz: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            ris_n_x: 16,
            ris_n_y: 16,
            ris_spacing: 1.0,
            amaf_n_x: 2,
            amaf_n_y: 2,
            amaf_spacing: 1.0,
            focal_distance: 8.0,
            carrier_ghz: 150.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternConfig {
    /// Linear peak power gain of the element pattern.
    pub peak_gain: f64,
    /// Per-axis cosine exponent of the power pattern.
    pub exponent: f64,
    /// Far-field sampling step in degrees.
    pub grid_step_deg: f64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            peak_gain: ElementPattern::PATCH_PEAK_GAIN,
            exponent: 2.0,
            grid_step_deg: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub dist_min_m: f64,
    pub dist_max_m: f64,
    pub az_min_deg: f64,
    pub az_max_deg: f64,
    pub el_min_deg: f64,
    pub el_max_deg: f64,
    pub n_drops: usize,
    /// Gaussian beam-pointing error std per angle, degrees (0 = perfect).
    pub pointing_sigma_deg: f64,
    /// Phase-shifter resolution; absent = continuous phases.
    pub phase_bits: Option<u32>,
    pub seed: u64,
    /// When set, transmit power is raised by `20 log10(carrier / this)`
    /// to compensate path loss relative to the reference carrier.
    pub compensation_ref_ghz: Option<f64>,
    /// Rescale the transmission matrix to unit principal singular value
    /// before simulating.
    pub sigma_ceiling: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            bandwidth_hz: 1e9,
            tx_power_dbm: 30.0,
            noise_figure_db: 7.0,
            dist_min_m: 10.0,
            dist_max_m: 100.0,
            az_min_deg: -60.0,
            az_max_deg: 60.0,
            el_min_deg: -30.0,
            el_max_deg: 30.0,
            n_drops: 1000,
            pointing_sigma_deg: 0.0,
            phase_bits: None,
            seed: 7,
            compensation_ref_ghz: Some(100.0),
            sigma_ceiling: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TSourceKind {
    Friis,
    Fullwave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TSourceFormat {
    /// Pick by file extension: `.sNp` is Touchstone, `.csv` is block CSV.
    Auto,
    Touchstone,
    Tblock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TSourceConfig {
    pub kind: TSourceKind,
    /// Solver export to ingest when `kind = "fullwave"`.
    pub path: String,
    pub format: TSourceFormat,
    /// Extraction frequency; defaults to the carrier.
    pub freq_ghz: Option<f64>,
    /// Role of each solver port in file order, e.g. `["amaf:1", "ris:1", ...]`
    /// (1-based). Empty means canonical order: all surface ports first.
    pub port_roles: Vec<String>,
}

impl Default for TSourceConfig {
    fn default() -> Self {
        TSourceConfig {
            kind: TSourceKind::Friis,
            path: String::new(),
            format: TSourceFormat::Auto,
            freq_ghz: None,
            port_roles: Vec::new(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile_version: PROFILE_VERSION,
            geometry: GeometryConfig::default(),
            pattern: PatternConfig::default(),
            scenario: ScenarioConfig::default(),
            tsource: TSourceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.profile_version != PROFILE_VERSION {
            return Err(Error::Config(format!(
                "unsupported profile_version {} (this build reads {PROFILE_VERSION})",
                self.profile_version
            )));
        }
        let g = &self.geometry;
        if g.ris_n_x == 0 || g.ris_n_y == 0 || g.amaf_n_x == 0 || g.amaf_n_y == 0 {
            return Err(Error::Config("array dimensions must be at least 1".into()));
        }
        if !(g.ris_spacing > 0.0) || !(g.amaf_spacing > 0.0) {
            return Err(Error::Config("element spacing must be positive".into()));
        }
        if !(g.focal_distance > 0.0) {
            return Err(Error::Config("focal_distance must be positive".into()));
        }
        if !(g.carrier_ghz > 0.0) {
            return Err(Error::Config("carrier_ghz must be positive".into()));
        }
        let p = &self.pattern;
        if !(p.peak_gain > 0.0) || !p.peak_gain.is_finite() {
            return Err(Error::Config("pattern peak_gain must be positive".into()));
        }
        if !(p.exponent >= 0.0) {
            return Err(Error::Config("pattern exponent must be non-negative".into()));
        }
        if !(p.grid_step_deg > 0.0 && p.grid_step_deg <= 45.0) {
            return Err(Error::Config("grid_step_deg must be in (0, 45]".into()));
        }
        let s = &self.scenario;
        if !(s.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth_hz must be positive".into()));
        }
        if s.tx_power_dbm.is_nan() || !s.noise_figure_db.is_finite() {
            return Err(Error::Config("powers and noise figure must be numbers".into()));
        }
        if s.n_drops == 0 {
            return Err(Error::Config("n_drops must be at least 1".into()));
        }
        if !(s.dist_min_m > 0.0) || s.dist_max_m < s.dist_min_m {
            return Err(Error::Config(
                "drop distances must satisfy 0 < dist_min_m <= dist_max_m".into(),
            ));
        }
        if s.az_max_deg < s.az_min_deg || s.el_max_deg < s.el_min_deg {
            return Err(Error::Config("drop angle ranges must be non-empty".into()));
        }
        if s.az_min_deg <= -90.0 || s.az_max_deg >= 90.0 || s.el_min_deg <= -90.0 || s.el_max_deg >= 90.0
        {
            return Err(Error::Config(
                "drop angles must stay strictly inside the front hemisphere (-90, 90)".into(),
            ));
        }
        if !(s.pointing_sigma_deg >= 0.0) {
            return Err(Error::Config("pointing_sigma_deg must be >= 0".into()));
        }
        if s.phase_bits == Some(0) {
            return Err(Error::Config(
                "phase_bits must be >= 1; omit the key for continuous phases".into(),
            ));
        }
        if let Some(f) = s.compensation_ref_ghz {
            if !(f > 0.0) {
                return Err(Error::Config("compensation_ref_ghz must be positive".into()));
            }
        }
        if self.tsource.kind == TSourceKind::Fullwave && self.tsource.path.is_empty() {
            return Err(Error::Config(
                "tsource.path is required when tsource.kind = \"fullwave\"".into(),
            ));
        }
        if let Some(f) = self.tsource.freq_ghz {
            if !(f > 0.0) {
                return Err(Error::Config("tsource.freq_ghz must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn system_geometry(&self) -> Result<SystemGeometry> {
        let g = &self.geometry;
        place_feed(
            build_ura(g.ris_n_x, g.ris_n_y, g.ris_spacing)?,
            build_ura(g.amaf_n_x, g.amaf_n_y, g.amaf_spacing)?,
            g.focal_distance,
        )
    }

    pub fn element_pattern(&self) -> Result<ElementPattern> {
        ElementPattern::new(self.pattern.peak_gain, self.pattern.exponent)
    }

    /// Extraction frequency for ingested data: explicit value or carrier.
    pub fn extraction_freq_ghz(&self) -> f64 {
        self.tsource.freq_ghz.unwrap_or(self.geometry.carrier_ghz)
    }

    /// Port map for Touchstone ingestion: the configured role list, or
    /// canonical order when none is given.
    pub fn touchstone_port_map(&self) -> Result<PortMap> {
        let g = &self.geometry;
        let n_ris = g.ris_n_x * g.ris_n_y;
        let n_amaf = g.amaf_n_x * g.amaf_n_y;
        if self.tsource.port_roles.is_empty() {
            return PortMap::canonical(n_ris, n_amaf);
        }
        let roles: Result<Vec<PortRole>> = self
            .tsource
            .port_roles
            .iter()
            .map(|s| parse_port_role(s))
            .collect();
        let pm = PortMap::from_roles(roles?)?;
        if pm.n_ris() != n_ris || pm.n_amaf() != n_amaf {
            return Err(Error::Config(format!(
                "port_roles covers {}x{} elements but geometry declares {}x{}",
                pm.n_ris(),
                pm.n_amaf(),
                n_ris,
                n_amaf
            )));
        }
        Ok(pm)
    }
}

fn parse_port_role(s: &str) -> Result<PortRole> {
    let (kind, idx) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("port role '{s}' must look like 'ris:12'")))?;
    let idx: usize = idx
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid port role index in '{s}'")))?;
    if idx == 0 {
        return Err(Error::Config(format!(
            "port role indices are 1-based, got '{s}'"
        )));
    }
    match kind.trim().to_ascii_lowercase().as_str() {
        "ris" => Ok(PortRole::Ris(idx - 1)),
        "amaf" => Ok(PortRole::Amaf(idx - 1)),
        _ => Err(Error::Config(format!(
            "port role '{s}' must start with 'ris:' or 'amaf:'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default_profile() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.geometry.ris_n_x, 16);
        assert_eq!(cfg.geometry.carrier_ghz, 150.0);
        assert_eq!(cfg.pattern.peak_gain, 5.8);
        assert!(cfg.scenario.sigma_ceiling);
        assert_eq!(cfg.tsource.kind, TSourceKind::Friis);
    }

    #[test]
    fn default_geometry_has_half_f_over_d() {
        let cfg = RunConfig::default();
        let sys = cfg.system_geometry().unwrap();
        assert_eq!(sys.f_over_d(), 0.5);
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let cfg2 = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg2.scenario.n_drops, cfg.scenario.n_drops);
        assert_eq!(cfg2.scenario.compensation_ref_ghz, Some(100.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[geometry]\nris_count = 3\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[scenario]\nn_drops = 0\n").is_err());
        assert!(RunConfig::from_toml("[scenario]\nphase_bits = 0\n").is_err());
        assert!(RunConfig::from_toml("[geometry]\nfocal_distance = -1.0\n").is_err());
        assert!(RunConfig::from_toml("[tsource]\nkind = \"fullwave\"\n").is_err());
    }

    #[test]
    fn port_roles_parse_and_validate() {
        let mut cfg = RunConfig::default();
        cfg.geometry.ris_n_x = 1;
        cfg.geometry.ris_n_y = 1;
        cfg.geometry.amaf_n_x = 2;
        cfg.geometry.amaf_n_y = 1;
        cfg.tsource.port_roles = vec!["amaf:2".into(), "ris:1".into(), "amaf:1".into()];
        let pm = cfg.touchstone_port_map().unwrap();
        assert_eq!(pm.ris_port(0), 1);
        assert_eq!(pm.amaf_port(1), 0);

        cfg.tsource.port_roles = vec!["ris:1".into()];
        assert!(cfg.touchstone_port_map().is_err());
    }
}
