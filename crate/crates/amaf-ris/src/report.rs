//! Serializable report bodies written by the CLI commands.

use serde::Serialize;

use crate::farfield::PatternMetrics;
use crate::ingest::CouplingReport;

/// Summary written by `build-friis` and `pem`.
#[derive(Debug, Clone, Serialize)]
pub struct FeedSummary {
    pub provenance: String,
    pub n_ris: usize,
    pub n_amaf: usize,
    pub sigma1: f64,
    /// Rescale applied by the passivity ceiling; 1 when off or passive.
    pub applied_scale: f64,
    pub sigma1_after_ceiling: f64,
    /// None marks an unbounded taper (some element is exactly zero).
    pub taper_db: Option<f64>,
    pub pem_iterations: usize,
    pub pem_residual: f64,
}

pub fn taper_field(taper_db: f64) -> Option<f64> {
    taper_db.is_finite().then_some(taper_db)
}

/// Pattern block shared by `pattern` and `simulate` reports.
#[derive(Debug, Clone, Serialize)]
pub struct PatternReport {
    pub peak_dbi: f64,
    pub peak_az_deg: f64,
    pub peak_el_deg: f64,
    /// Peak sidelobe relative to the main beam, dB (<= 0); None when the
    /// pattern has no sidelobes.
    pub sll_db: Option<f64>,
    pub sidelobe_peak_dbi: Option<f64>,
    pub hpbw_az_deg: f64,
    pub hpbw_el_deg: f64,
    pub grid_step_deg: f64,
    pub phase_bits: Option<u32>,
    /// Solid-angle integral of the linear gain over 4 pi.
    pub radiated_fraction: f64,
}

impl PatternReport {
    pub fn new(m: &PatternMetrics, step_deg: f64, bits: Option<u32>, radiated_fraction: f64) -> Self {
        PatternReport {
            peak_dbi: m.peak_dbi,
            peak_az_deg: m.peak_az_deg,
            peak_el_deg: m.peak_el_deg,
            sll_db: m.sll_db,
            sidelobe_peak_dbi: m.sidelobe_peak_dbi,
            hpbw_az_deg: m.hpbw_az_deg,
            hpbw_el_deg: m.hpbw_el_deg,
            grid_step_deg: step_deg,
            phase_bits: bits,
            radiated_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingSummary {
    pub n_pairs: usize,
    pub adjacent_min_db: f64,
    pub adjacent_max_db: f64,
    pub diagonal_min_db: f64,
    pub diagonal_max_db: f64,
    pub max_asymmetry_db: f64,
    pub warnings: Vec<String>,
}

impl CouplingSummary {
    pub fn new(rep: &CouplingReport) -> Self {
        CouplingSummary {
            n_pairs: rep.pairs.len(),
            adjacent_min_db: rep.adjacent_range_db.0,
            adjacent_max_db: rep.adjacent_range_db.1,
            diagonal_min_db: rep.diagonal_range_db.0,
            diagonal_max_db: rep.diagonal_range_db.1,
            max_asymmetry_db: rep.max_asymmetry_db,
            warnings: rep.warnings.clone(),
        }
    }
}

/// Summary written by `import`.
#[derive(Debug, Clone, Serialize)]
pub struct ImportSummary {
    pub source: String,
    pub format: String,
    pub n_ports: usize,
    pub n_ris: usize,
    pub n_amaf: usize,
    pub frequencies_ghz: Vec<f64>,
    pub t_block_frequencies: usize,
    pub amaf_block_frequencies: usize,
    pub coupling: Option<CouplingSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePercentiles {
    pub p1: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// `report.json` body written by `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub config_fingerprint: String,
    pub tsource: String,
    pub carrier_ghz: f64,
    pub sigma1: f64,
    pub applied_scale: f64,
    pub taper_db: Option<f64>,
    pub pattern: PatternReport,
    pub noise_power_dbm: f64,
    pub compensation_db: f64,
    pub far_field_min_m: f64,
    pub n_drops: usize,
    pub rate_percentiles: RatePercentiles,
    pub mean_rate: f64,
    pub warnings: Vec<String>,
}
