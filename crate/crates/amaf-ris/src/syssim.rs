//! Monte-Carlo system simulator: drops users in a sector in front of the
//! surface, forms the feed -> surface -> user link for a chosen
//! transmission matrix, applies beam-pointing errors and phase
//! quantization, and aggregates per-drop Shannon rates into a CDF.
//!
//! Every drop derives its own RNG stream from (seed, drop index), so runs
//! are reproducible and per-drop comparisons across scenario variants stay
//! paired: changing the pointing error or quantization setting never
//! shifts another drop's draws.

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::io::BufRead;

use crate::channel::{build_t_friis, ChannelMatrix, ElementPattern, Provenance};
use crate::config::{RunConfig, ScenarioConfig, TSourceFormat, TSourceKind};
use crate::error::{Error, Result};
use crate::farfield::{conjugate_steering_phases, direction_unit, quantize_phases};
use crate::geometry::ArrayLayout;
use crate::ingest::{extract_t, parse_tblock_csv, parse_touchstone};
use crate::pem::{apply_passivity_ceiling, principal_triplet, ris_excitation, power_taper_db,
                 ExcitationVector, PemOptions};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Thermal noise floor at 290 K, dBm per Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Transmit-power increase needed to hold the link budget when moving the
/// carrier from `f_ref_ghz` to `f_new_ghz`: `20 log10(f_new / f_ref)`.
pub fn frequency_compensation_db(f_new_ghz: f64, f_ref_ghz: f64) -> Result<f64> {
    if !(f_new_ghz > 0.0) || !(f_ref_ghz > 0.0) {
        return Err(Error::Validation(format!(
            "frequencies must be positive, got {f_new_ghz} and {f_ref_ghz}"
        )));
    }
    Ok(20.0 * (f_new_ghz / f_ref_ghz).log10())
}

/// One user drop in the surface's boresight frame.
#[derive(Debug, Clone, Copy)]
pub struct UserPosition {
    pub az_rad: f64,
    pub el_rad: f64,
    pub dist_m: f64,
}

/// Link-budget constants of a scenario.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub compensation_db: f64,
    pub carrier_ghz: f64,
}

impl LinkBudget {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let s = &cfg.scenario;
        let compensation_db = match s.compensation_ref_ghz {
            Some(f_ref) => frequency_compensation_db(cfg.geometry.carrier_ghz, f_ref)?,
            None => 0.0,
        };
        Ok(LinkBudget {
            tx_power_dbm: s.tx_power_dbm,
            bandwidth_hz: s.bandwidth_hz,
            noise_figure_db: s.noise_figure_db,
            compensation_db,
            carrier_ghz: cfg.geometry.carrier_ghz,
        })
    }

    /// Thermal floor plus bandwidth plus receiver noise figure.
    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    pub fn half_wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / (2.0 * self.carrier_ghz * 1e9)
    }
}

fn uniform_in(rng: &mut ChaCha12Rng, min: f64, max: f64) -> f64 {
    if max > min {
        rng.gen_range(min..max)
    } else {
        min
    }
}

fn drop_rng(seed: u64, drop_idx: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(drop_idx);
    rng
}

/// Position and pointing-error draws of one drop. Draw order is fixed:
/// azimuth, elevation, distance, then the two pointing normals (always
/// consumed, scaled by sigma), so variants stay paired per drop.
fn draw_drop(s: &ScenarioConfig, drop_idx: u64) -> (UserPosition, f64, f64) {
    let mut rng = drop_rng(s.seed, drop_idx);
    let az = uniform_in(&mut rng, s.az_min_deg, s.az_max_deg).to_radians();
    let el = uniform_in(&mut rng, s.el_min_deg, s.el_max_deg).to_radians();
    let dist = uniform_in(&mut rng, s.dist_min_m, s.dist_max_m);
    let n1: f64 = rng.sample(rand_distr::StandardNormal);
    let n2: f64 = rng.sample(rand_distr::StandardNormal);
    let sigma = s.pointing_sigma_deg.to_radians();
    (
        UserPosition {
            az_rad: az,
            el_rad: el,
            dist_m: dist,
        },
        sigma * n1,
        sigma * n2,
    )
}

/// Seeded, reproducible user draws: uniform in the configured azimuth and
/// elevation sector and distance interval.
pub fn draw_users(s: &ScenarioConfig) -> Result<Vec<UserPosition>> {
    if s.az_max_deg < s.az_min_deg || s.el_max_deg < s.el_min_deg || s.dist_max_m < s.dist_min_m {
        return Err(Error::Validation("empty drop region".into()));
    }
    Ok((0..s.n_drops)
        .map(|i| draw_drop(s, i as u64).0)
        .collect())
}

/// Smallest far-field distance of the surface aperture, `2 D^2 / lambda`
/// with D the aperture diagonal.
pub fn far_field_min_distance_m(layout: &ArrayLayout, half_wavelength_m: f64) -> f64 {
    let dx = layout.n_x() as f64 * layout.spacing();
    let dy = layout.n_y() as f64 * layout.spacing();
    let d_m = dx.hypot(dy) * half_wavelength_m;
    2.0 * d_m * d_m / (2.0 * half_wavelength_m)
}

/// End-to-end rate for one user: surface phases conjugate the excitation
/// and steer toward the (possibly mispointed) user direction; the
/// surface-to-user hop uses exact per-element spherical distances with the
/// surface element pattern; the receiver is an isotropic unit-gain
/// antenna.
fn rate_for_excitation(
    excitation: &ExcitationVector,
    pattern: &ElementPattern,
    user: UserPosition,
    link: &LinkBudget,
    pointing_offset: (f64, f64),
    bits: Option<u32>,
) -> Result<f64> {
    let layout = excitation.layout();
    let u_dir = direction_unit(user.az_rad, user.el_rad);
    if u_dir.z <= 0.0 {
        return Err(Error::Validation(format!(
            "user at az {:.1} deg, el {:.1} deg is behind the surface plane",
            user.az_rad.to_degrees(),
            user.el_rad.to_degrees()
        )));
    }
    if !(user.dist_m > 0.0) {
        return Err(Error::Validation("user distance must be positive".into()));
    }

    let steer_az = user.az_rad + pointing_offset.0;
    let steer_el = user.el_rad + pointing_offset.1;
    let mut cfg = conjugate_steering_phases(layout, steer_az, steer_el, excitation)?;
    if let Some(b) = bits {
        cfg = quantize_phases(&cfg, b)?;
    }

    let hw = link.half_wavelength_m();
    let dist_hw = user.dist_m / hw;
    let ux = u_dir.x * dist_hw;
    let uy = u_dir.y * dist_hw;
    let uz = u_dir.z * dist_hw;

    let mut s = Complex64::new(0.0, 0.0);
    for (idx, p) in layout.positions().iter().enumerate() {
        let e = excitation.values()[idx];
        let mag = e.norm();
        if mag == 0.0 {
            continue;
        }
        let dx = ux - p.x;
        let dy = uy - p.y;
        let dz = uz - p.z;
        let r = (dx * dx + dy * dy + dz * dz).sqrt();
        if dz <= 0.0 {
            continue; // element cannot radiate backward
        }
        let h = dx.hypot(dz);
        let cos_az = dz / h;
        let cos_el = h / r;
        let g = pattern.gain_from_cosines(cos_az, cos_el).sqrt() / (2.0 * PI * r);
        let phase = e.arg() + cfg.phases()[idx] - PI * r;
        s += Complex64::from_polar(mag * g, phase);
    }

    let gain = s.norm_sqr();
    if gain <= 0.0 {
        return Ok(0.0);
    }
    let p_rx_dbm = link.tx_power_dbm + link.compensation_db + 10.0 * gain.log10();
    let snr_db = p_rx_dbm - link.noise_power_dbm();
    let snr = 10f64.powf(snr_db / 10.0);
    if !snr.is_finite() {
        return Err(Error::Validation(format!("non-finite SNR ({snr_db} dB)")));
    }
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

/// Spec-level entry point taking the matrix and unit-power feed weights
/// directly.
#[allow(clippy::too_many_arguments)]
pub fn end_to_end_rate(
    t: &ChannelMatrix,
    w: &Array1<Complex64>,
    ris_layout: &ArrayLayout,
    pattern: &ElementPattern,
    user: UserPosition,
    link: &LinkBudget,
    pointing_offset: (f64, f64),
    bits: Option<u32>,
) -> Result<f64> {
    let w_norm: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (w_norm - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "feed weights must carry unit power, got ||w|| = {w_norm}"
        )));
    }
    let excitation = ris_excitation(t, w, ris_layout)?;
    rate_for_excitation(&excitation, pattern, user, link, pointing_offset, bits)
}

/// Empirical rate distribution over the Monte-Carlo drops.
#[derive(Debug, Clone)]
pub struct RateCdf {
    rates: Vec<f64>,
    probabilities: Vec<f64>,
    fingerprint: Option<String>,
}

impl RateCdf {
    pub fn from_rates(mut rates: Vec<f64>, fingerprint: Option<String>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Validation("rate CDF needs at least one sample".into()));
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Validation(
                "rates must be finite and non-negative".into(),
            ));
        }
        rates.sort_unstable_by(f64::total_cmp);
        let n = rates.len() as f64;
        let probabilities = (1..=rates.len()).map(|i| i as f64 / n).collect();
        Ok(RateCdf {
            rates,
            probabilities,
            fingerprint,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn fingerprint(&self) -> Option<&str> {
        self.fingerprint.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Nearest-rank percentile, `pct` in (0, 100].
    pub fn percentile(&self, pct: f64) -> f64 {
        let n = self.rates.len();
        let rank = ((pct / 100.0) * n as f64).ceil() as usize;
        self.rates[rank.clamp(1, n) - 1]
    }

    /// `rate,probability` rows; byte-deterministic for a given CDF.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rate,probability")?;
        for (r, p) in self.rates.iter().zip(self.probabilities.iter()) {
            writeln!(out, "{r},{p}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim_end_matches('\r').trim() == "rate,probability" => {}
            Some((_, Ok(h))) => {
                return Err(Error::parse(
                    1,
                    format!("expected header 'rate,probability', got '{}'", h.trim()),
                ))
            }
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(Error::parse(1, "empty CDF file")),
        }
        let mut rates = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let content = line.trim_end_matches('\r').trim();
            if content.is_empty() {
                continue;
            }
            let (r, _p) = content.split_once(',').ok_or_else(|| {
                Error::parse(idx + 1, "expected 'rate,probability' row")
            })?;
            let rate: f64 = r
                .trim()
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("invalid rate '{r}'")))?;
            rates.push(rate);
        }
        Self::from_rates(rates, None)
    }
}

/// Loads the transmission matrix named by the config: either built from
/// the analytic model or ingested from a solver export.
pub fn load_channel_matrix(cfg: &RunConfig) -> Result<ChannelMatrix> {
    let sys = cfg.system_geometry()?;
    let t = match cfg.tsource.kind {
        TSourceKind::Friis => build_t_friis(&sys, &cfg.element_pattern()?)?,
        TSourceKind::Fullwave => {
            let path = std::path::Path::new(&cfg.tsource.path);
            let file = std::fs::File::open(path).map_err(|e| {
                Error::Config(format!("cannot open tsource '{}': {e}", path.display()))
            })?;
            let reader = std::io::BufReader::new(file);
            let ds = match resolve_format(cfg)? {
                TSourceFormat::Touchstone => {
                    parse_touchstone(reader, cfg.touchstone_port_map()?)?
                }
                TSourceFormat::Tblock => parse_tblock_csv(reader)?,
                TSourceFormat::Auto => unreachable!("resolve_format never returns Auto"),
            };
            extract_t(&ds, cfg.extraction_freq_ghz())?
        }
    };
    let n_ris = cfg.geometry.ris_n_x * cfg.geometry.ris_n_y;
    let n_amaf = cfg.geometry.amaf_n_x * cfg.geometry.amaf_n_y;
    if t.n_ris() != n_ris || t.n_amaf() != n_amaf {
        return Err(Error::Validation(format!(
            "transmission matrix is {}x{} but geometry declares {}x{}",
            t.n_ris(),
            t.n_amaf(),
            n_ris,
            n_amaf
        )));
    }
    Ok(t)
}

/// Resolves `auto` format by file extension: `.sNp` Touchstone, `.csv`
/// block CSV.
pub fn resolve_format(cfg: &RunConfig) -> Result<TSourceFormat> {
    match cfg.tsource.format {
        TSourceFormat::Auto => {
            let ext = std::path::Path::new(&cfg.tsource.path)
                .extension()
                .and_then(|e| e.to_str())
                .unwrap_or("")
                .to_ascii_lowercase();
            if ext == "csv" {
                Ok(TSourceFormat::Tblock)
            } else if ext.len() >= 3
                && ext.starts_with('s')
                && ext.ends_with('p')
                && ext[1..ext.len() - 1].chars().all(|c| c.is_ascii_digit())
            {
                Ok(TSourceFormat::Touchstone)
            } else {
                Err(Error::Config(format!(
                    "cannot infer tsource format from extension '.{ext}'; set tsource.format"
                )))
            }
        }
        other => Ok(other),
    }
}

/// Everything a simulation run produces besides the raw CDF file.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub cdf: RateCdf,
    /// Per-drop rates in drop order (unsorted), for paired comparisons.
    pub drop_rates: Vec<f64>,
    /// Principal singular value of the loaded matrix before any ceiling.
    pub sigma1: f64,
    /// Rescale applied by the passivity ceiling (1 when off or passive).
    pub applied_scale: f64,
    pub taper_db: f64,
    pub noise_power_dbm: f64,
    pub compensation_db: f64,
    pub provenance: Provenance,
    pub far_field_min_m: f64,
    pub fingerprint: String,
    pub warnings: Vec<String>,
}

pub fn config_fingerprint(cfg: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.to_toml().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the full Monte-Carlo scenario described by the config.
pub fn simulate_rate_cdf(cfg: &RunConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let sys = cfg.system_geometry()?;
    let pattern = cfg.element_pattern()?;
    let link = LinkBudget::from_config(cfg)?;
    let s = &cfg.scenario;

    let t_raw = load_channel_matrix(cfg)?;
    let triplet = principal_triplet(&t_raw, PemOptions::default())?;
    let (t_used, applied_scale) = if s.sigma_ceiling {
        apply_passivity_ceiling(&t_raw)?
    } else {
        (t_raw.clone(), 1.0)
    };
    let excitation = ris_excitation(&t_used, &triplet.w1, sys.ris())?;
    let taper_db = power_taper_db(&excitation)?;

    let mut warnings = Vec::new();
    let far_field_min_m = far_field_min_distance_m(sys.ris(), link.half_wavelength_m());
    if s.dist_min_m < far_field_min_m {
        warnings.push(format!(
            "drop region starts at {} m, inside the far-field bound {:.3} m",
            s.dist_min_m, far_field_min_m
        ));
    }

    let mut drop_rates = Vec::with_capacity(s.n_drops);
    for i in 0..s.n_drops {
        let (user, daz, del) = draw_drop(s, i as u64);
        let rate = rate_for_excitation(
            &excitation,
            &pattern,
            user,
            &link,
            (daz, del),
            s.phase_bits,
        )?;
        drop_rates.push(rate);
    }

    let fingerprint = config_fingerprint(cfg);
    let cdf = RateCdf::from_rates(drop_rates.clone(), Some(fingerprint.clone()))?;
    Ok(SimulationOutput {
        cdf,
        drop_rates,
        sigma1: triplet.sigma1,
        applied_scale,
        taper_db,
        noise_power_dbm: link.noise_power_dbm(),
        compensation_db: link.compensation_db,
        provenance: t_used.provenance(),
        far_field_min_m,
        fingerprint,
        warnings,
    })
}

/// One percentile row of a CDF comparison.
#[derive(Debug, Clone, Serialize)]
pub struct PercentileDelta {
    pub percentile: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// `rate_b - rate_a`.
    pub delta: f64,
}

/// Machine-readable comparison of two rate CDFs.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n_a: usize,
    pub n_b: usize,
    pub percentile_deltas: Vec<PercentileDelta>,
    /// Two-sample Kolmogorov-Smirnov distance.
    pub ks_distance: f64,
    /// Overall rate span across both CDFs.
    pub rate_span: f64,
    pub max_abs_percentile_delta: f64,
    /// True when the largest percentile gap stays within 5% of the span.
    pub close_match: bool,
}

/// Percentile deltas (1, 10, 50, 90), KS distance, and a span-relative
/// verdict for two rate CDFs.
pub fn compare_runs(a: &RateCdf, b: &RateCdf) -> ComparisonReport {
    let percentiles = [1.0, 10.0, 50.0, 90.0];
    let percentile_deltas: Vec<PercentileDelta> = percentiles
        .iter()
        .map(|&p| {
            let ra = a.percentile(p);
            let rb = b.percentile(p);
            PercentileDelta {
                percentile: p,
                rate_a: ra,
                rate_b: rb,
                delta: rb - ra,
            }
        })
        .collect();

    // two-sample KS over the merged support
    let (xa, xb) = (a.rates(), b.rates());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut ks = 0.0f64;
    while ia < xa.len() || ib < xb.len() {
        let x = match (xa.get(ia), xb.get(ib)) {
            (Some(&va), Some(&vb)) => va.min(vb),
            (Some(&va), None) => va,
            (None, Some(&vb)) => vb,
            (None, None) => break,
        };
        while ia < xa.len() && xa[ia] <= x {
            ia += 1;
        }
        while ib < xb.len() && xb[ib] <= x {
            ib += 1;
        }
        let fa = ia as f64 / xa.len() as f64;
        let fb = ib as f64 / xb.len() as f64;
        ks = ks.max((fa - fb).abs());
    }

    let lo = xa[0].min(xb[0]);
    let hi = xa[xa.len() - 1].max(xb[xb.len() - 1]);
    let rate_span = hi - lo;
    let max_abs = percentile_deltas
        .iter()
        .map(|d| d.delta.abs())
        .fold(0.0, f64::max);
    let close_match = rate_span > 0.0 && max_abs <= 0.05 * rate_span;

    ComparisonReport {
        n_a: xa.len(),
        n_b: xb.len(),
        percentile_deltas,
        ks_distance: ks,
        rate_span,
        max_abs_percentile_delta: max_abs,
        close_match,
    }
}
