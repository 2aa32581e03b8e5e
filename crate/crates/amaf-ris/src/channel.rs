//! Transmission-matrix construction from the spherical-spreading link model.
//!
//! Each feed-element-to-surface-element coefficient combines both element
//! power patterns and the free-space spreading term for the pair distance
//! (in half-wavelength units):
//!
//! ```text
//! t = sqrt(G_a(az_a, el_a) * G_r(az_r, el_r)) / (2 pi r) * exp(-j pi r)
//! ```
//!
//! The coefficient is a field (amplitude) quantity; |t|^2 is the power
//! transfer between matched ports.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{pair_geometry, PairGeometry, SystemGeometry};

/// Reference D-band patch element, kept for documentation and run reports.
pub mod patch_design {
    /// Design center frequency, GHz.
    pub const CENTER_FREQUENCY_GHZ: f64 = 150.0;
    /// Patch width, micrometres.
    pub const PATCH_WIDTH_UM: f64 = 514.0;
    /// Patch height, micrometres.
    pub const PATCH_HEIGHT_UM: f64 = 527.0;
    /// Substrate thickness, micrometres.
    pub const SUBSTRATE_THICKNESS_UM: f64 = 64.0;
    /// Substrate relative dielectric constant.
    pub const SUBSTRATE_EPSILON_R: f64 = 3.0;
    /// Feed-port offset from the patch center, micrometres.
    pub const PORT_OFFSET_UM: f64 = 80.0;
    /// Nominal datasheet half-power beamwidth in degrees. Recorded as
    /// metadata only: it is not consistent with the cosine-squared pattern
    /// model and nothing in this crate asserts it.
    pub const NOMINAL_HPBW_DEG: f64 = 32.8;
}

/// Separable cosine-power element pattern over the front hemisphere.
///
/// Power gain is `peak_gain * cos(az)^exponent * cos(el)^exponent` for
/// |az|, |el| below 90 degrees and exactly zero behind. With the crate's
/// angle convention `cos(az) * cos(el)` equals the cosine of the total
/// off-boresight angle, so the default exponent of 2 is the classical
/// axisymmetric cosine-squared patch model.
#[derive(Debug, Clone, Copy)]
pub struct ElementPattern {
    peak_gain: f64,
    exponent: f64,
}

impl ElementPattern {
    /// Linear peak power gain of the reference patch element.
    pub const PATCH_PEAK_GAIN: f64 = 5.8;

    /// The reference patch pattern: peak 5.8, cosine-squared per axis.
    pub fn patch() -> Self {
        ElementPattern {
            peak_gain: Self::PATCH_PEAK_GAIN,
            exponent: 2.0,
        }
    }

    /// Custom peak gain and per-axis cosine exponent, for sensitivity
    /// studies.
    pub fn new(peak_gain: f64, exponent: f64) -> Result<Self> {
        if !(peak_gain > 0.0) || !peak_gain.is_finite() {
            return Err(Error::Validation(format!(
                "pattern peak gain must be positive and finite, got {peak_gain}"
            )));
        }
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(Error::Validation(format!(
                "pattern exponent must be non-negative, got {exponent}"
            )));
        }
        Ok(ElementPattern { peak_gain, exponent })
    }

    pub fn peak_gain(&self) -> f64 {
        self.peak_gain
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn peak_dbi(&self) -> f64 {
        10.0 * self.peak_gain.log10()
    }

    /// Linear power gain toward (az, el) radians.
    pub fn gain(&self, az: f64, el: f64) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        if az.abs() >= FRAC_PI_2 || el.abs() >= FRAC_PI_2 {
            return 0.0;
        }
        self.gain_from_cosines(az.cos(), el.cos())
    }

    /// Same as [`gain`](Self::gain) given the two direction cosines
    /// directly; callers must ensure both are positive (front hemisphere).
    pub fn gain_from_cosines(&self, cos_az: f64, cos_el: f64) -> f64 {
        debug_assert!(cos_az > 0.0 && cos_el > 0.0);
        if self.exponent == 2.0 {
            self.peak_gain * (cos_az * cos_az) * (cos_el * cos_el)
        } else {
            self.peak_gain * cos_az.powf(self.exponent) * cos_el.powf(self.exponent)
        }
    }
}

/// Where a transmission matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Friis,
    FullWave,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Friis => write!(f, "friis"),
            Provenance::FullWave => write!(f, "fullwave"),
        }
    }
}

/// Complex transmission matrix from feed ports to surface ports
/// (surface count x feed count).
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    entries: Array2<Complex64>,
    provenance: Provenance,
    frequency_ghz: Option<f64>,
    passivity_scale: Option<f64>,
}

impl ChannelMatrix {
    pub fn new(
        entries: Array2<Complex64>,
        provenance: Provenance,
        frequency_ghz: Option<f64>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("channel matrix must be non-empty".into()));
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Validation(
                "channel matrix contains non-finite entries".into(),
            ));
        }
        Ok(ChannelMatrix {
            entries,
            provenance,
            frequency_ghz,
            passivity_scale: None,
        })
    }

    /// Surface-side element count (rows).
    pub fn n_ris(&self) -> usize {
        self.entries.nrows()
    }

    /// Feed-side element count (columns).
    pub fn n_amaf(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn entry(&self, ris_idx: usize, amaf_idx: usize) -> Complex64 {
        self.entries[[ris_idx, amaf_idx]]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn frequency_ghz(&self) -> Option<f64> {
        self.frequency_ghz
    }

    /// Scale factor applied by the passivity ceiling, if any.
    pub fn passivity_scale(&self) -> Option<f64> {
        self.passivity_scale
    }

    /// Returns a copy with all entries multiplied by `scale`, recording the
    /// factor as a passivity rescale.
    pub(crate) fn rescaled(&self, scale: f64) -> ChannelMatrix {
        ChannelMatrix {
            entries: self.entries.mapv(|c| c * scale),
            provenance: self.provenance,
            frequency_ghz: self.frequency_ghz,
            passivity_scale: Some(self.passivity_scale.unwrap_or(1.0) * scale),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Field coupling coefficient for one element pair.
pub fn friis_coefficient(
    pair: &PairGeometry,
    amaf_pattern: &ElementPattern,
    ris_pattern: &ElementPattern,
) -> Result<Complex64> {
    if !(pair.r > 0.0) {
        return Err(Error::Validation(format!(
            "pair distance must be positive, got {}",
            pair.r
        )));
    }
    let g_a = amaf_pattern.gain(pair.az_a, pair.el_a);
    let g_r = ris_pattern.gain(pair.az_r, pair.el_r);
    let magnitude = (g_a * g_r).sqrt() / (2.0 * std::f64::consts::PI * pair.r);
    Ok(Complex64::from_polar(
        magnitude,
        -std::f64::consts::PI * pair.r,
    ))
}

/// Builds the full transmission matrix for a system geometry, one
/// coefficient per surface/feed element pair.
pub fn build_t_friis(sys: &SystemGeometry, pattern: &ElementPattern) -> Result<ChannelMatrix> {
    let n_p = sys.ris().n_elements();
    let n_a = sys.amaf().n_elements();
    let mut entries = Array2::zeros((n_p, n_a));
    for k in 0..n_p {
        for l in 0..n_a {
            let pair = pair_geometry(sys, k, l)?;
            entries[[k, l]] = friis_coefficient(&pair, pattern, pattern)?;
        }
    }
    ChannelMatrix::new(entries, Provenance::Friis, None)
}
