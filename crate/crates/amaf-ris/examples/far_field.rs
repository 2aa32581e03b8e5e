//! Far-field synthesis: principal-mode excitation with conjugate phasing
//! versus uniform excitation, plus a steered beam.

use amaf_ris::channel::{build_t_friis, ElementPattern};
use amaf_ris::farfield::{
    conjugate_steering_phases, pattern_metrics, radiation_pattern, steering_phases, PhaseConfig,
};
use amaf_ris::geometry::{build_ura, place_feed};
use amaf_ris::pem::{principal_triplet, ris_excitation, ExcitationVector, PemOptions};

const STEP_DEG: f64 = 0.25;

fn show(label: &str, m: &amaf_ris::farfield::PatternMetrics) {
    println!(
        "{label}: peak {:.2} dBi at ({:.2}, {:.2}) deg, SLL {}, HPBW ({:.2}, {:.2}) deg",
        m.peak_dbi,
        m.peak_az_deg,
        m.peak_el_deg,
        m.sll_db
            .map(|v| format!("{v:.2} dB"))
            .unwrap_or_else(|| "none".into()),
        m.hpbw_az_deg,
        m.hpbw_el_deg
    );
}

fn main() -> amaf_ris::Result<()> {
    let sys = place_feed(build_ura(16, 16, 1.0)?, build_ura(2, 2, 1.0)?, 8.0)?;
    let pattern = ElementPattern::patch();
    let t = build_t_friis(&sys, &pattern)?;
    let triplet = principal_triplet(&t, PemOptions::default())?;
    let pem_exc = ris_excitation(&t, &triplet.w1, sys.ris())?;

    // principal-mode excitation, conjugate-phased to broadside
    let cfg = conjugate_steering_phases(sys.ris(), 0.0, 0.0, &pem_exc)?;
    let grid = radiation_pattern(&pem_exc, &cfg, &pattern, STEP_DEG)?;
    show("principal-mode beam", &pattern_metrics(&grid)?);
    println!(
        "  radiated fraction of the input-power-normalized pattern: {:.3}",
        grid.radiated_fraction()
    );

    // uniform reference aperture
    let uniform = ExcitationVector::uniform(sys.ris().clone());
    let zero = PhaseConfig::zero(sys.ris());
    let grid_u = radiation_pattern(&uniform, &zero, &pattern, STEP_DEG)?;
    show("uniform aperture", &pattern_metrics(&grid_u)?);

    // plane-wave steering law: linear ramp of -pi sin(30 deg) per element
    let steer = steering_phases(sys.ris(), 30f64.to_radians(), 0.0);
    println!(
        "steering ramp across x: {:+.4} rad per element",
        steer.phases()[1] - steer.phases()[0]
    );

    // steered principal-mode beam
    let conj = conjugate_steering_phases(sys.ris(), 30f64.to_radians(), 0.0, &pem_exc)?;
    let grid_s = radiation_pattern(&pem_exc, &conj, &pattern, STEP_DEG)?;
    show("steered to (30, 0) deg", &pattern_metrics(&grid_s)?);
    Ok(())
}
