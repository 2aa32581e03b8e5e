//! Builds the analytic feed-to-surface transmission matrix for the
//! reference geometry (16x16 surface, 2x2 feed, focal distance 8
//! half-wavelengths) and inspects its principal mode.

use amaf_ris::channel::{build_t_friis, ElementPattern};
use amaf_ris::geometry::{build_ura, pair_geometry, place_feed};
use amaf_ris::pem::{principal_triplet, ris_excitation, power_taper_db, PemOptions};

fn main() -> amaf_ris::Result<()> {
    let ris = build_ura(16, 16, 1.0)?;
    let amaf = build_ura(2, 2, 1.0)?;
    let sys = place_feed(ris, amaf, 8.0)?;
    println!(
        "geometry: {} surface elements, {} feed elements, F/D = {}",
        sys.ris().n_elements(),
        sys.amaf().n_elements(),
        sys.f_over_d()
    );

    let pattern = ElementPattern::patch();
    println!(
        "element pattern: peak {} (= {:.2} dBi), cos^{} per axis",
        pattern.peak_gain(),
        pattern.peak_dbi(),
        pattern.exponent()
    );

    let t = build_t_friis(&sys, &pattern)?;
    let center = sys.ris().index(8, 8);
    let corner = sys.ris().index(15, 15);
    let pg = pair_geometry(&sys, corner, 0)?;
    println!(
        "matrix {}x{}: |t| center = {:.6}, corner = {:.6} (corner distance {:.4})",
        t.n_ris(),
        t.n_amaf(),
        t.entry(center, sys.amaf().index(1, 1)).norm(),
        t.entry(corner, 0).norm(),
        pg.r
    );

    let triplet = principal_triplet(&t, PemOptions::default())?;
    println!(
        "principal singular value sigma1 = {:.6} ({} iterations, residual {:.2e})",
        triplet.sigma1, triplet.iterations, triplet.residual
    );

    let excitation = ris_excitation(&t, &triplet.w1, sys.ris())?;
    println!(
        "surface power taper = {:.3} dB",
        power_taper_db(&excitation)?
    );
    Ok(())
}
