//! Principal-eigenmode feed configuration: computes the feed weights,
//! applies the passivity ceiling, and prints the surface magnitude taper
//! as a grid.

use amaf_ris::channel::{build_t_friis, ElementPattern};
use amaf_ris::geometry::{build_ura, place_feed};
use amaf_ris::pem::{
    apply_passivity_ceiling, principal_triplet, ris_excitation, power_taper_db, PemOptions,
};

fn main() -> amaf_ris::Result<()> {
    let sys = place_feed(build_ura(16, 16, 1.0)?, build_ura(2, 2, 1.0)?, 8.0)?;
    let t = build_t_friis(&sys, &ElementPattern::patch())?;

    let triplet = principal_triplet(&t, PemOptions::default())?;
    println!("sigma1(raw) = {:.6}", triplet.sigma1);
    println!("feed weights w1 (unit power):");
    for (l, w) in triplet.w1.iter().enumerate() {
        println!("  feed {l}: magnitude {:.6}, phase {:+.4} rad", w.norm(), w.arg());
    }

    let (t_ceiled, scale) = apply_passivity_ceiling(&t)?;
    println!("passivity ceiling applied scale = {scale:.6}");
    let check = principal_triplet(&t_ceiled, PemOptions::default())?;
    println!("sigma1(ceiled) = {:.9}", check.sigma1);

    let e = ris_excitation(&t_ceiled, &triplet.w1, sys.ris())?;
    println!("power taper = {:.3} dB", power_taper_db(&e)?);

    // normalized magnitude grid, one row per y line
    let max = e.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    println!("normalized |excitation| over the surface:");
    for j in (0..16).rev() {
        let row: Vec<String> = (0..16)
            .map(|i| format!("{:.2}", e.values()[e.layout().index(i, j)].norm() / max))
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
