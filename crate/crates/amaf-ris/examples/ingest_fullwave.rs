//! Round trip through the solver-export formats: synthesizes a dataset
//! (a passively rescaled analytic matrix plus a feed coupling block),
//! writes it as Touchstone and as block CSV, re-ingests both, and
//! extracts the transmission block.

use amaf_ris::channel::{build_t_friis, ElementPattern};
use amaf_ris::geometry::{build_ura, place_feed};
use amaf_ris::ingest::{
    coupling_report, extract_t, parse_tblock_csv, parse_touchstone, write_tblock_csv,
    write_touchstone, PortMap, SParameterDataset,
};
use amaf_ris::pem::{principal_triplet, PemOptions};
use ndarray::Array2;
use num_complex::Complex64;

fn main() -> amaf_ris::Result<()> {
    let sys = place_feed(build_ura(16, 16, 1.0)?, build_ura(2, 2, 1.0)?, 8.0)?;
    let t = build_t_friis(&sys, &ElementPattern::patch())?;
    let triplet = principal_triplet(&t, PemOptions::default())?;

    // rescale so the matrix is passive, mimicking a lossy measured link
    let target_sigma = 0.9;
    let scale = target_sigma / triplet.sigma1;
    let t_scaled = t.entries().mapv(|c| c * scale);

    // plausible feed coupling block: adjacent pairs near -17 dB,
    // diagonal pairs near -32 dB
    let amaf = build_ura(2, 2, 1.0)?;
    let mut coupling = Array2::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let d = (amaf.positions()[i] - amaf.positions()[j]).norm();
                let db = if d <= 1.0 + 1e-9 { -17.0 } else { -32.0 };
                coupling[[i, j]] = Complex64::from_polar(10f64.powf(db / 20.0), -0.3 * d);
            }
        }
    }

    let ds = SParameterDataset::from_blocks(
        vec![150.0],
        vec![t_scaled],
        Some(vec![coupling]),
    )?;

    let mut touchstone = Vec::new();
    write_touchstone(&ds, &mut touchstone)?;
    let mut csv = Vec::new();
    write_tblock_csv(&ds, &mut csv)?;
    println!(
        "exports: touchstone {} bytes, block CSV {} bytes",
        touchstone.len(),
        csv.len()
    );

    let from_ts = parse_touchstone(touchstone.as_slice(), PortMap::canonical(256, 4)?)?;
    let from_csv = parse_tblock_csv(csv.as_slice())?;

    for (label, ds_in) in [("touchstone", &from_ts), ("block CSV", &from_csv)] {
        let t_in = extract_t(ds_in, 150.0)?;
        let s = principal_triplet(&t_in, PemOptions::default())?;
        println!("{label}: extracted {}x{} block, sigma1 = {:.9}", t_in.n_ris(), t_in.n_amaf(), s.sigma1);
    }

    let report = coupling_report(&from_csv, &amaf)?;
    println!(
        "feed coupling: adjacent [{:.1}, {:.1}] dB, diagonal [{:.1}, {:.1}] dB, warnings: {}",
        report.adjacent_range_db.0,
        report.adjacent_range_db.1,
        report.diagonal_range_db.0,
        report.diagonal_range_db.1,
        report.warnings.len()
    );
    Ok(())
}
