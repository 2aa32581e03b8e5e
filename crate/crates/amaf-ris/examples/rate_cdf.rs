//! Monte-Carlo rate CDFs: the analytic matrix versus a passively
//! rescaled stand-in for a measured one, compared percentile by
//! percentile.

use amaf_ris::config::{RunConfig, TSourceKind};
use amaf_ris::syssim::{compare_runs, simulate_rate_cdf};

fn main() -> amaf_ris::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.scenario.n_drops = 2000;

    let friis = simulate_rate_cdf(&cfg)?;
    println!(
        "analytic matrix: sigma1 = {:.4}, ceiling scale = {:.4}, taper = {:.2} dB",
        friis.sigma1, friis.applied_scale, friis.taper_db
    );

    // stand-in for a measured export: the same matrix rescaled passive,
    // written to disk and ingested through the file pipeline
    let dir = std::env::temp_dir().join("amaf_ris_rate_cdf_example");
    std::fs::create_dir_all(&dir)?;
    let file = dir.join("measured.csv");
    {
        use amaf_ris::channel::build_t_friis;
        use amaf_ris::ingest::{write_tblock_csv, SParameterDataset};
        use amaf_ris::pem::{principal_triplet, PemOptions};
        let sys = cfg.system_geometry()?;
        let t = build_t_friis(&sys, &cfg.element_pattern()?)?;
        let s = principal_triplet(&t, PemOptions::default())?;
        let scaled = t.entries().mapv(|c| c * (0.9 / s.sigma1));
        let ds = SParameterDataset::from_blocks(vec![150.0], vec![scaled], None)?;
        let mut buf = Vec::new();
        write_tblock_csv(&ds, &mut buf)?;
        std::fs::write(&file, buf)?;
    }

    let mut cfg_fw = cfg.clone();
    cfg_fw.tsource.kind = TSourceKind::Fullwave;
    cfg_fw.tsource.path = file.display().to_string();
    let fullwave = simulate_rate_cdf(&cfg_fw)?;
    println!(
        "ingested matrix: sigma1 = {:.4}, ceiling scale = {:.4}, taper = {:.2} dB",
        fullwave.sigma1, fullwave.applied_scale, fullwave.taper_db
    );

    let report = compare_runs(&friis.cdf, &fullwave.cdf);
    println!("comparison over {} drops:", report.n_a);
    for d in &report.percentile_deltas {
        println!(
            "  p{:<3} analytic = {:.3}  ingested = {:.3}  delta = {:+.3} bit/s/Hz",
            d.percentile, d.rate_a, d.rate_b, d.delta
        );
    }
    println!(
        "  KS distance {:.4}, {}",
        report.ks_distance,
        if report.close_match { "close match" } else { "distinct" }
    );
    Ok(())
}
