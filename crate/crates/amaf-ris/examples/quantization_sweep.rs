//! Discrete phase shifters at the surface: median rate versus shifter
//! resolution, converging to the continuous-phase baseline.

use amaf_ris::config::RunConfig;
use amaf_ris::syssim::simulate_rate_cdf;

fn main() -> amaf_ris::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.scenario.n_drops = 1000;

    cfg.scenario.phase_bits = None;
    let baseline = simulate_rate_cdf(&cfg)?;
    let p50 = baseline.cdf.percentile(50.0);
    println!("continuous phases: median {:.4} bit/s/Hz", p50);

    println!("bits, median rate, loss vs continuous");
    for bits in [1u32, 2, 3, 4, 6, 8, 16] {
        cfg.scenario.phase_bits = Some(bits);
        let out = simulate_rate_cdf(&cfg)?;
        let m = out.cdf.percentile(50.0);
        println!("  {:>2}: {:.4}  {:+.2e}", bits, m, m - p50);
    }
    Ok(())
}
