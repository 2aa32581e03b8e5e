//! Command implementations behind the `amaf-ris` binary.
//!
//! Exit codes: 0 success, 1 runtime/convergence, 2 usage/config, 3 parse.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::channel::build_t_friis;
use crate::config::{RunConfig, TSourceFormat, TSourceKind};
use crate::error::{Error, Result};
use crate::farfield::{conjugate_steering_phases, pattern_metrics, quantize_phases, radiation_pattern};
use crate::ingest::{
    coupling_report, parse_tblock_csv, parse_touchstone, write_tblock_csv, SParameterDataset,
};
use crate::output::{sha256_hex, FileHash, OutputSet, RunManifest, StageTiming};
use crate::pem::{apply_passivity_ceiling, principal_triplet, ris_excitation, power_taper_db,
                 PemOptions};
use crate::report::{
    taper_field, CouplingSummary, FeedSummary, ImportSummary, PatternReport, RatePercentiles,
    SimulationReport,
};
use crate::syssim::{compare_runs, load_channel_matrix, simulate_rate_cdf, RateCdf};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "amaf-ris", version, about = "Feed-array / reflective-surface link simulation")]
pub struct Cli {
    /// Run-config TOML; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the scenario seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the analytic transmission matrix and summarize its principal mode.
    BuildFriis,
    /// Ingest a solver export, cache it canonically, and report feed coupling.
    Import {
        /// Touchstone (.sNp) or block CSV (.csv) export.
        file: PathBuf,
    },
    /// Principal-mode feed summary and surface excitation grid.
    Pem,
    /// Far-field pattern for the principal-mode excitation.
    Pattern {
        /// Steering azimuth, degrees.
        #[arg(long, default_value_t = 0.0)]
        az: f64,
        /// Steering elevation, degrees.
        #[arg(long, default_value_t = 0.0)]
        el: f64,
        /// Phase-shifter bits; omit for continuous phases.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Monte-Carlo rate CDF for the configured scenario.
    Simulate {
        /// Overrides the configured transmission-matrix source.
        #[arg(long, value_enum)]
        tsource: Option<CliTSource>,
        /// Overrides the configured passivity ceiling.
        #[arg(long, value_enum)]
        sigma_ceiling: Option<Toggle>,
    },
    /// Percentile deltas and KS distance between two rate CDF files.
    Compare {
        cdf_a: PathBuf,
        cdf_b: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliTSource {
    Friis,
    Fullwave,
}

struct Context {
    config: RunConfig,
    out_dir: PathBuf,
    command_line: String,
    timings: Vec<StageTiming>,
    input_files: Vec<FileHash>,
    started: Instant,
    stage_started: Instant,
}

impl Context {
    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: name.to_string(),
            millis: now.duration_since(self.stage_started).as_millis(),
        });
        self.stage_started = now;
    }

    fn manifest(&mut self) -> RunManifest {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: "total".to_string(),
            millis: now.duration_since(self.started).as_millis(),
        });
        RunManifest {
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: self.command_line.clone(),
            config_snapshot: self.config.to_toml(),
            input_files: self.input_files.clone(),
            output_files: Vec::new(),
            timings: std::mem::take(&mut self.timings),
        }
    }

    fn hash_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
        self.input_files.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.scenario.seed = seed;
    }
    if let Command::Simulate {
        tsource,
        sigma_ceiling,
    } = &cli.command
    {
        if let Some(ts) = tsource {
            config.tsource.kind = match ts {
                CliTSource::Friis => TSourceKind::Friis,
                CliTSource::Fullwave => TSourceKind::Fullwave,
            };
        }
        if let Some(sc) = sigma_ceiling {
            config.scenario.sigma_ceiling = *sc == Toggle::On;
        }
    }
    config.validate()?;

    let now = Instant::now();
    let mut ctx = Context {
        config,
        out_dir: cli.out_dir.clone(),
        command_line: std::env::args().collect::<Vec<_>>().join(" "),
        timings: Vec::new(),
        input_files: Vec::new(),
        started: now,
        stage_started: now,
    };
    if let Some(path) = &cli.config {
        ctx.hash_input(path)?;
    }

    match cli.command {
        Command::BuildFriis => cmd_build_friis(&mut ctx),
        Command::Import { file } => cmd_import(&mut ctx, &file),
        Command::Pem => cmd_pem(&mut ctx),
        Command::Pattern { az, el, bits } => cmd_pattern(&mut ctx, az, el, bits),
        Command::Simulate { .. } => cmd_simulate(&mut ctx),
        Command::Compare { cdf_a, cdf_b } => cmd_compare(&mut ctx, &cdf_a, &cdf_b),
    }
}

fn feed_summary(ctx: &mut Context, t: &crate::channel::ChannelMatrix) -> Result<(FeedSummary, crate::channel::ChannelMatrix, crate::pem::SingularTriplet)> {
    let triplet = principal_triplet(t, PemOptions::default())?;
    let (t_used, applied_scale) = if ctx.config.scenario.sigma_ceiling {
        apply_passivity_ceiling(t)?
    } else {
        (t.clone(), 1.0)
    };
    let sys = ctx.config.system_geometry()?;
    let excitation = ris_excitation(&t_used, &triplet.w1, sys.ris())?;
    let taper_db = power_taper_db(&excitation)?;
    let summary = FeedSummary {
        provenance: t.provenance().to_string(),
        n_ris: t.n_ris(),
        n_amaf: t.n_amaf(),
        sigma1: triplet.sigma1,
        applied_scale,
        sigma1_after_ceiling: triplet.sigma1 * applied_scale,
        taper_db: taper_field(taper_db),
        pem_iterations: triplet.iterations,
        pem_residual: triplet.residual,
    };
    Ok((summary, t_used, triplet))
}

fn cmd_build_friis(ctx: &mut Context) -> Result<()> {
    let sys = ctx.config.system_geometry()?;
    let pattern = ctx.config.element_pattern()?;
    let t = build_t_friis(&sys, &pattern)?;
    ctx.stage("build_t");

    let (summary, _t_used, _triplet) = feed_summary(ctx, &t)?;
    ctx.stage("principal_mode");

    let ds = SParameterDataset::from_blocks(
        vec![ctx.config.geometry.carrier_ghz],
        vec![t.entries().clone()],
        None,
    )?;
    let mut csv = Vec::new();
    write_tblock_csv(&ds, &mut csv)?;

    let mut out = OutputSet::new(&ctx.out_dir);
    out.add("t_friis.csv", csv);
    out.add(
        "build_summary.json",
        serde_json::to_vec_pretty(&summary).expect("summary serializes"),
    );
    ctx.stage("serialize");
    let placed = out.commit(ctx.manifest())?;
    println!(
        "built {}x{} transmission matrix: sigma1 = {:.6}, taper = {:.3} dB",
        summary.n_ris,
        summary.n_amaf,
        summary.sigma1,
        summary.taper_db.unwrap_or(f64::INFINITY)
    );
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_import(ctx: &mut Context, file: &Path) -> Result<()> {
    let bytes = ctx.hash_input(file)?;
    let format = {
        let mut probe = ctx.config.clone();
        probe.tsource.path = file.display().to_string();
        crate::syssim::resolve_format(&probe)?
    };
    let ds = match format {
        TSourceFormat::Touchstone => {
            parse_touchstone(bytes.as_slice(), ctx.config.touchstone_port_map()?)?
        }
        TSourceFormat::Tblock => parse_tblock_csv(bytes.as_slice())?,
        TSourceFormat::Auto => unreachable!(),
    };
    ctx.stage("parse");

    let g = &ctx.config.geometry;
    let amaf_layout = crate::geometry::build_ura(g.amaf_n_x, g.amaf_n_y, g.amaf_spacing)?;
    let has_amaf_block = (0..ds.n_frequencies()).any(|fi| ds.has_amaf_block(fi));
    let coupling = if has_amaf_block && amaf_layout.n_elements() == ds.port_map().n_amaf() {
        Some(coupling_report(&ds, &amaf_layout)?)
    } else {
        None
    };
    ctx.stage("coupling");

    let summary = ImportSummary {
        source: file.display().to_string(),
        format: match format {
            TSourceFormat::Touchstone => "touchstone".into(),
            TSourceFormat::Tblock => "tblock".into(),
            TSourceFormat::Auto => unreachable!(),
        },
        n_ports: ds.port_map().n_ports(),
        n_ris: ds.port_map().n_ris(),
        n_amaf: ds.port_map().n_amaf(),
        frequencies_ghz: ds.frequencies_ghz().to_vec(),
        t_block_frequencies: (0..ds.n_frequencies()).filter(|&fi| ds.has_t_block(fi)).count(),
        amaf_block_frequencies: (0..ds.n_frequencies())
            .filter(|&fi| ds.has_amaf_block(fi))
            .count(),
        coupling: coupling.as_ref().map(CouplingSummary::new),
    };

    let mut cache = Vec::new();
    write_tblock_csv(&ds, &mut cache)?;
    let mut out = OutputSet::new(&ctx.out_dir);
    out.add("dataset_cache.csv", cache);
    if let Some(rep) = &coupling {
        let mut csv = Vec::new();
        rep.write_csv(&mut csv)?;
        out.add("coupling.csv", csv);
        for w in &rep.warnings {
            eprintln!("WARN: {w}");
        }
    }
    out.add(
        "import_summary.json",
        serde_json::to_vec_pretty(&summary).expect("summary serializes"),
    );
    ctx.stage("serialize");
    let placed = out.commit(ctx.manifest())?;
    println!(
        "imported {} ports x {} frequencies ({} transmission blocks, {} feed blocks)",
        summary.n_ports,
        summary.frequencies_ghz.len(),
        summary.t_block_frequencies,
        summary.amaf_block_frequencies
    );
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_pem(ctx: &mut Context) -> Result<()> {
    let t = load_channel_matrix(&ctx.config)?;
    ctx.stage("load_t");
    let (summary, t_used, triplet) = feed_summary(ctx, &t)?;
    let sys = ctx.config.system_geometry()?;
    let excitation = ris_excitation(&t_used, &triplet.w1, sys.ris())?;
    ctx.stage("principal_mode");

    let mut grid = Vec::new();
    excitation.write_magnitude_grid_csv(&mut grid)?;
    let mut out = OutputSet::new(&ctx.out_dir);
    out.add("excitation_magnitude.csv", grid);
    out.add(
        "pem_summary.json",
        serde_json::to_vec_pretty(&summary).expect("summary serializes"),
    );
    ctx.stage("serialize");
    let placed = out.commit(ctx.manifest())?;
    println!(
        "principal mode: sigma1 = {:.6} (scale {:.6}), taper = {:.3} dB",
        summary.sigma1,
        summary.applied_scale,
        summary.taper_db.unwrap_or(f64::INFINITY)
    );
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_pattern(ctx: &mut Context, az_deg: f64, el_deg: f64, bits: Option<u32>) -> Result<()> {
    if az_deg.abs() >= 90.0 || el_deg.abs() >= 90.0 {
        return Err(Error::Config(
            "steering direction must lie strictly inside the front hemisphere".into(),
        ));
    }
    let t = load_channel_matrix(&ctx.config)?;
    ctx.stage("load_t");
    let (_summary, t_used, triplet) = feed_summary(ctx, &t)?;
    let sys = ctx.config.system_geometry()?;
    let pattern = ctx.config.element_pattern()?;
    let excitation = ris_excitation(&t_used, &triplet.w1, sys.ris())?;
    let mut cfg = conjugate_steering_phases(
        sys.ris(),
        az_deg.to_radians(),
        el_deg.to_radians(),
        &excitation,
    )?;
    if let Some(b) = bits {
        cfg = quantize_phases(&cfg, b)?;
    }
    let grid = radiation_pattern(&excitation, &cfg, &pattern, ctx.config.pattern.grid_step_deg)?;
    let metrics = pattern_metrics(&grid)?;
    ctx.stage("pattern");

    let report = PatternReport::new(
        &metrics,
        ctx.config.pattern.grid_step_deg,
        bits,
        grid.radiated_fraction(),
    );
    let mut grid_csv = Vec::new();
    grid.write_grid_csv(&mut grid_csv)?;
    let mut cuts_csv = Vec::new();
    grid.write_cuts_csv(&mut cuts_csv)?;
    let mut out = OutputSet::new(&ctx.out_dir);
    out.add("pattern_grid.csv", grid_csv);
    out.add("pattern_cuts.csv", cuts_csv);
    out.add(
        "pattern_report.json",
        serde_json::to_vec_pretty(&report).expect("report serializes"),
    );
    ctx.stage("serialize");
    let placed = out.commit(ctx.manifest())?;
    println!(
        "pattern peak {:.2} dBi at ({:.2}, {:.2}) deg, SLL {} dB, HPBW ({:.2}, {:.2}) deg",
        report.peak_dbi,
        report.peak_az_deg,
        report.peak_el_deg,
        report
            .sll_db
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "n/a".into()),
        report.hpbw_az_deg,
        report.hpbw_el_deg
    );
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_simulate(ctx: &mut Context) -> Result<()> {
    let sim = simulate_rate_cdf(&ctx.config)?;
    ctx.stage("monte_carlo");

    // broadside-conjugate pattern metrics accompany the rate statistics
    let sys = ctx.config.system_geometry()?;
    let pattern = ctx.config.element_pattern()?;
    let t = load_channel_matrix(&ctx.config)?;
    let (_, t_used, triplet) = feed_summary(ctx, &t)?;
    let excitation = ris_excitation(&t_used, &triplet.w1, sys.ris())?;
    let mut phase_cfg = conjugate_steering_phases(sys.ris(), 0.0, 0.0, &excitation)?;
    if let Some(b) = ctx.config.scenario.phase_bits {
        phase_cfg = quantize_phases(&phase_cfg, b)?;
    }
    let grid = radiation_pattern(&excitation, &phase_cfg, &pattern, ctx.config.pattern.grid_step_deg)?;
    let metrics = pattern_metrics(&grid)?;
    ctx.stage("pattern");

    let report = SimulationReport {
        config_fingerprint: sim.fingerprint.clone(),
        tsource: sim.provenance.to_string(),
        carrier_ghz: ctx.config.geometry.carrier_ghz,
        sigma1: sim.sigma1,
        applied_scale: sim.applied_scale,
        taper_db: taper_field(sim.taper_db),
        pattern: PatternReport::new(
            &metrics,
            ctx.config.pattern.grid_step_deg,
            ctx.config.scenario.phase_bits,
            grid.radiated_fraction(),
        ),
        noise_power_dbm: sim.noise_power_dbm,
        compensation_db: sim.compensation_db,
        far_field_min_m: sim.far_field_min_m,
        n_drops: sim.cdf.len(),
        rate_percentiles: RatePercentiles {
            p1: sim.cdf.percentile(1.0),
            p10: sim.cdf.percentile(10.0),
            p50: sim.cdf.percentile(50.0),
            p90: sim.cdf.percentile(90.0),
        },
        mean_rate: sim.drop_rates.iter().sum::<f64>() / sim.drop_rates.len() as f64,
        warnings: sim.warnings.clone(),
    };

    let mut cdf_csv = Vec::new();
    sim.cdf.write_csv(&mut cdf_csv)?;
    let mut out = OutputSet::new(&ctx.out_dir);
    out.add("cdf.csv", cdf_csv);
    out.add(
        "report.json",
        serde_json::to_vec_pretty(&report).expect("report serializes"),
    );
    ctx.stage("serialize");
    for w in &report.warnings {
        eprintln!("WARN: {w}");
    }
    let placed = out.commit(ctx.manifest())?;
    println!(
        "{} drops from {} matrix: median rate {:.3} bit/s/Hz (p10 {:.3}, p90 {:.3})",
        report.n_drops, report.tsource, report.rate_percentiles.p50,
        report.rate_percentiles.p10, report.rate_percentiles.p90
    );
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_compare(ctx: &mut Context, cdf_a: &Path, cdf_b: &Path) -> Result<()> {
    let bytes_a = ctx.hash_input(cdf_a)?;
    let bytes_b = ctx.hash_input(cdf_b)?;
    let a = RateCdf::read_csv(bytes_a.as_slice())?;
    let b = RateCdf::read_csv(bytes_b.as_slice())?;
    let report = compare_runs(&a, &b);
    ctx.stage("compare");

    let mut out = OutputSet::new(&ctx.out_dir);
    out.add(
        "compare.json",
        serde_json::to_vec_pretty(&report).expect("report serializes"),
    );
    let placed = out.commit(ctx.manifest())?;
    println!(
        "KS distance {:.4}, max percentile gap {:.4} bit/s/Hz over span {:.4} ({})",
        report.ks_distance,
        report.max_abs_percentile_delta,
        report.rate_span,
        if report.close_match { "close match" } else { "distinct" }
    );
    for d in &report.percentile_deltas {
        println!(
            "  p{:<3} a = {:.4}  b = {:.4}  delta = {:+.4}",
            d.percentile, d.rate_a, d.rate_b, d.delta
        );
    }
    for p in placed {
        println!("wrote {}", p.display());
    }
    Ok(())
}
