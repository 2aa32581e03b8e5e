//! Block CSV carrier for feed-excited measurements.
//!
//! Header: `freq_GHz,ris_port,amaf_port,re,im`. Each row is one complex
//! coefficient measured with feed element `amaf_port` excited (1-based).
//! `ris_port` identifies the receiving element: positive `k` is surface
//! element k, negative `-i` is feed element i, so a single schema carries
//! both the surface-from-feed transmission block and the feed-to-feed
//! mutual-coupling block. Rows may appear in any order; per frequency a
//! block is either fully present or fully absent.

use std::collections::BTreeMap;
use std::io::BufRead;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{PortMap, SParameterDataset};

pub(crate) const HEADER: &str = "freq_GHz,ris_port,amaf_port,re,im";

struct Row {
    line: usize,
    freq_ghz: f64,
    ris_port: i64,
    amaf_port: u64,
    value: Complex64,
}

fn parse_row(line_no: usize, line: &str) -> Result<Row> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(Error::parse(
            line_no,
            format!("expected 5 comma-separated fields, got {}", fields.len()),
        ));
    }
    let freq_ghz: f64 = fields[0]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid frequency '{}'", fields[0])))?;
    let ris_port: i64 = fields[1]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid ris_port '{}'", fields[1])))?;
    if ris_port == 0 {
        return Err(Error::parse(
            line_no,
            "ris_port 0 is invalid: ports are 1-based (negative = feed element)",
        ));
    }
    let amaf_port: u64 = fields[2]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid amaf_port '{}'", fields[2])))?;
    if amaf_port == 0 {
        return Err(Error::parse(line_no, "amaf_port is 1-based, got 0"));
    }
    let re: f64 = fields[3]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid re value '{}'", fields[3])))?;
    let im: f64 = fields[4]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid im value '{}'", fields[4])))?;
    if !freq_ghz.is_finite() || !re.is_finite() || !im.is_finite() {
        return Err(Error::parse(line_no, "non-finite numeric value"));
    }
    Ok(Row {
        line: line_no,
        freq_ghz,
        ris_port,
        amaf_port,
        value: Complex64::new(re, im),
    })
}

/// Parses the block CSV into a dataset with canonical port order. Element
/// counts are inferred from the largest indices present; every block that
/// appears at a frequency must be complete there.
pub fn parse_tblock_csv<R: BufRead>(reader: R) -> Result<SParameterDataset> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(Error::parse(1, "empty stream")),
    };
    if header.trim_end_matches('\r').trim() != HEADER {
        return Err(Error::parse(
            1,
            format!("expected header '{HEADER}', got '{}'", header.trim()),
        ));
    }

    let mut rows: Vec<Row> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let content = line.trim_end_matches('\r');
        if content.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(line_no, content)?);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }

    let n_ris = rows
        .iter()
        .filter(|r| r.ris_port > 0)
        .map(|r| r.ris_port as usize)
        .max()
        .unwrap_or(0);
    let n_amaf = rows
        .iter()
        .map(|r| {
            let out = if r.ris_port < 0 { (-r.ris_port) as usize } else { 0 };
            out.max(r.amaf_port as usize)
        })
        .max()
        .unwrap();
    if n_ris == 0 {
        return Err(Error::parse(
            rows[0].line,
            "no surface-from-feed rows present (all ris_port values negative)",
        ));
    }

    // group by frequency; rows of one sample must repeat the value exactly
    let mut freq_values: Vec<f64> = rows.iter().map(|r| r.freq_ghz).collect();
    freq_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freq_values.dedup();

    let mut coefficients: Vec<BTreeMap<(usize, usize), Complex64>> =
        vec![BTreeMap::new(); freq_values.len()];
    let mut row_lines: Vec<BTreeMap<(usize, usize), usize>> =
        vec![BTreeMap::new(); freq_values.len()];
    for row in &rows {
        let fi = freq_values
            .binary_search_by(|f| f.partial_cmp(&row.freq_ghz).unwrap())
            .unwrap();
        let out_port = if row.ris_port > 0 {
            row.ris_port as usize - 1
        } else {
            n_ris + (-row.ris_port) as usize - 1
        };
        let in_port = n_ris + row.amaf_port as usize - 1;
        if coefficients[fi].insert((out_port, in_port), row.value).is_some() {
            return Err(Error::parse(
                row.line,
                format!(
                    "duplicate coefficient for frequency {} GHz, ris_port {}, amaf_port {}",
                    row.freq_ghz, row.ris_port, row.amaf_port
                ),
            ));
        }
        row_lines[fi].insert((out_port, in_port), row.line);
    }

    // completeness: a block with any row at a frequency must have them all
    for (fi, per_freq) in coefficients.iter().enumerate() {
        let has_t = per_freq.keys().any(|&(o, _)| o < n_ris);
        let has_amaf = per_freq.keys().any(|&(o, _)| o >= n_ris);
        if has_t {
            for k in 0..n_ris {
                for l in 0..n_amaf {
                    if !per_freq.contains_key(&(k, n_ris + l)) {
                        return Err(Error::parse(
                            row_lines[fi].values().copied().max().unwrap_or(1),
                            format!(
                                "incomplete transmission block at {} GHz: missing ris_port {}, amaf_port {}",
                                freq_values[fi],
                                k + 1,
                                l + 1
                            ),
                        ));
                    }
                }
            }
        }
        if has_amaf {
            for i in 0..n_amaf {
                for j in 0..n_amaf {
                    if !per_freq.contains_key(&(n_ris + i, n_ris + j)) {
                        return Err(Error::parse(
                            row_lines[fi].values().copied().max().unwrap_or(1),
                            format!(
                                "incomplete feed coupling block at {} GHz: missing ris_port -{}, amaf_port {}",
                                freq_values[fi],
                                i + 1,
                                j + 1
                            ),
                        ));
                    }
                }
            }
        }
    }

    SParameterDataset::new(
        freq_values,
        coefficients,
        PortMap::canonical(n_ris, n_amaf)?,
    )
}

/// Writes the feed-excited blocks of a dataset in the block CSV format.
/// Coefficients with a surface-side input port have no representation in
/// this format and are skipped.
pub fn write_tblock_csv<W: std::io::Write>(ds: &SParameterDataset, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    let pm = ds.port_map();
    // canonical indices for the export regardless of the source port order
    for fi in 0..ds.n_frequencies() {
        let f = ds.frequencies_ghz()[fi];
        for k in 0..pm.n_ris() {
            for l in 0..pm.n_amaf() {
                if let Some(c) = ds.coefficient(fi, pm.ris_port(k), pm.amaf_port(l)) {
                    writeln!(out, "{},{},{},{},{}", f, k + 1, l + 1, c.re, c.im)?;
                }
            }
        }
        for i in 0..pm.n_amaf() {
            for j in 0..pm.n_amaf() {
                if let Some(c) = ds.coefficient(fi, pm.amaf_port(i), pm.amaf_port(j)) {
                    writeln!(out, "{},-{},{},{},{}", f, i + 1, j + 1, c.re, c.im)?;
                }
            }
        }
    }
    Ok(())
}
