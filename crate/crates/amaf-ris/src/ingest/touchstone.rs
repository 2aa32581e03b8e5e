//! Touchstone v1 subset: option line, whitespace-separated numeric
//! records, `!` comments. Frequency units Hz/kHz/MHz/GHz; S-parameters
//! only; RI, MA and DB value formats.
//!
//! Per-frequency record ordering follows the v1 convention: 1-port and
//! 2-port files list the matrix column-major (S11 S21 S12 S22), larger
//! port counts list it row by row. The port count is not encoded in the
//! stream itself (files carry it in the `.sNp` extension), so the caller
//! supplies it through the port map.

use std::collections::BTreeMap;
use std::io::BufRead;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{PortMap, PortRole, SParameterDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValueFormat {
    RealImag,
    MagAngle,
    DbAngle,
}

#[derive(Debug, Clone, Copy)]
struct Options {
    freq_scale_to_ghz: f64,
    format: ValueFormat,
}

fn parse_option_line(line: &str, line_no: usize) -> Result<Options> {
    let mut freq_scale = 1.0; // v1 default unit is GHz
    let mut format = ValueFormat::MagAngle; // v1 default format
    let mut tokens = line[1..].split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => freq_scale = 1e-9,
            "KHZ" => freq_scale = 1e-6,
            "MHZ" => freq_scale = 1e-3,
            "GHZ" => freq_scale = 1.0,
            "S" => {}
            "Y" | "Z" | "G" | "H" => {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported parameter type '{tok}': only S-parameters are handled"),
                ));
            }
            "RI" => format = ValueFormat::RealImag,
            "MA" => format = ValueFormat::MagAngle,
            "DB" => format = ValueFormat::DbAngle,
            "R" => {
                let r = tokens.next().ok_or_else(|| {
                    Error::parse(line_no, "option 'R' must be followed by a reference impedance")
                })?;
                r.parse::<f64>().map_err(|_| {
                    Error::parse(line_no, format!("invalid reference impedance '{r}'"))
                })?;
            }
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("unrecognized option token '{other}'"),
                ));
            }
        }
    }
    Ok(Options {
        freq_scale_to_ghz: freq_scale,
        format,
    })
}

fn to_complex(format: ValueFormat, a: f64, b: f64) -> Complex64 {
    match format {
        ValueFormat::RealImag => Complex64::new(a, b),
        ValueFormat::MagAngle => Complex64::from_polar(a, b.to_radians()),
        ValueFormat::DbAngle => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

/// Matrix entry order of one frequency record: (output port, input port),
/// 0-based.
fn record_order(n_ports: usize) -> Vec<(usize, usize)> {
    match n_ports {
        1 => vec![(0, 0)],
        // 2-port records are column-major: S11 S21 S12 S22
        2 => vec![(0, 0), (1, 0), (0, 1), (1, 1)],
        n => {
            let mut v = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    v.push((i, j));
                }
            }
            v
        }
    }
}

/// Parses a Touchstone v1 stream into a dataset; the port map supplies the
/// port count and the surface/feed role of every port.
pub fn parse_touchstone<R: BufRead>(reader: R, port_map: PortMap) -> Result<SParameterDataset> {
    let n = port_map.n_ports();
    let mut options: Option<Options> = None;
    // numeric tokens with their source line, comments stripped
    let mut values: Vec<(f64, usize)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = match line.find('!') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if options.is_some() {
                return Err(Error::parse(line_no, "duplicate option line"));
            }
            options = Some(parse_option_line(trimmed, line_no)?);
            continue;
        }
        if options.is_none() {
            return Err(Error::parse(
                line_no,
                "data before the '#' option line",
            ));
        }
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(line_no, format!("non-numeric token '{tok}'"))
            })?;
            values.push((v, line_no));
        }
    }

    let options = options.ok_or_else(|| Error::parse(1, "missing '#' option line"))?;
    if values.is_empty() {
        return Err(Error::parse(1, "no data records in stream"));
    }

    let per_record = 1 + 2 * n * n;
    if !values.len().is_multiple_of(per_record) {
        let last_line = values.last().unwrap().1;
        return Err(Error::parse(
            last_line,
            format!(
                "data length {} is not a whole number of {}-port records ({} values each)",
                values.len(),
                n,
                per_record
            ),
        ));
    }

    let order = record_order(n);
    let mut frequencies = Vec::new();
    let mut coefficients = Vec::new();
    for rec in values.chunks(per_record) {
        let freq_ghz = rec[0].0 * options.freq_scale_to_ghz;
        if let Some(&prev) = frequencies.last() {
            if freq_ghz <= prev {
                return Err(Error::parse(
                    rec[0].1,
                    format!("frequencies must be strictly increasing ({prev} then {freq_ghz} GHz)"),
                ));
            }
        }
        let mut m = BTreeMap::new();
        for (slot, pair) in rec[1..].chunks(2).zip(order.iter()) {
            m.insert(*pair, to_complex(options.format, slot[0].0, slot[1].0));
        }
        frequencies.push(freq_ghz);
        coefficients.push(m);
    }

    SParameterDataset::new(frequencies, coefficients, port_map)
}

/// Writes a dataset as Touchstone v1, RI format, GHz. Ports are emitted in
/// dataset port order; coefficients the dataset does not contain are
/// written as zeros (the full square matrix is mandatory in this format)
/// and flagged in a header comment.
pub fn write_touchstone<W: std::io::Write>(ds: &SParameterDataset, mut out: W) -> Result<()> {
    let n = ds.port_map().n_ports();
    let partial = (0..ds.n_frequencies()).any(|fi| ds.coefficients_at(fi).len() < n * n);
    writeln!(out, "! {n}-port S-parameter export")?;
    for (port, role) in ds.port_map().roles().iter().enumerate() {
        let desc = match role {
            PortRole::Ris(k) => format!("surface element {k}"),
            PortRole::Amaf(l) => format!("feed element {l}"),
        };
        writeln!(out, "! port {} = {desc}", port + 1)?;
    }
    if partial {
        writeln!(out, "! partial dataset: unmeasured coefficients written as zero")?;
    }
    writeln!(out, "# GHz S RI R 50")?;
    let order = record_order(n);
    for fi in 0..ds.n_frequencies() {
        let mut fields = vec![format!("{}", ds.frequencies_ghz()[fi])];
        for &(i, j) in &order {
            let c = ds.coefficient(fi, i, j).unwrap_or(Complex64::new(0.0, 0.0));
            fields.push(format!("{}", c.re));
            fields.push(format!("{}", c.im));
        }
        if n <= 2 {
            writeln!(out, "{}", fields.join(" "))?;
        } else {
            // wrap at four value pairs per line, v1 style
            writeln!(out, "{}", fields[0])?;
            for chunk in fields[1..].chunks(8) {
                writeln!(out, "  {}", chunk.join(" "))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn parse(text: &str, n_ris: usize, n_amaf: usize) -> Result<SParameterDataset> {
        parse_touchstone(
            text.as_bytes(),
            PortMap::canonical(n_ris, n_amaf).unwrap(),
        )
    }

    #[test]
    fn two_port_ri_single_frequency() {
        let text = "! demo file\n# GHz S RI R 50\n150.0 0.0 0.0 0.5 0.0 0.0 0.0 0.0 0.0\n";
        let ds = parse(text, 1, 1).unwrap();
        assert_eq!(ds.n_frequencies(), 1);
        assert_eq!(ds.frequencies_ghz()[0], 150.0);
        // S21 (out 2, in 1) is the second record entry in a 2-port file
        assert_eq!(ds.coefficient(0, 1, 0).unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(ds.coefficient(0, 0, 1).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ma_polar_conversion() {
        let text = "# GHz S MA R 50\n150.0 1.0 90.0\n";
        let ds = parse(text, 1, 0).unwrap();
        let c = ds.coefficient(0, 0, 0).unwrap();
        assert_abs_diff_eq!(c.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn db_conversion() {
        let text = "# GHz S DB R 50\n150.0 -20.0 0.0\n";
        let ds = parse(text, 1, 0).unwrap();
        let c = ds.coefficient(0, 0, 0).unwrap();
        assert_abs_diff_eq!(c.re, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn frequency_units_normalize_to_ghz() {
        let text = "# MHz S RI R 50\n1500.0 0.1 0.0\n2500.0 0.2 0.0\n";
        let ds = parse(text, 1, 0).unwrap();
        assert_abs_diff_eq!(ds.frequencies_ghz()[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ds.frequencies_ghz()[1], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn three_port_row_major_with_wrapping() {
        // 3-port record: 18 values after the frequency, wrapped arbitrarily
        let mut text = String::from("# GHz S RI R 50\n150.0\n");
        for i in 0..9 {
            text.push_str(&format!("  {}.0 0.5\n", i));
        }
        let ds = parse(&text, 2, 1).unwrap();
        // row-major: entry (1,2) is the 6th pair (index 5)
        assert_eq!(ds.coefficient(0, 1, 2).unwrap(), Complex64::new(5.0, 0.5));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "! header\n\n# GHz S RI R 50\n! mid comment\n150.0 0.25 -0.5 ! trailing\n";
        let ds = parse(text, 1, 0).unwrap();
        assert_eq!(ds.coefficient(0, 0, 0).unwrap(), Complex64::new(0.25, -0.5));
    }

    #[test]
    fn malformed_option_line_reports_line() {
        let text = "! c\n# GHz Q RI R 50\n150.0 0.1 0.0\n";
        match parse(text, 1, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_token_reports_line() {
        let text = "# GHz S RI R 50\n150.0 0.1 0.0\n151.0 0.2 oops\n";
        match parse(text, 1, 0) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_record_reports_last_line() {
        let text = "# GHz S RI R 50\n150.0 0.1 0.0 0.2 0.0 0.3 0.0 0.4 0.0\n151.0 0.1 0.0\n";
        match parse(text, 1, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn decreasing_frequency_reports_line() {
        let text = "# GHz S RI R 50\n150.0 0.1 0.0\n149.0 0.2 0.0\n";
        match parse(text, 1, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn data_before_option_line_rejected() {
        let text = "150.0 0.1 0.0\n# GHz S RI R 50\n";
        assert!(matches!(parse(text, 1, 0), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn roundtrip_preserves_values() {
        let text = "# GHz S RI R 50\n149.5 0.123456789012345 -0.5 0.25 0.125 0.0625 0.5 -0.75 0.875\n\
                    151.5 0.2 0.3 0.4 0.5 0.6 0.7 0.8 0.9\n";
        let ds = parse(text, 1, 1).unwrap();
        let mut buf = Vec::new();
        write_touchstone(&ds, &mut buf).unwrap();
        let ds2 = parse_touchstone(buf.as_slice(), PortMap::canonical(1, 1).unwrap()).unwrap();
        assert_eq!(ds.n_frequencies(), ds2.n_frequencies());
        for fi in 0..ds.n_frequencies() {
            for i in 0..2 {
                for j in 0..2 {
                    let a = ds.coefficient(fi, i, j).unwrap();
                    let b = ds2.coefficient(fi, i, j).unwrap();
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
        }
    }
}
