//! Ingestion of solver-exported S-parameter data and extraction of the
//! feed-to-surface transmission block.
//!
//! Datasets may be partial: a solver run that excites only the feed ports
//! yields the surface-from-feed and feed-from-feed blocks and nothing
//! else. Absent coefficients stay absent, and downstream requests for them
//! fail loudly rather than being zero-filled.
//!
//! Canonical port order is surface elements first (row-major, x fastest),
//! feed elements last. A remap table reconciles arbitrary solver port
//! numbering at load time.

mod tblock;
mod touchstone;

pub use tblock::{parse_tblock_csv, write_tblock_csv};
pub use touchstone::{parse_touchstone, write_touchstone};

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::channel::{ChannelMatrix, Provenance};
use crate::error::{Error, Result};
use crate::geometry::ArrayLayout;

/// Role of one port in the scattering description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortRole {
    /// Surface element with its canonical row-major index.
    Ris(usize),
    /// Feed element with its canonical row-major index.
    Amaf(usize),
}

/// Bijective assignment of port indices to surface and feed elements.
#[derive(Debug, Clone)]
pub struct PortMap {
    roles: Vec<PortRole>,
    n_ris: usize,
    n_amaf: usize,
    ris_ports: Vec<usize>,
    amaf_ports: Vec<usize>,
}

impl PortMap {
    /// Canonical order: surface ports 0..n_ris, then feed ports.
    pub fn canonical(n_ris: usize, n_amaf: usize) -> Result<Self> {
        let roles = (0..n_ris)
            .map(PortRole::Ris)
            .chain((0..n_amaf).map(PortRole::Amaf))
            .collect();
        Self::from_roles(roles)
    }

    /// Arbitrary port-to-element assignment; must cover each surface and
    /// feed element exactly once.
    pub fn from_roles(roles: Vec<PortRole>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::Validation("port map must not be empty".into()));
        }
        let n_ris = roles
            .iter()
            .filter(|r| matches!(r, PortRole::Ris(_)))
            .count();
        let n_amaf = roles.len() - n_ris;
        let mut ris_ports = vec![usize::MAX; n_ris];
        let mut amaf_ports = vec![usize::MAX; n_amaf];
        for (port, role) in roles.iter().enumerate() {
            match *role {
                PortRole::Ris(k) => {
                    if k >= n_ris || ris_ports[k] != usize::MAX {
                        return Err(Error::Validation(format!(
                            "port map is not a bijection: surface element {k} repeated or out of range"
                        )));
                    }
                    ris_ports[k] = port;
                }
                PortRole::Amaf(l) => {
                    if l >= n_amaf || amaf_ports[l] != usize::MAX {
                        return Err(Error::Validation(format!(
                            "port map is not a bijection: feed element {l} repeated or out of range"
                        )));
                    }
                    amaf_ports[l] = port;
                }
            }
        }
        Ok(PortMap {
            roles,
            n_ris,
            n_amaf,
            ris_ports,
            amaf_ports,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.roles.len()
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    pub fn n_amaf(&self) -> usize {
        self.n_amaf
    }

    pub fn roles(&self) -> &[PortRole] {
        &self.roles
    }

    /// Port index carrying surface element k.
    pub fn ris_port(&self, k: usize) -> usize {
        self.ris_ports[k]
    }

    /// Port index carrying feed element l.
    pub fn amaf_port(&self, l: usize) -> usize {
        self.amaf_ports[l]
    }
}

/// Multi-frequency complex port-to-port coefficients with a port map.
///
/// Coefficients are keyed `(output port, input port)`; a present key means
/// the solver actually provided that value.
#[derive(Debug, Clone)]
pub struct SParameterDataset {
    frequencies_ghz: Vec<f64>,
    coefficients: Vec<BTreeMap<(usize, usize), Complex64>>,
    port_map: PortMap,
}

impl SParameterDataset {
    pub fn new(
        frequencies_ghz: Vec<f64>,
        coefficients: Vec<BTreeMap<(usize, usize), Complex64>>,
        port_map: PortMap,
    ) -> Result<Self> {
        if frequencies_ghz.is_empty() {
            return Err(Error::Validation("dataset has no frequency samples".into()));
        }
        if frequencies_ghz.len() != coefficients.len() {
            return Err(Error::Validation(
                "frequency and coefficient sample counts differ".into(),
            ));
        }
        if !frequencies_ghz.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation(
                "frequencies must be strictly increasing".into(),
            ));
        }
        let n = port_map.n_ports();
        for per_freq in &coefficients {
            for (&(o, i), c) in per_freq.iter() {
                if o >= n || i >= n {
                    return Err(Error::Validation(format!(
                        "coefficient ({o}, {i}) outside {n}-port map"
                    )));
                }
                if !c.re.is_finite() || !c.im.is_finite() {
                    return Err(Error::Validation(format!(
                        "non-finite coefficient at ({o}, {i})"
                    )));
                }
            }
        }
        Ok(SParameterDataset {
            frequencies_ghz,
            coefficients,
            port_map,
        })
    }

    /// Builds a dataset from explicit transmission blocks (surface x feed)
    /// and optional feed-to-feed blocks, in canonical port order.
    pub fn from_blocks(
        frequencies_ghz: Vec<f64>,
        t_blocks: Vec<Array2<Complex64>>,
        amaf_blocks: Option<Vec<Array2<Complex64>>>,
    ) -> Result<Self> {
        if t_blocks.len() != frequencies_ghz.len() {
            return Err(Error::Validation(
                "one transmission block required per frequency".into(),
            ));
        }
        if let Some(ab) = &amaf_blocks {
            if ab.len() != frequencies_ghz.len() {
                return Err(Error::Validation(
                    "one feed block required per frequency".into(),
                ));
            }
        }
        let (n_ris, n_amaf) = (t_blocks[0].nrows(), t_blocks[0].ncols());
        let port_map = PortMap::canonical(n_ris, n_amaf)?;
        let mut coefficients = Vec::with_capacity(frequencies_ghz.len());
        for (fi, t) in t_blocks.iter().enumerate() {
            if t.nrows() != n_ris || t.ncols() != n_amaf {
                return Err(Error::Validation(
                    "transmission blocks must share one shape".into(),
                ));
            }
            let mut m = BTreeMap::new();
            for k in 0..n_ris {
                for l in 0..n_amaf {
                    m.insert((k, n_ris + l), t[[k, l]]);
                }
            }
            if let Some(ab) = &amaf_blocks {
                let a = &ab[fi];
                if a.nrows() != n_amaf || a.ncols() != n_amaf {
                    return Err(Error::Validation(
                        "feed blocks must be square with the feed port count".into(),
                    ));
                }
                for i in 0..n_amaf {
                    for j in 0..n_amaf {
                        m.insert((n_ris + i, n_ris + j), a[[i, j]]);
                    }
                }
            }
            coefficients.push(m);
        }
        Self::new(frequencies_ghz, coefficients, port_map)
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        &self.frequencies_ghz
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies_ghz.len()
    }

    pub fn port_map(&self) -> &PortMap {
        &self.port_map
    }

    pub fn coefficient(&self, freq_idx: usize, out_port: usize, in_port: usize) -> Option<Complex64> {
        self.coefficients
            .get(freq_idx)
            .and_then(|m| m.get(&(out_port, in_port)))
            .copied()
    }

    pub fn coefficients_at(&self, freq_idx: usize) -> &BTreeMap<(usize, usize), Complex64> {
        &self.coefficients[freq_idx]
    }

    /// True when every surface-from-feed coefficient is present at the
    /// given frequency sample.
    pub fn has_t_block(&self, freq_idx: usize) -> bool {
        let pm = &self.port_map;
        (0..pm.n_ris()).all(|k| {
            (0..pm.n_amaf()).all(|l| {
                self.coefficients[freq_idx].contains_key(&(pm.ris_port(k), pm.amaf_port(l)))
            })
        })
    }

    /// True when every feed-from-feed coefficient is present at the given
    /// frequency sample.
    pub fn has_amaf_block(&self, freq_idx: usize) -> bool {
        let pm = &self.port_map;
        (0..pm.n_amaf()).all(|i| {
            (0..pm.n_amaf()).all(|j| {
                self.coefficients[freq_idx].contains_key(&(pm.amaf_port(i), pm.amaf_port(j)))
            })
        })
    }
}

fn frequency_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Extracts the surface-from-feed transmission block at `freq_ghz`.
///
/// An exact frequency sample is used as stored; a frequency strictly
/// between two samples is interpolated entrywise, linearly and
/// independently on the real and imaginary parts. Requests outside the
/// sampled band or into absent blocks are errors.
pub fn extract_t(ds: &SParameterDataset, freq_ghz: f64) -> Result<ChannelMatrix> {
    let pm = ds.port_map();
    if pm.n_ris() == 0 || pm.n_amaf() == 0 {
        return Err(Error::Validation(
            "dataset port map has no surface/feed split".into(),
        ));
    }
    let freqs = ds.frequencies_ghz();

    let build = |get: &dyn Fn(usize, usize) -> Complex64| -> Result<ChannelMatrix> {
        let mut entries = Array2::zeros((pm.n_ris(), pm.n_amaf()));
        for k in 0..pm.n_ris() {
            for l in 0..pm.n_amaf() {
                entries[[k, l]] = get(k, l);
            }
        }
        ChannelMatrix::new(entries, Provenance::FullWave, Some(freq_ghz))
    };

    if let Some(fi) = freqs.iter().position(|&f| frequency_matches(f, freq_ghz)) {
        if !ds.has_t_block(fi) {
            return Err(Error::Validation(format!(
                "transmission block absent at {} GHz",
                freqs[fi]
            )));
        }
        return build(&|k, l| {
            ds.coefficient(fi, pm.ris_port(k), pm.amaf_port(l)).unwrap()
        });
    }

    if freq_ghz < freqs[0] || freq_ghz > *freqs.last().unwrap() {
        return Err(Error::Validation(format!(
            "requested frequency {freq_ghz} GHz outside sampled band [{}, {}] GHz",
            freqs[0],
            freqs.last().unwrap()
        )));
    }
    let hi = freqs.iter().position(|&f| f > freq_ghz).unwrap();
    let lo = hi - 1;
    for fi in [lo, hi] {
        if !ds.has_t_block(fi) {
            return Err(Error::Validation(format!(
                "transmission block absent at {} GHz, cannot interpolate",
                freqs[fi]
            )));
        }
    }
    let t = (freq_ghz - freqs[lo]) / (freqs[hi] - freqs[lo]);
    build(&|k, l| {
        let a = ds.coefficient(lo, pm.ris_port(k), pm.amaf_port(l)).unwrap();
        let b = ds.coefficient(hi, pm.ris_port(k), pm.amaf_port(l)).unwrap();
        Complex64::new(a.re + t * (b.re - a.re), a.im + t * (b.im - a.im))
    })
}

/// Classification of a feed element pair by center distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingClass {
    /// Nearest-neighbour pair (center distance equals the element pitch).
    Adjacent,
    /// Any farther pair.
    Diagonal,
}

impl std::fmt::Display for CouplingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingClass::Adjacent => write!(f, "adjacent"),
            CouplingClass::Diagonal => write!(f, "diagonal"),
        }
    }
}

/// Coupling magnitude between one feed element pair across the band.
/// Both directions are kept: S-parameter data need not be symmetric, and
/// any asymmetry is reported rather than assumed away.
#[derive(Debug, Clone)]
pub struct CouplingPair {
    pub element_i: usize,
    pub element_j: usize,
    pub class: CouplingClass,
    /// 20 log10 |S(i <- j)| per frequency, floored at -200 dB.
    pub db_ij: Vec<f64>,
    /// 20 log10 |S(j <- i)| per frequency, floored at -200 dB.
    pub db_ji: Vec<f64>,
}

/// Mutual-coupling summary over the feed array.
#[derive(Debug, Clone)]
pub struct CouplingReport {
    pub frequencies_ghz: Vec<f64>,
    pub pairs: Vec<CouplingPair>,
    /// (min, max) dB over band and adjacent pairs.
    pub adjacent_range_db: (f64, f64),
    /// (min, max) dB over band and diagonal pairs.
    pub diagonal_range_db: (f64, f64),
    /// Largest |dB(i<-j) - dB(j<-i)| over all pairs and frequencies.
    pub max_asymmetry_db: f64,
    pub warnings: Vec<String>,
}

/// dB floor standing in for exact zeros.
pub const COUPLING_FLOOR_DB: f64 = -200.0;

fn to_db(c: Complex64) -> f64 {
    let m = c.norm();
    if m > 0.0 {
        (20.0 * m.log10()).max(COUPLING_FLOOR_DB)
    } else {
        COUPLING_FLOOR_DB
    }
}

/// Builds the feed mutual-coupling report from the feed-to-feed block.
///
/// The feed layout provides the adjacency classification. Emits warnings
/// (never errors) when adjacent coupling exceeds -10 dB or when the
/// diagonal class rises above the adjacent class.
pub fn coupling_report(ds: &SParameterDataset, amaf: &ArrayLayout) -> Result<CouplingReport> {
    let pm = ds.port_map();
    if amaf.n_elements() != pm.n_amaf() {
        return Err(Error::Validation(format!(
            "feed layout has {} elements but dataset declares {}",
            amaf.n_elements(),
            pm.n_amaf()
        )));
    }
    if pm.n_amaf() < 2 {
        return Err(Error::Validation(
            "coupling report needs at least two feed elements".into(),
        ));
    }
    let band: Vec<usize> = (0..ds.n_frequencies())
        .filter(|&fi| ds.has_amaf_block(fi))
        .collect();
    if band.is_empty() {
        return Err(Error::Validation(
            "feed coupling block absent from dataset".into(),
        ));
    }

    let n = pm.n_amaf();
    let mut min_dist = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (amaf.positions()[i] - amaf.positions()[j]).norm();
            min_dist = min_dist.min(d);
        }
    }

    let mut pairs = Vec::new();
    let mut adj = (f64::INFINITY, f64::NEG_INFINITY);
    let mut diag = (f64::INFINITY, f64::NEG_INFINITY);
    let mut max_asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (amaf.positions()[i] - amaf.positions()[j]).norm();
            let class = if d <= min_dist * (1.0 + 1e-9) {
                CouplingClass::Adjacent
            } else {
                CouplingClass::Diagonal
            };
            let mut db_ij = Vec::with_capacity(band.len());
            let mut db_ji = Vec::with_capacity(band.len());
            for &fi in &band {
                let cij = ds
                    .coefficient(fi, pm.amaf_port(i), pm.amaf_port(j))
                    .unwrap();
                let cji = ds
                    .coefficient(fi, pm.amaf_port(j), pm.amaf_port(i))
                    .unwrap();
                let (a, b) = (to_db(cij), to_db(cji));
                max_asym = max_asym.max((a - b).abs());
                let r = match class {
                    CouplingClass::Adjacent => &mut adj,
                    CouplingClass::Diagonal => &mut diag,
                };
                r.0 = r.0.min(a.min(b));
                r.1 = r.1.max(a.max(b));
                db_ij.push(a);
                db_ji.push(b);
            }
            pairs.push(CouplingPair {
                element_i: i,
                element_j: j,
                class,
                db_ij,
                db_ji,
            });
        }
    }

    let mut warnings = Vec::new();
    if adj.1 > -10.0 {
        warnings.push(format!(
            "adjacent feed coupling reaches {:.2} dB (above -10 dB)",
            adj.1
        ));
    }
    if diag.1 > adj.1 {
        warnings.push(format!(
            "diagonal coupling ({:.2} dB) exceeds adjacent coupling ({:.2} dB); check the port map",
            diag.1, adj.1
        ));
    }

    Ok(CouplingReport {
        frequencies_ghz: band.iter().map(|&fi| ds.frequencies_ghz()[fi]).collect(),
        pairs,
        adjacent_range_db: adj,
        diagonal_range_db: if diag.0.is_finite() {
            diag
        } else {
            (f64::NAN, f64::NAN)
        },
        max_asymmetry_db: max_asym,
        warnings,
    })
}

impl CouplingReport {
    /// CSV trace: `freq_GHz,element_i,element_j,class,s_ij_db,s_ji_db`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "freq_GHz,element_i,element_j,class,s_ij_db,s_ji_db")?;
        for pair in &self.pairs {
            for (fi, &f) in self.frequencies_ghz.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    f, pair.element_i, pair.element_j, pair.class, pair.db_ij[fi], pair.db_ji[fi]
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_ura;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_freq_dataset() -> SParameterDataset {
        let t0 = Array2::from_shape_vec((1, 1), vec![c(0.1, -0.2)]).unwrap();
        let t1 = Array2::from_shape_vec((1, 1), vec![c(0.3, 0.4)]).unwrap();
        SParameterDataset::from_blocks(vec![149.0, 151.0], vec![t0, t1], None).unwrap()
    }

    #[test]
    fn exact_sample_extraction_does_not_interpolate() {
        let ds = two_freq_dataset();
        let t = extract_t(&ds, 149.0).unwrap();
        let stored = ds.coefficient(0, 0, 1).unwrap();
        assert_eq!(t.entry(0, 0).re.to_bits(), stored.re.to_bits());
        assert_eq!(t.entry(0, 0).im.to_bits(), stored.im.to_bits());
        assert_eq!(t.provenance(), Provenance::FullWave);
    }

    #[test]
    fn midpoint_interpolation_is_entrywise_linear() {
        let ds = two_freq_dataset();
        let t = extract_t(&ds, 150.0).unwrap();
        assert_abs_diff_eq!(t.entry(0, 0).re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.entry(0, 0).im, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn out_of_band_request_is_rejected() {
        let ds = two_freq_dataset();
        assert!(extract_t(&ds, 148.0).is_err());
        assert!(extract_t(&ds, 152.0).is_err());
    }

    #[test]
    fn absent_amaf_block_fails_coupling() {
        let ds = two_freq_dataset();
        let amaf = build_ura(1, 1, 1.0).unwrap();
        assert!(coupling_report(&ds, &amaf).is_err());
    }

    fn coupling_fixture(adj_db: f64, diag_db: f64) -> SParameterDataset {
        let n_a = 4;
        let amaf = build_ura(2, 2, 1.0).unwrap();
        let adj = 10f64.powf(adj_db / 20.0);
        let dia = 10f64.powf(diag_db / 20.0);
        let mut a = Array2::zeros((n_a, n_a));
        for i in 0..n_a {
            for j in 0..n_a {
                if i == j {
                    a[[i, j]] = c(0.05, 0.0); // reflection, ignored by the report
                } else {
                    let d = (amaf.positions()[i] - amaf.positions()[j]).norm();
                    let m = if d <= 1.0 + 1e-9 { adj } else { dia };
                    a[[i, j]] = c(m, 0.0);
                }
            }
        }
        let t = Array2::from_elem((2, n_a), c(0.01, 0.0));
        SParameterDataset::from_blocks(vec![150.0], vec![t], Some(vec![a])).unwrap()
    }

    #[test]
    fn coupling_classes_and_levels() {
        let ds = coupling_fixture(-17.0, -32.0);
        let amaf = build_ura(2, 2, 1.0).unwrap();
        let rep = coupling_report(&ds, &amaf).unwrap();
        assert_eq!(rep.pairs.len(), 6);
        let n_adj = rep
            .pairs
            .iter()
            .filter(|p| p.class == CouplingClass::Adjacent)
            .count();
        assert_eq!(n_adj, 4);
        assert_abs_diff_eq!(rep.adjacent_range_db.0, -17.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.adjacent_range_db.1, -17.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.diagonal_range_db.0, -32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.diagonal_range_db.1, -32.0, epsilon = 1e-9);
        assert!(rep.warnings.is_empty());
        assert_eq!(rep.max_asymmetry_db, 0.0);
    }

    #[test]
    fn decoupled_network_hits_floor() {
        let ds = coupling_fixture(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let amaf = build_ura(2, 2, 1.0).unwrap();
        let rep = coupling_report(&ds, &amaf).unwrap();
        assert_eq!(rep.adjacent_range_db, (COUPLING_FLOOR_DB, COUPLING_FLOOR_DB));
    }

    #[test]
    fn strong_adjacent_coupling_warns() {
        let ds = coupling_fixture(-5.0, -32.0);
        let amaf = build_ura(2, 2, 1.0).unwrap();
        let rep = coupling_report(&ds, &amaf).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.warnings[0].contains("-10 dB"));
    }

    #[test]
    fn inverted_classes_warn() {
        let ds = coupling_fixture(-40.0, -20.0);
        let amaf = build_ura(2, 2, 1.0).unwrap();
        let rep = coupling_report(&ds, &amaf).unwrap();
        assert!(rep.warnings.iter().any(|w| w.contains("exceeds adjacent")));
    }

    #[test]
    fn port_map_bijection_enforced() {
        assert!(PortMap::from_roles(vec![PortRole::Ris(0), PortRole::Ris(0)]).is_err());
        assert!(PortMap::from_roles(vec![PortRole::Ris(1), PortRole::Amaf(0)]).is_err());
        let pm = PortMap::from_roles(vec![
            PortRole::Amaf(1),
            PortRole::Ris(0),
            PortRole::Amaf(0),
        ])
        .unwrap();
        assert_eq!(pm.n_ris(), 1);
        assert_eq!(pm.n_amaf(), 2);
        assert_eq!(pm.ris_port(0), 1);
        assert_eq!(pm.amaf_port(1), 0);
    }

    #[test]
    fn non_increasing_frequencies_rejected() {
        let t = Array2::from_elem((1, 1), c(0.1, 0.0));
        let r = SParameterDataset::from_blocks(vec![150.0, 150.0], vec![t.clone(), t], None);
        assert!(r.is_err());
    }
}
