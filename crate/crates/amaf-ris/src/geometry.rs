//! Planar array layouts and the feed/surface spatial arrangement.
//!
//! All lengths are in half-wavelength units; conversion to metres happens
//! only at I/O boundaries given a carrier frequency. Element ordering is
//! row-major with x varying fastest, and every matrix and file format in
//! this crate uses that same ordering.

use crate::error::{Error, Result};

/// A point or direction in 3D cartesian space (half-wavelength units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

/// A planar rectangular array of elements.
///
/// Positions are centered: the centroid of all elements is the array
/// origin. The boresight is the unit normal of the array plane.
#[derive(Debug, Clone)]
pub struct ArrayLayout {
    n_x: usize,
    n_y: usize,
    spacing: f64,
    positions: Vec<Vec3>,
    boresight: Vec3,
}

impl ArrayLayout {
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_elements(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn boresight(&self) -> Vec3 {
        self.boresight
    }

    /// Linear index of grid element (i, j); x index `i` varies fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_x + i
    }

    pub fn position(&self, idx: usize) -> Result<Vec3> {
        self.positions
            .get(idx)
            .copied()
            .ok_or_else(|| Error::Validation(format!("element index {idx} out of range")))
    }

    /// Aperture width along x: element count times pitch.
    pub fn aperture_width(&self) -> f64 {
        self.n_x as f64 * self.spacing
    }

    fn translated(&self, offset: Vec3, boresight: Vec3) -> ArrayLayout {
        ArrayLayout {
            n_x: self.n_x,
            n_y: self.n_y,
            spacing: self.spacing,
            positions: self.positions.iter().map(|&p| p + offset).collect(),
            boresight,
        }
    }
}

/// Builds a centered uniform rectangular array in the z = 0 plane with
/// boresight +z. Element (i, j) sits at
/// `x = (i - (n_x-1)/2) * spacing`, `y = (j - (n_y-1)/2) * spacing`.
pub fn build_ura(n_x: usize, n_y: usize, spacing: f64) -> Result<ArrayLayout> {
    if n_x == 0 || n_y == 0 {
        return Err(Error::Validation(format!(
            "array dimensions must be at least 1x1, got {n_x}x{n_y}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::Validation(format!(
            "element spacing must be positive, got {spacing}"
        )));
    }
    let cx = (n_x as f64 - 1.0) / 2.0;
    let cy = (n_y as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(n_x * n_y);
    for j in 0..n_y {
        for i in 0..n_x {
            positions.push(Vec3::new(
                (i as f64 - cx) * spacing,
                (j as f64 - cy) * spacing,
                0.0,
            ));
        }
    }
    Ok(ArrayLayout {
        n_x,
        n_y,
        spacing,
        positions,
        boresight: Vec3::new(0.0, 0.0, 1.0),
    })
}

/// The reflective surface with its feed array placed on the surface normal.
///
/// The surface (RIS) is centered at the origin facing +z; the feed (AMAF)
/// is centered at (0, 0, focal_distance) facing -z, so the two arrays look
/// at each other.
#[derive(Debug, Clone)]
pub struct SystemGeometry {
    ris: ArrayLayout,
    amaf: ArrayLayout,
    focal_distance: f64,
    f_over_d: f64,
}

impl SystemGeometry {
    pub fn ris(&self) -> &ArrayLayout {
        &self.ris
    }

    pub fn amaf(&self) -> &ArrayLayout {
        &self.amaf
    }

    pub fn focal_distance(&self) -> f64 {
        self.focal_distance
    }

    /// Focal distance over surface aperture width.
    pub fn f_over_d(&self) -> f64 {
        self.f_over_d
    }
}

/// Places the feed array on the surface's boresight axis at the given
/// focal distance (half-wavelengths), facing the surface.
pub fn place_feed(ris: ArrayLayout, amaf: ArrayLayout, focal_distance: f64) -> Result<SystemGeometry> {
    if !(focal_distance > 0.0) {
        return Err(Error::Validation(format!(
            "focal distance must be positive, got {focal_distance}"
        )));
    }
    let f_over_d = focal_distance / ris.aperture_width();
    let amaf = amaf.translated(Vec3::new(0.0, 0.0, focal_distance), Vec3::new(0.0, 0.0, -1.0));
    Ok(SystemGeometry {
        ris,
        amaf,
        focal_distance,
        f_over_d,
    })
}

/// Relative geometry of one surface-element / feed-element pair.
///
/// `r` is the center-to-center distance. The angle pairs describe how each
/// element sees the other in its own boresight frame, with the convention
/// `az = atan2(dx, dz')`, `el = atan2(dy, sqrt(dx^2 + dz'^2))` where `dz'`
/// is the displacement component along the viewing element's boresight and
/// dx, dy are the global transverse components. Swapping viewer and target
/// exchanges the (az_a, el_a) and (az_r, el_r) pairs.
#[derive(Debug, Clone, Copy)]
pub struct PairGeometry {
    /// Distance in half-wavelength units.
    pub r: f64,
    /// Azimuth of the surface element as seen from the feed element.
    pub az_a: f64,
    /// Elevation of the surface element as seen from the feed element.
    pub el_a: f64,
    /// Azimuth of the feed element as seen from the surface element.
    pub az_r: f64,
    /// Elevation of the feed element as seen from the surface element.
    pub el_r: f64,
}

fn frame_angles(d: Vec3, boresight: Vec3) -> (f64, f64) {
    let zp = d.dot(boresight);
    let az = d.x.atan2(zp);
    let el = d.y.atan2(d.x.hypot(zp));
    (az, el)
}

/// Distance and mutual off-boresight angles for surface element `ris_idx`
/// and feed element `amaf_idx`.
pub fn pair_geometry(sys: &SystemGeometry, ris_idx: usize, amaf_idx: usize) -> Result<PairGeometry> {
    let p = sys.ris.position(ris_idx).map_err(|_| {
        Error::Validation(format!(
            "surface element index {ris_idx} out of range (n = {})",
            sys.ris.n_elements()
        ))
    })?;
    let a = sys.amaf.position(amaf_idx).map_err(|_| {
        Error::Validation(format!(
            "feed element index {amaf_idx} out of range (n = {})",
            sys.amaf.n_elements()
        ))
    })?;
    let d_ris_to_amaf = a - p;
    let r = d_ris_to_amaf.norm();
    if !(r > 0.0) {
        return Err(Error::Validation(format!(
            "coincident elements: pair ({ris_idx}, {amaf_idx}) has zero separation"
        )));
    }
    let (az_r, el_r) = frame_angles(d_ris_to_amaf, sys.ris.boresight());
    let (az_a, el_a) = frame_angles(p - a, sys.amaf.boresight());
    Ok(PairGeometry {
        r,
        az_a,
        el_a,
        az_r,
        el_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_element_at_origin() {
        let a = build_ura(1, 1, 1.0).unwrap();
        assert_eq!(a.n_elements(), 1);
        let p = a.position(0).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_by_two_is_symmetric() {
        let a = build_ura(2, 2, 1.0).unwrap();
        let got: Vec<(f64, f64)> = a.positions().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(got, vec![(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn sixteen_square_extremes() {
        let a = build_ura(16, 16, 1.0).unwrap();
        assert_eq!(a.n_elements(), 256);
        let xs: Vec<f64> = a.positions().iter().map(|p| p.x).collect();
        let ys: Vec<f64> = a.positions().iter().map(|p| p.y).collect();
        assert_eq!(xs.iter().cloned().fold(f64::INFINITY, f64::min), -7.5);
        assert_eq!(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 7.5);
        assert_eq!(ys.iter().cloned().fold(f64::INFINITY, f64::min), -7.5);
        assert_eq!(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 7.5);
        // centroid at the origin
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sy, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_dimensions_rejected() {
        assert!(build_ura(0, 4, 1.0).is_err());
        assert!(build_ura(4, 0, 1.0).is_err());
        assert!(build_ura(4, 4, 0.0).is_err());
        assert!(build_ura(4, 4, -1.0).is_err());
    }

    #[test]
    fn paper_geometry_f_over_d() {
        let sys = place_feed(
            build_ura(16, 16, 1.0).unwrap(),
            build_ura(2, 2, 1.0).unwrap(),
            8.0,
        )
        .unwrap();
        assert_eq!(sys.f_over_d(), 0.5);
        assert_eq!(sys.focal_distance(), 8.0);
    }

    #[test]
    fn f_over_d_scales_with_aperture() {
        let sys = place_feed(
            build_ura(8, 8, 1.0).unwrap(),
            build_ura(2, 2, 1.0).unwrap(),
            8.0,
        )
        .unwrap();
        assert_eq!(sys.f_over_d(), 1.0);
    }

    #[test]
    fn zero_focal_distance_rejected() {
        let r = place_feed(
            build_ura(4, 4, 1.0).unwrap(),
            build_ura(2, 2, 1.0).unwrap(),
            0.0,
        );
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    fn paper_sys() -> SystemGeometry {
        place_feed(
            build_ura(16, 16, 1.0).unwrap(),
            build_ura(2, 2, 1.0).unwrap(),
            8.0,
        )
        .unwrap()
    }

    #[test]
    fn aligned_pair_has_zero_angles() {
        let sys = paper_sys();
        // ris (0.5, 0.5, 0) is grid (8, 8); amaf (0.5, 0.5, 8) is grid (1, 1)
        let k = sys.ris().index(8, 8);
        let l = sys.amaf().index(1, 1);
        let pg = pair_geometry(&sys, k, l).unwrap();
        assert_abs_diff_eq!(pg.r, 8.0, epsilon = 1e-15);
        assert_eq!(pg.az_a, 0.0);
        assert_eq!(pg.el_a, 0.0);
        assert_eq!(pg.az_r, 0.0);
        assert_eq!(pg.el_r, 0.0);
    }

    #[test]
    fn corner_pair_distance() {
        let sys = paper_sys();
        let k = sys.ris().index(15, 15); // (7.5, 7.5, 0)
        let l = sys.amaf().index(1, 1); // (0.5, 0.5, 8)
        let pg = pair_geometry(&sys, k, l).unwrap();
        assert_abs_diff_eq!(pg.r, 162.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_index_errors() {
        let sys = paper_sys();
        assert!(pair_geometry(&sys, 256, 0).is_err());
        assert!(pair_geometry(&sys, 0, 4).is_err());
    }

    #[test]
    fn distance_symmetric_and_bounded_below_by_focal() {
        let sys = paper_sys();
        let mut min_r = f64::INFINITY;
        for k in 0..256 {
            for l in 0..4 {
                let pg = pair_geometry(&sys, k, l).unwrap();
                min_r = min_r.min(pg.r);
                // viewer exchange keeps the distance and swaps angle pairs
                assert!(pg.r >= sys.focal_distance());
                assert!(pg.az_a.abs() < std::f64::consts::FRAC_PI_2);
                assert!(pg.el_a.abs() < std::f64::consts::FRAC_PI_2);
            }
        }
        assert_eq!(min_r, 8.0);
    }

    #[test]
    fn angle_pairs_swap_between_frames() {
        let sys = paper_sys();
        for (k, l) in [(0, 0), (37, 2), (255, 3), (128, 1)] {
            let pg = pair_geometry(&sys, k, l).unwrap();
            // for facing parallel planes the two frames see mirrored
            // transverse offsets, so corresponding angles are opposite
            assert_abs_diff_eq!(pg.az_a, -pg.az_r, epsilon = 1e-15);
            assert_abs_diff_eq!(pg.el_a, -pg.el_r, epsilon = 1e-15);
        }
    }

    #[test]
    fn pair_count_covers_each_pair_once() {
        let sys = paper_sys();
        assert_eq!(sys.ris().n_elements() * sys.amaf().n_elements(), 1024);
    }
}
