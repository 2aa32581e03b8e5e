//! Shared test support: an independent dense eigensolver oracle for
//! singular triplets, and fixture builders.
//!
//! The oracle never touches the crate's power iteration: it forms T^H T,
//! embeds it as the real symmetric matrix [[Re, -Im], [Im, Re]], and
//! diagonalizes that with nalgebra's QR-based symmetric eigensolver. The
//! doubled spectrum contains each eigenvalue twice; any eigenvector of
//! the top eigenvalue maps back to the principal complex vector up to a
//! unit phase, which is all the comparisons need.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Principal singular value and right singular vector of `t` by dense
/// eigendecomposition of T^H T.
pub fn svd_oracle(t: &Array2<Complex64>) -> (f64, Array1<Complex64>) {
    let n = t.ncols();
    // h = t^H t (hermitian, n x n)
    let mut h = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..t.nrows() {
                acc += t[[k, i]].conj() * t[[k, j]];
            }
            h[[i, j]] = acc;
        }
    }
    // real symmetric embedding, 2n x 2n
    let m = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let (i, j) = (r % n, c % n);
        match (r < n, c < n) {
            (true, true) | (false, false) => h[[i, j]].re,
            (true, false) => -h[[i, j]].im,
            (false, true) => h[[i, j]].im,
        }
    });
    let eig = nalgebra::SymmetricEigen::new(m);
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let col = eig.eigenvectors.column(top);
    let mut w = Array1::<Complex64>::zeros(n);
    for i in 0..n {
        w[i] = Complex64::new(col[i], col[n + i]);
    }
    let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for x in w.iter_mut() {
        *x /= norm;
    }
    (eig.eigenvalues[top].max(0.0).sqrt(), w)
}

/// |<a, b>| for unit vectors; 1 means equal up to a global phase.
pub fn overlap(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm()
}

/// Seeded complex Gaussian matrix.
pub fn random_complex_matrix(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    })
}

/// The reference system: 16x16 surface, 2x2 feed, focal distance 8.
pub fn reference_system() -> amaf_ris::geometry::SystemGeometry {
    amaf_ris::geometry::place_feed(
        amaf_ris::geometry::build_ura(16, 16, 1.0).unwrap(),
        amaf_ris::geometry::build_ura(2, 2, 1.0).unwrap(),
        8.0,
    )
    .unwrap()
}

pub fn reference_matrix() -> amaf_ris::channel::ChannelMatrix {
    amaf_ris::channel::build_t_friis(
        &reference_system(),
        &amaf_ris::channel::ElementPattern::patch(),
    )
    .unwrap()
}
