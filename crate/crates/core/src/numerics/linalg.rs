//! Small dense complex matrices.

use nalgebra::{ DMatrix, DVector };
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    // Diagonalize the real symmetric embedding [[A, -B], [B, A]] of H = A + iB.
    // Every real eigenvector (x; y) maps to a complex eigenvector x + iy; each
    // complex eigenvalue appears twice, so keep a Gram-Schmidt-independent half.
    let n = h.nrows();
    let m = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, col| {
        let z = h[(r % n, col % n)];
        match (r < n, col < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors: Vec<DVector<C64>> = Vec::with_capacity(n);
    for &j in &order {
        let mut z = DVector::<C64>::from_fn(n, |r, _| C64::new(eig.eigenvectors[(r, j)], eig.eigenvectors[(r + n, j)]));
        for _ in 0..2 {
            for v in &vectors {
                let p = v.dotc(&z);
                z -= v * p;
            }
        }
        let norm = z.norm();
        if norm > 0.5 && vectors.len() < n {
            vectors.push(z / C64::new(norm, 0.0));
            values.push(eig.eigenvalues[j]);
        }
    }
    let mut out = CMat::from_columns(&vectors);
    // Rayleigh quotients are slightly more accurate than the embedded eigenvalues.
    for (j, v) in values.iter_mut().enumerate() {
        let col = out.column(j).into_owned();
        *v = col.dotc(&(h * &col)).re;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    out = CMat::from_fn(n, n, |r, col| out[(r, idx[col])]);
    let values = idx.iter().map(|&i| values[i]).collect();
    (values, out)
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn propagator(h: &CMat, t: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(h);
    let n = h.nrows();
    let phases = CMat::from_fn(n, n, |i, j| if i == j { cis(-values[i] * t) } else { C64::new(0.0, 0.0) });
    &vectors * phases * vectors.adjoint()
}

/// `U^dagger U - 1` in max-entry norm.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvectors_resolve_tiny_complex_splitting() {
        let j = c(1.2e-8, 3.7e-8);
        let h = from_rows(&[
            &[c(0.0, 0.0), j, c(1e-4, 2e-4), c(0.0, 0.0)],
            &[j.conj(), c(0.0, 0.0), c(0.0, 0.0), c(-3e-4, 1e-4)],
            &[c(1e-4, -2e-4), c(0.0, 0.0), c(10.0, 0.0), c(5.0, 2.9)],
            &[c(0.0, 0.0), c(-3e-4, -1e-4), c(5.0, -2.9), c(9.0, 0.0)],
        ]);
        let (vals, vecs) = hermitian_eigen(&h);
        for (i, v) in vals.iter().enumerate() {
            let col = vecs.column(i).into_owned();
            assert!((&h * &col - &col * c(*v, 0.0)).norm() < 1e-13);
        }
        assert!(unitarity_defect(&vecs) < 1e-13);
    }

    #[test]
    fn eigen_of_pauli_y() {
        let h = from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]]);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let resid = &h * &vecs - &vecs * CMat::from_diagonal(&nalgebra::DVector::from_vec(
            vals.iter().map(|&v| c(v, 0.0)).collect()));
        assert!(max_abs(&resid) < 1e-14);
    }

    #[test]
    fn propagator_of_sigma_x_is_rotation() {
        let h = from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]);
        let u = propagator(&h, 0.3);
        assert!((u[(0, 0)] - c(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - c(0.0, -(0.3f64.sin()))).norm() < 1e-14);
        assert!(unitarity_defect(&u) < 1e-14);
    }
}
