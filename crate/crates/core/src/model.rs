//! The continuum two-band Chern insulator `H = R(k)·σ` with
//! `R(k) = (kx, ky, m - k²)`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };

/// Mass parameter of the model.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: f64,
    /// True iff `0 < m < 1/4`, where the disentangler poles are real.
    pub quasi_local_regime: bool,
}

impl ModelParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("m", format!("mass must be positive and finite, got {m}")));
        }
        Ok(Self { m, quasi_local_regime: m < 0.25 })
    }

    /// Like [`ModelParams::new`] but rejects `m >= 1/4`.
    pub fn quasi_local(m: f64) -> Result<Self> {
        let p = Self::new(m)?;
        if !p.quasi_local_regime {
            return Err(Error::ComplexRoots { m });
        }
        Ok(p)
    }
}

/// A two-dimensional wavevector.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub kx: f64,
    pub ky: f64,
}

impl Momentum {
    pub fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    pub fn polar(k: f64, theta: f64) -> Self {
        Self { kx: k * theta.cos(), ky: k * theta.sin() }
    }

    pub fn k(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    /// Polar angle in `(-π, π]`; zero at the origin.
    pub fn theta(&self) -> f64 {
        if self.kx == 0.0 && self.ky == 0.0 { 0.0 } else { self.ky.atan2(self.kx) }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { kx: self.kx * factor, ky: self.ky * factor }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }
}

/// Single-momentum state `P ψ₂† − Q ψ₁† |vac⟩`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    pub p: C64,
    pub q: C64,
}

impl Spinor {
    pub fn new(p: C64, q: C64) -> Self {
        Self { p, q }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.p.norm_sqr() + self.q.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { p: self.p / n, q: self.q / n }
    }

    /// Amplitudes in the `(ψ₁, ψ₂)` band basis.
    pub fn band_amplitudes(&self) -> [C64; 2] {
        [-self.q, self.p]
    }

    /// Unit n-field of the state, `(2 Re Q̄P, 2 Im Q̄P, |P|² − |Q|²) / (|P|² + |Q|²)`.
    ///
    /// For the ground state this coincides with `R/|R|`.
    pub fn n_field(&self) -> [f64; 3] {
        let w = self.q.conj() * self.p;
        let n = self.norm_sqr();
        [2.0 * w.re / n, 2.0 * w.im / n, (self.p.norm_sqr() - self.q.norm_sqr()) / n]
    }

    pub fn as_array(&self) -> [C64; 2] {
        [self.p, self.q]
    }
}

pub fn bloch_vector(k: Momentum, p: ModelParams) -> BlochVector {
    BlochVector { rx: k.kx, ry: k.ky, rz: p.m - (k.kx * k.kx + k.ky * k.ky) }
}

/// `R(k)·σ` in the `(ψ₁, ψ₂)` basis.
pub fn bloch_hamiltonian(k: Momentum, p: ModelParams) -> Matrix2<C64> {
    let r = bloch_vector(k, p);
    Matrix2::new(
        C64::new(r.rz, 0.0), C64::new(r.rx, -r.ry),
        C64::new(r.rx, r.ry), C64::new(-r.rz, 0.0),
    )
}

/// The filled lower-band state `(u_k, v_k)`.
pub fn ground_spinor(k: Momentum, p: ModelParams) -> Spinor {
    let r = bloch_vector(k, p);
    let kk = k.k();
    let norm = r.norm();
    // |R| + Rz without cancellation when Rz < 0.
    let plus = if r.rz >= 0.0 { norm + r.rz } else { kk * kk / (norm - r.rz) };
    let u = (plus / (2.0 * norm)).sqrt();
    let v = kk / (2.0 * norm * plus).sqrt();
    Spinor { p: C64::new(u, 0.0), q: C64::from_polar(v, -k.theta()) }
}

pub fn unit_n(k: Momentum, p: ModelParams) -> Result<[f64; 3]> {
    let r = bloch_vector(k, p);
    let norm = r.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateBlochVector { kx: k.kx, ky: k.ky });
    }
    Ok([r.rx / norm, r.ry / norm, r.rz / norm])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{ hermitian_eigen, CMat };

    fn params(m: f64) -> ModelParams {
        ModelParams::new(m).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(-1.0).is_err());
        assert!(ModelParams::new(0.1).unwrap().quasi_local_regime);
        assert!(!ModelParams::new(0.3).unwrap().quasi_local_regime);
        assert!(matches!(ModelParams::quasi_local(0.3), Err(Error::ComplexRoots { .. })));
    }

    #[test]
    fn momentum_polar_roundtrip() {
        let k = Momentum::new(-0.7, 0.2);
        let back = Momentum::polar(k.k(), k.theta());
        assert!((back.kx - k.kx).abs() < 1e-14 && (back.ky - k.ky).abs() < 1e-14);
        assert_eq!(Momentum::new(0.0, 0.0).theta(), 0.0);
        assert!((Momentum::new(-1.0, 0.0).theta() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn bloch_vector_examples() {
        let r = bloch_vector(Momentum::new(0.0, 0.0), params(0.1));
        assert_eq!(r.as_array(), [0.0, 0.0, 0.1]);
        let r = bloch_vector(Momentum::new(0.1f64.sqrt(), 0.0), params(0.1));
        assert!(r.rz.abs() < 1e-16);
        let r = bloch_vector(Momentum::new(0.3, 0.4), params(3.0 / 16.0));
        assert!((r.rz + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_spectrum() {
        let h = bloch_hamiltonian(Momentum::new(0.3, 0.4), params(3.0 / 16.0));
        let dynm = CMat::from_fn(2, 2, |i, j| h[(i, j)]);
        let (vals, _) = hermitian_eigen(&dynm);
        let e = (0.25f64 + 0.0625 * 0.0625).sqrt();
        assert!((vals[0] + e).abs() < 1e-14 && (vals[1] - e).abs() < 1e-14);
        let h0 = bloch_hamiltonian(Momentum::new(0.0, 0.0), params(0.1));
        assert_eq!(h0[(0, 0)].re, 0.1);
        assert_eq!(h0[(1, 1)].re, -0.1);
    }

    #[test]
    fn ground_spinor_is_lower_eigenvector() {
        let p = params(3.0 / 16.0);
        for &(kx, ky) in &[(0.0, 0.0), (0.3, 0.4), (-2.0, 0.7), (10.0, 0.0), (0.01, -0.02)] {
            let k = Momentum::new(kx, ky);
            let s = ground_spinor(k, p);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
            let [a, b] = s.band_amplitudes();
            let h = bloch_hamiltonian(k, p);
            let e = -bloch_vector(k, p).norm();
            let r0 = h[(0, 0)] * a + h[(0, 1)] * b - a * e;
            let r1 = h[(1, 0)] * a + h[(1, 1)] * b - b * e;
            assert!(r0.norm() + r1.norm() < 1e-12, "residual at {k:?}");
        }
        assert_eq!(ground_spinor(Momentum::new(0.0, 0.0), p).p.re, 1.0);
    }

    #[test]
    fn ground_spinor_large_k() {
        // mpmath reference at k = 10, m = 3/16.
        let s = ground_spinor(Momentum::new(10.0, 0.0), params(3.0 / 16.0));
        assert!((s.p.re - 0.049906580633827230587).abs() < 1e-15);
        assert!((s.q.norm() - 0.998753890209915177790).abs() < 1e-15);
    }

    #[test]
    fn n_field_matches_unit_n() {
        let p = params(0.2);
        for &(kx, ky) in &[(0.0, 0.0), (0.3, -0.1), (1.5, 2.0)] {
            let k = Momentum::new(kx, ky);
            let a = ground_spinor(k, p).n_field();
            let b = unit_n(k, p).unwrap();
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-14);
            }
        }
        let ring = unit_n(Momentum::new(0.2f64.sqrt(), 0.0), p).unwrap();
        assert!(ring[2].abs() < 1e-15 && (ring[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn n_z_decreases_and_crosses_at_sqrt_m() {
        let p = params(3.0 / 16.0);
        let mut prev = 2.0;
        for i in 0..400 {
            let k = i as f64 * 0.01;
            let nz = unit_n(Momentum::polar(k, 0.7), p).unwrap()[2];
            assert!(nz < prev);
            prev = nz;
        }
        let nz = unit_n(Momentum::polar(p.m.sqrt(), 1.1), p).unwrap()[2];
        assert!(nz.abs() < 1e-15);
    }
}
