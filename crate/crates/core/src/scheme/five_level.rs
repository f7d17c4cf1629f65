//! Five-level Raman-dressed scheme: two flat ground bands coupled to three
//! bare excited states that are Raman-dressed into spin-orbit coupled
//! dressed states.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::model::Momentum;
use crate::numerics::linalg::{ cis, CMat };

/// Raman phases `φ₁₂, φ₂₃, φ₃₁` of the excited-state dressing beams.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RamanPhases {
    pub phi12: f64,
    pub phi23: f64,
    pub phi31: f64,
}

impl RamanPhases {
    pub fn uniform(phi: f64) -> Self {
        Self { phi12: phi, phi23: phi, phi31: phi }
    }

    /// Mean plaquette phase `φ = (φ₁₂ + φ₂₃ + φ₃₁)/3`.
    pub fn mean(&self) -> f64 {
        (self.phi12 + self.phi23 + self.phi31) / 3.0
    }
}

/// Bare drive parameters of the five-level model.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BareScheme {
    /// `chi[i][j]`: Rabi frequency from ground `i+1` to bare excited state `j+1`.
    pub chi: [[C64; 3]; 2],
    pub phases: RamanPhases,
    /// Raman Rabi frequency between bare excited states.
    pub omega: f64,
    /// Common detuning `Δ` of the ground-to-excited lasers.
    pub delta: f64,
    pub k_soc: f64,
    pub mass: f64,
}

/// Recoil momenta `k_j = k_SOC (cos 2πj/3, sin 2πj/3)`, `j = 1, 2, 3`.
pub fn soc_momenta(k_soc: f64) -> [[f64; 2]; 3] {
    let mut out = [[0.0; 2]; 3];
    for (j, kj) in out.iter_mut().enumerate() {
        let a = 2.0 * PI * (j + 1) as f64 / 3.0;
        *kj = [k_soc * a.cos(), k_soc * a.sin()];
    }
    out
}

/// The four Rabi frequencies fixed by the selection-rule constraints.
///
/// Returns the full `chi[i][j]` table built from `χ₁₁` and `χ₂₂`.
pub fn constrained_rabis(chi11: C64, chi22: C64, ph: RamanPhases) -> [[C64; 3]; 2] {
    let RamanPhases { phi12: a, phi23: b, phi31: c } = ph;
    let third = 2.0 * PI / 3.0;
    let chi12 = cis(-third) * cis(-(2.0 * a - b - c) / 3.0) * chi11;
    let chi13 = cis(third) * cis(-(a + b - 2.0 * c) / 3.0) * chi11;
    let chi21 = cis(-third) * cis((2.0 * a - b - c) / 3.0) * chi22;
    let chi23 = cis(third) * cis((a - 2.0 * b + c) / 3.0) * chi22;
    [[chi11, chi12, chi13], [chi21, chi22, chi23]]
}

/// Effective Rabi frequency `Ω₁` onto the first dressed state.
pub fn omega1(chi11: C64, ph: RamanPhases) -> C64 {
    -(3f64.sqrt()) * cis(-PI / 3.0) * cis(-ph.mean()) * chi11
}

/// Effective Rabi frequency `Ω₂` onto the second dressed state.
pub fn omega2(chi22: C64, ph: RamanPhases) -> C64 {
    -(3f64.sqrt()) * cis(-PI / 3.0) * cis((ph.phi12 - 2.0 * ph.phi23 - 2.0 * ph.phi31) / 3.0) * chi22
}

/// Time-dependent bare Hamiltonian in the basis
/// `(g₁, g₂, e_bare,1, e_bare,2, e_bare,3)`.
pub fn five_level_hamiltonian(k: Momentum, s: &BareScheme, t: f64) -> CMat {
    let mut h = CMat::zeros(5, 5);
    let ph = cis(s.delta * t);
    for i in 0..2 {
        for j in 0..3 {
            h[(i, 2 + j)] = s.chi[i][j].conj() * ph;
            h[(2 + j, i)] = h[(i, 2 + j)].conj();
        }
    }
    for (j, kj) in soc_momenta(s.k_soc).iter().enumerate() {
        let (qx, qy) = (k.kx + kj[0], k.ky + kj[1]);
        h[(2 + j, 2 + j)] = C64::new((qx * qx + qy * qy) / (2.0 * s.mass), 0.0);
    }
    let p = s.phases;
    h[(2, 3)] = s.omega * cis(p.phi12);
    h[(2, 4)] = s.omega * cis(-p.phi31);
    h[(3, 4)] = s.omega * cis(p.phi23);
    for (a, b) in [(2, 3), (2, 4), (3, 4)] {
        h[(b, a)] = h[(a, b)].conj();
    }
    h
}

/// Discrete-Fourier dressing unitary `U` on the excited block.
pub fn fourier_unitary() -> CMat {
    let mut u = CMat::identity(5, 5);
    let norm = 1.0 / 3f64.sqrt();
    for b in 0..3 {
        for j in 0..3 {
            u[(2 + b, 2 + j)] = cis(-2.0 * PI * ((b + 1) * (j + 1)) as f64 / 3.0) * norm;
        }
    }
    u
}

/// Diagonal phase unitary `U′`.
pub fn phase_unitary(ph: RamanPhases) -> CMat {
    let mut u = CMat::identity(5, 5);
    u[(2, 2)] = cis(ph.mean());
    u[(3, 3)] = cis((-ph.phi12 + 2.0 * ph.phi23 + 2.0 * ph.phi31) / 3.0);
    u[(4, 4)] = cis(ph.phi31);
    u
}

/// `W = U′U`, mapping dressed to bare amplitudes.
pub fn dressing_unitary(ph: RamanPhases) -> CMat {
    phase_unitary(ph) * fourier_unitary()
}

/// Checks that the four dependent Rabi frequencies obey the selection-rule
/// constraints and reports the first offending entry.
pub fn check_constraints(s: &BareScheme, tol: f64) -> Result<()> {
    let expect = constrained_rabis(s.chi[0][0], s.chi[1][1], s.phases);
    let scale = s.chi[0][0].norm().max(s.chi[1][1].norm()).max(f64::MIN_POSITIVE);
    for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 2)] {
        let dev = (s.chi[i][j] - expect[i][j]).norm();
        if dev > tol * scale {
            return Err(Error::Constraint { entry: format!("chi_{},{}", i + 1, j + 1), deviation: dev });
        }
    }
    Ok(())
}

/// `(U′U)† h (U′U)` computed numerically from the bare Hamiltonian.
pub fn dressed_hamiltonian(k: Momentum, s: &BareScheme, t: f64) -> Result<CMat> {
    check_constraints(s, 1e-12)?;
    let w = dressing_unitary(s.phases);
    Ok(w.adjoint() * five_level_hamiltonian(k, s, t) * &w)
}

/// Dressed excited energies `(k² + k_SOC²)/2M + 2Ω cos(2πj/3 − φ)`.
pub fn dressed_energies(k: f64, omega: f64, phi: f64, k_soc: f64, mass: f64) -> [f64; 3] {
    let base = (k * k + k_soc * k_soc) / (2.0 * mass);
    let mut e = [0.0; 3];
    for (j, ej) in e.iter_mut().enumerate() {
        *ej = base + 2.0 * omega * (2.0 * PI * (j + 1) as f64 / 3.0 - phi).cos();
    }
    e
}

/// Closed-form dressed Hamiltonian.
///
/// The spin-orbit entries carry `k_SOC/(2M)`, which is what the
/// conjugation actually produces.
pub fn dressed_display(k: Momentum, s: &BareScheme, t: f64) -> CMat {
    let o1 = omega1(s.chi[0][0], s.phases);
    let o2 = omega2(s.chi[1][1], s.phases);
    let e = dressed_energies(k.k(), s.omega, s.phases.mean(), s.k_soc, s.mass);
    let a = s.k_soc / (2.0 * s.mass);
    let minus = C64::new(a * k.kx, -a * k.ky);
    let plus = minus.conj();
    let ph = cis(s.delta * t);
    let mut h = CMat::zeros(5, 5);
    h[(0, 2)] = o1.conj() * ph;
    h[(1, 3)] = o2.conj() * ph;
    h[(2, 0)] = h[(0, 2)].conj();
    h[(3, 1)] = h[(1, 3)].conj();
    for j in 0..3 {
        h[(2 + j, 2 + j)] = C64::new(e[j], 0.0);
    }
    h[(2, 3)] = minus;
    h[(2, 4)] = plus;
    h[(3, 2)] = plus;
    h[(3, 4)] = minus;
    h[(4, 2)] = minus;
    h[(4, 3)] = plus;
    h
}

/// How the dressed energies of the retained states are evaluated.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseExpansion {
    /// `2Ω cos(2πj/3 − φ)` kept exactly.
    Exact,
    /// `−Ω ± √3Ωφ`, the first-order expansion in `φ`.
    FirstOrder,
}

/// Four-level Hamiltonian obtained by dropping the third dressed state.
pub fn four_level_display(k: Momentum, s: &BareScheme, t: f64, expansion: PhaseExpansion) -> CMat {
    let full = dressed_display(k, s, t);
    let mut h = full.view((0, 0), (4, 4)).into_owned();
    if expansion == PhaseExpansion::FirstOrder {
        let phi = s.phases.mean();
        let base = k.k() * k.k() / (2.0 * s.mass) + s.k_soc * s.k_soc / (2.0 * s.mass) - s.omega;
        h[(2, 2)] = C64::new(base + 3f64.sqrt() * s.omega * phi, 0.0);
        h[(3, 3)] = C64::new(base - 3f64.sqrt() * s.omega * phi, 0.0);
    }
    h
}

/// Drops the third dressed state from a dressed 5×5 matrix.
///
/// With `second_order` the eliminated level's virtual couplings are folded
/// back in, measured from `reference_energy`.
pub fn drop_third_dressed(h: &CMat, second_order: bool, reference_energy: f64) -> CMat {
    let mut out = h.view((0, 0), (4, 4)).into_owned();
    if second_order {
        let gap = h[(4, 4)].re - reference_energy;
        for a in 0..4 {
            for b in 0..4 {
                out[(a, b)] -= h[(a, 4)] * h[(4, b)] / gap;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{ c, hermitian_eigen, hermiticity_defect, max_abs, unitarity_defect };
    use crate::scheme::sampling::{ random_bare_scheme, random_momentum };
    use rand::{ Rng, SeedableRng };
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soc_momenta_close_and_have_equal_length() {
        let ks = soc_momenta(0.7);
        let sx: f64 = ks.iter().map(|k| k[0]).sum();
        let sy: f64 = ks.iter().map(|k| k[1]).sum();
        assert!(sx.abs() < 1e-15 && sy.abs() < 1e-15);
        for k in ks {
            assert!((k[0].hypot(k[1]) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn bare_hamiltonian_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_bare_scheme(&mut rng);
        for &t in &[0.0, 0.3, 5.1] {
            assert!(hermiticity_defect(&five_level_hamiltonian(random_momentum(&mut rng), &s, t)) < 1e-15);
        }
        let h0 = five_level_hamiltonian(Momentum::new(0.0, 0.0), &s, 0.0);
        let e = s.k_soc * s.k_soc / (2.0 * s.mass);
        for j in 2..5 {
            assert!((h0[(j, j)].re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn constrained_rabis_examples() {
        let chi = constrained_rabis(c(1.0, 0.0), c(0.5, 0.0), RamanPhases::default());
        assert!((chi[0][1] - cis(-2.0 * PI / 3.0)).norm() < 1e-15);
        assert!((chi[0][2] - cis(2.0 * PI / 3.0)).norm() < 1e-15);
        let ph = RamanPhases { phi12: 0.3, phi23: -0.2, phi31: 0.9 };
        let chi = constrained_rabis(c(0.3, 0.4), c(-0.1, 0.2), ph);
        for v in chi[0] {
            assert!((v.norm() - 0.5).abs() < 1e-15);
        }
        // Row-2 phase factors are the conjugates of the row-1 pattern.
        let r1 = chi[0][1] / chi[0][0] * cis(2.0 * PI / 3.0);
        let r2 = chi[1][0] / chi[1][1] * cis(2.0 * PI / 3.0);
        assert!((r1 * r2 - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dressing_unitary_is_unitary() {
        assert!(unitarity_defect(&fourier_unitary()) < 1e-15);
        let w = dressing_unitary(RamanPhases { phi12: 0.1, phi23: 0.5, phi31: -0.4 });
        assert!(unitarity_defect(&w) < 1e-15);
    }

    #[test]
    fn dressed_matches_closed_form_for_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = random_bare_scheme(&mut rng);
            let k = random_momentum(&mut rng);
            let t = rng.gen_range(0.0..10.0);
            let numeric = dressed_hamiltonian(k, &s, t).unwrap();
            let display = dressed_display(k, &s, t);
            assert!(max_abs(&(&numeric - &display)) < 1e-12);
            for (i, j) in [(0, 3), (0, 4), (1, 2), (1, 4)] {
                assert!(numeric[(i, j)].norm() < 1e-12);
            }
            assert!((omega1(s.chi[0][0], s.phases).norm() - 3f64.sqrt() * s.chi[0][0].norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn spin_orbit_entry_uses_half_the_recoil_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_bare_scheme(&mut rng);
        let k = Momentum::new(0.3, -0.2);
        let h = dressed_hamiltonian(k, &s, 0.0).unwrap();
        let a = s.k_soc / (2.0 * s.mass);
        assert!((h[(2, 3)] - c(a * 0.3, a * 0.2)).norm() < 1e-13);
        let printed = c(2.0 * a * 0.3, 2.0 * a * 0.2);
        assert!((h[(2, 3)] - printed).norm() > 0.1 * a);
    }

    #[test]
    fn constraint_violation_names_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = random_bare_scheme(&mut rng);
        s.chi[1][2] *= c(0.0, 1.0);
        match dressed_hamiltonian(Momentum::new(0.1, 0.1), &s, 0.0) {
            Err(Error::Constraint { entry, .. }) => assert_eq!(entry, "chi_2,3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dressing_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_bare_scheme(&mut rng);
        let k = random_momentum(&mut rng);
        let (a, _) = hermitian_eigen(&five_level_hamiltonian(k, &s, 0.4));
        let (b, _) = hermitian_eigen(&dressed_hamiltonian(k, &s, 0.4).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn four_level_is_exact_truncation_and_expansion_is_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut s = random_bare_scheme(&mut rng);
        let k = random_momentum(&mut rng);
        let numeric = dressed_hamiltonian(k, &s, 0.2).unwrap();
        let exact = four_level_display(k, &s, 0.2, PhaseExpansion::Exact);
        assert!(max_abs(&(drop_third_dressed(&numeric, false, 0.0) - &exact)) < 1e-12);
        let mut errs = Vec::new();
        for &phi in &[0.02, 0.01] {
            s.phases = RamanPhases::uniform(phi);
            let a = four_level_display(k, &s, 0.0, PhaseExpansion::Exact);
            let b = four_level_display(k, &s, 0.0, PhaseExpansion::FirstOrder);
            errs.push(max_abs(&(a - b)));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.05, "{order}");
    }
}
