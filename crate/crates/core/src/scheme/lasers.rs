//! Effective laser parameters and the AC-Stark counterterms.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };

use crate::error::{ Error, Result };
use crate::numerics::linalg::cis;
use crate::scheme::five_level::{ constrained_rabis, dressed_energies, BareScheme, RamanPhases };

/// One pair of effective drives `g₁ → e₁`, `g₂ → e₂`.
///
/// Detunings follow the red-detuned convention: `Δ₁, Δ₂ > 0` lowers the
/// ground states. In the standard convention (`δ = ω_laser − ω_atom`) these
/// are `−δ₁, −δ₂`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserSet {
    pub omega1: C64,
    pub omega2: C64,
    pub delta1: f64,
    pub delta2: f64,
    /// Raman Rabi frequency dressing the excited manifold.
    pub omega: f64,
    /// Mean plaquette phase of the Raman beams.
    pub phi: f64,
    pub k_soc: f64,
    pub mass: f64,
}

impl LaserSet {
    /// Builds a set, choosing `φ` so that `Δ₁ − Δ₂ = 2√3 Ω sin φ` exactly.
    pub fn new(omega1: C64, omega2: C64, delta1: f64, delta2: f64, omega: f64, k_soc: f64, mass: f64)
        -> Result<Self>
    {
        if !(omega > 0.0) {
            return Err(Error::invalid("omega", "dressing Rabi frequency must be positive"));
        }
        let s = (delta1 - delta2) / (2.0 * 3f64.sqrt() * omega);
        if s.abs() > 1.0 {
            return Err(Error::invalid(
                "omega",
                format!("dressing Rabi frequency {omega} cannot split the detunings by {}", delta1 - delta2),
            ));
        }
        let set = Self { omega1, omega2, delta1, delta2, omega, phi: s.asin(), k_soc, mass };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0) {
            return Err(Error::invalid("delta1", "effective detunings must be positive (red-detuned)"));
        }
        if !(self.delta2 > 0.0) {
            return Err(Error::invalid("delta2", "effective detunings must be positive (red-detuned)"));
        }
        if !(self.mass > 0.0) {
            return Err(Error::invalid("mass", "mass must be positive"));
        }
        if !(self.k_soc > 0.0) {
            return Err(Error::invalid("k_soc", "spin-orbit momentum must be positive"));
        }
        let split = 2.0 * 3f64.sqrt() * self.omega * self.phi.sin();
        let scale = self.delta1.abs().max(self.delta2.abs()).max(self.omega);
        if (split - (self.delta1 - self.delta2)).abs() > 1e-9 * scale {
            return Err(Error::invalid("phi", "inconsistent with delta1 - delta2 = 2 sqrt(3) omega sin(phi)"));
        }
        Ok(())
    }

    /// Spin-orbit coefficient of the dressed excited block, `k_SOC/(2M)`.
    pub fn alpha(&self) -> f64 {
        self.k_soc / (2.0 * self.mass)
    }

    pub fn kinetic(&self, k: f64) -> f64 {
        k * k / (2.0 * self.mass)
    }

    /// `αk/(Δ₁ − Δ₂)`.
    pub fn epsilon(&self, k: f64) -> f64 {
        self.alpha() * k / (self.delta1 - self.delta2)
    }

    /// Common detuning `Δ` of the underlying bare drives.
    pub fn common_detuning(&self) -> f64 {
        self.k_soc * self.k_soc / (2.0 * self.mass) - self.omega * self.phi.cos() - 0.5 * (self.delta1 + self.delta2)
    }

    /// Detuning of the third dressed state, which no ground state couples to.
    pub fn delta3(&self) -> f64 {
        dressed_energies(0.0, self.omega, self.phi, self.k_soc, self.mass)[2] - self.common_detuning()
    }

    /// Bare drive parameters realizing this set, with all three Raman phases equal to `φ`.
    pub fn to_bare(&self) -> BareScheme {
        let phases = RamanPhases::uniform(self.phi);
        let norm = -1.0 / 3f64.sqrt();
        let chi11 = self.omega1 * cis(PI / 3.0) * cis(self.phi) * norm;
        let chi22 = self.omega2 * cis(PI / 3.0)
            * cis(-(phases.phi12 - 2.0 * phases.phi23 - 2.0 * phases.phi31) / 3.0) * norm;
        BareScheme {
            chi: constrained_rabis(chi11, chi22, phases),
            phases,
            omega: self.omega,
            delta: self.common_detuning(),
            k_soc: self.k_soc,
            mass: self.mass,
        }
    }

    /// Effective parameters of a bare scheme, with exact dressed energies.
    pub fn from_bare(b: &BareScheme) -> Result<Self> {
        let phi = b.phases.mean();
        let e = dressed_energies(0.0, b.omega, phi, b.k_soc, b.mass);
        let set = Self {
            omega1: crate::scheme::five_level::omega1(b.chi[0][0], b.phases),
            omega2: crate::scheme::five_level::omega2(b.chi[1][1], b.phases),
            delta1: e[0] - b.delta,
            delta2: e[1] - b.delta,
            omega: b.omega,
            phi,
            k_soc: b.k_soc,
            mass: b.mass,
        };
        set.validate()?;
        Ok(set)
    }

    /// The same set with both Rabi frequencies set to zero.
    pub fn switched_off(&self) -> Self {
        Self { omega1: C64::new(0.0, 0.0), omega2: C64::new(0.0, 0.0), ..*self }
    }
}

/// `A / (B + k²/2M)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub offset: f64,
}

/// `β + Σ Aⱼ/(Bⱼ + k²/2M)` added to one ground state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StarkCounterterm {
    pub constant: f64,
    pub lorentzians: Vec<Lorentzian>,
}

impl StarkCounterterm {
    pub fn eval(&self, k: f64, mass: f64) -> f64 {
        let kin = k * k / (2.0 * mass);
        self.constant + self.lorentzians.iter().map(|l| l.amplitude / (l.offset + kin)).sum::<f64>()
    }
}

/// Diagonal counterterms for `(g̃₁, g̃₂)` realized by auxiliary bands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcStarkCompensation {
    pub mass: f64,
    pub grounds: [StarkCounterterm; 2],
}

impl AcStarkCompensation {
    pub fn eval(&self, k: f64) -> [f64; 2] {
        [self.grounds[0].eval(k, self.mass), self.grounds[1].eval(k, self.mass)]
    }

    /// Cancels every diagonal entry of the second-order effective
    /// Hamiltonian (before the Δ₁ ≫ Δ₂ simplifications), summed over sets.
    ///
    /// Each `α²k²/D` term is split as `2Mα²(1 − B/(B + k²/2M))`.
    pub fn for_second_order(sets: &[LaserSet]) -> Result<Self> {
        let mass = common_mass(sets)?;
        let mut grounds: [StarkCounterterm; 2] = Default::default();
        for s in sets {
            let gap2 = (s.delta1 - s.delta2).powi(2);
            let w = 2.0 * s.mass * s.alpha() * s.alpha() / gap2;
            let (a1, a2) = (s.omega1.norm_sqr(), s.omega2.norm_sqr());
            // g₁: |Ω₁|²/D₁ + |Ω₁|² ε²/D₂
            grounds[0].constant += a1 * w;
            grounds[0].lorentzians.push(Lorentzian { amplitude: a1, offset: s.delta1 });
            grounds[0].lorentzians.push(Lorentzian { amplitude: -a1 * w * s.delta2, offset: s.delta2 });
            // g₂: |Ω₂|²/D₂ + |Ω₂|² ε²/D₁
            grounds[1].constant += a2 * w;
            grounds[1].lorentzians.push(Lorentzian { amplitude: a2, offset: s.delta2 });
            grounds[1].lorentzians.push(Lorentzian { amplitude: -a2 * w * s.delta1, offset: s.delta1 });
        }
        Ok(Self { mass, grounds })
    }

    /// Cancels the single surviving diagonal `−|Ω₂|²/(Δ₂ + k²/2M)` after simplification.
    pub fn for_simplified(sets: &[LaserSet]) -> Result<Self> {
        let mass = common_mass(sets)?;
        let mut grounds: [StarkCounterterm; 2] = Default::default();
        for s in sets {
            grounds[1].lorentzians.push(Lorentzian { amplitude: s.omega2.norm_sqr(), offset: s.delta2 });
        }
        Ok(Self { mass, grounds })
    }
}

pub(crate) fn common_mass(sets: &[LaserSet]) -> Result<f64> {
    let first = sets.first().ok_or_else(|| Error::invalid("sets", "at least one laser set is required"))?;
    if sets.iter().any(|s| s.mass != first.mass) {
        return Err(Error::invalid("mass", "all laser sets act on the same excited-state mass"));
    }
    Ok(first.mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::c;

    fn sample() -> LaserSet {
        LaserSet::new(c(0.01, 0.0), c(0.0, 0.02), 12.0, 0.3, 8.0, 0.3, 1.0).unwrap()
    }

    #[test]
    fn bare_round_trip() {
        let s = sample();
        let back = LaserSet::from_bare(&s.to_bare()).unwrap();
        assert!((back.omega1 - s.omega1).norm() < 1e-14);
        assert!((back.omega2 - s.omega2).norm() < 1e-14);
        assert!((back.delta1 - s.delta1).abs() < 1e-12);
        assert!((back.delta2 - s.delta2).abs() < 1e-12);
        assert!((back.phi - s.phi).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(LaserSet::new(c(0.1, 0.0), c(0.1, 0.0), 1.0, -0.1, 1.0, 0.3, 1.0).is_err());
        assert!(LaserSet::new(c(0.1, 0.0), c(0.1, 0.0), 100.0, 0.1, 1.0, 0.3, 1.0).is_err());
        let mut s = sample();
        s.phi += 0.01;
        assert!(s.validate().is_err());
    }

    #[test]
    fn third_state_lies_above() {
        let s = sample();
        assert!(s.delta3() > s.delta1);
    }

    #[test]
    fn lorentzian_split_of_recoil_term() {
        let s = sample();
        let comp = AcStarkCompensation::for_second_order(&[s]).unwrap();
        for &k in &[0.05, 0.3, 1.0] {
            let d1 = s.delta1 + s.kinetic(k);
            let d2 = s.delta2 + s.kinetic(k);
            let e = s.epsilon(k);
            let want1 = s.omega1.norm_sqr() / d1 + s.omega1.norm_sqr() * e * e / d2;
            let want2 = s.omega2.norm_sqr() / d2 + s.omega2.norm_sqr() * e * e / d1;
            let got = comp.eval(k);
            assert!((got[0] - want1).abs() < 1e-15 * want1.max(1.0));
            assert!((got[1] - want2).abs() < 1e-15 * want2.max(1.0));
        }
    }
}
