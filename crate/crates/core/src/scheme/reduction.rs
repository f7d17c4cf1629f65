//! From the Raman-dressed four-level Hamiltonian down to the effective
//! two-level coupling between the ground states.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{ Error, Result };
use crate::model::Momentum;
use crate::numerics::linalg::{ cis, unitarity_defect, CMat };
use crate::scheme::five_level::{ dressed_hamiltonian, drop_third_dressed };
use crate::scheme::lasers::LaserSet;
use crate::scheme::toy::{ frame_transform, Frame, PhaseFrame };

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The frame in which the two retained dressed states rotate at `Δ`.
pub fn excited_frame(delta: f64) -> PhaseFrame {
    PhaseFrame::new(vec![0.0, 0.0, delta, delta])
}

/// Static four-level Hamiltonian `(g₁, g₂, e₁, e₂)` in the rotating frame.
pub fn rotating_frame_display(k: Momentum, s: &LaserSet) -> CMat {
    let a = s.alpha();
    let kin = s.kinetic(k.k());
    let soc = C64::new(a * k.kx, -a * k.ky);
    let mut h = CMat::zeros(4, 4);
    h[(0, 2)] = s.omega1.conj();
    h[(1, 3)] = s.omega2.conj();
    h[(2, 0)] = s.omega1;
    h[(3, 1)] = s.omega2;
    h[(2, 2)] = real(s.delta1 + kin);
    h[(3, 3)] = real(s.delta2 + kin);
    h[(2, 3)] = soc;
    h[(3, 2)] = soc.conj();
    h
}

/// Numerical route to the rotating-frame Hamiltonian: bare model, dressing,
/// deletion of the third dressed state and the `Δ` frame change, evaluated at `t`.
pub fn rotating_frame_numeric(k: Momentum, s: &LaserSet, t: f64, third_second_order: bool) -> Result<CMat> {
    let bare = s.to_bare();
    let dressed = dressed_hamiltonian(k, &bare, t)?;
    let reference = -bare.delta;
    let four = drop_third_dressed(&dressed, third_second_order, reference);
    let frame = excited_frame(bare.delta);
    Ok(frame_transform(&four, &frame.unitary(t), &frame.derivative(t)))
}

/// Result of an adiabatic elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct Elimination {
    pub matrix: CMat,
    /// `(index, |H_cc − E_ref| / max coupling to kept states)` per eliminated level.
    pub gap_ratios: Vec<(usize, f64)>,
}

/// Second-order elimination of every level not in `keep`.
///
/// `H_eff[a,b] = H[a,b] − Σ_c H[a,c] H[c,b] / (H[c,c] − E_ref)`.
pub fn adiabatic_eliminate(h: &CMat, keep: &[usize], reference_energy: f64, threshold: f64)
    -> Result<Elimination>
{
    let n = h.nrows();
    let removed: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let mut gap_ratios = Vec::with_capacity(removed.len());
    for &c in &removed {
        let gap = (h[(c, c)].re - reference_energy).abs();
        let coupling = keep.iter().map(|&a| h[(a, c)].norm()).fold(0.0, f64::max);
        let ratio = if coupling == 0.0 { f64::INFINITY } else { gap / coupling };
        if ratio < threshold {
            return Err(Error::GapRatio { worst: ratio, level: c, threshold });
        }
        gap_ratios.push((c, ratio));
    }
    let m = keep.len();
    let mut out = CMat::from_fn(m, m, |i, j| h[(keep[i], keep[j])]);
    for (i, &a) in keep.iter().enumerate() {
        for (j, &b) in keep.iter().enumerate() {
            for &c in &removed {
                out[(i, j)] -= h[(a, c)] * h[(c, b)] / (h[(c, c)].re - reference_energy);
            }
        }
    }
    Ok(Elimination { matrix: out, gap_ratios })
}

/// Near-identity rotation of the excited block, truncated at second order in `ε = αk/(Δ₁−Δ₂)`.
pub fn soc_rotation(k: Momentum, s: &LaserSet) -> CMat {
    let e = s.epsilon(k.k());
    let th = k.theta();
    let diag = real(1.0 - 0.5 * e * e);
    let mut v = CMat::identity(4, 4);
    v[(2, 2)] = diag;
    v[(3, 3)] = diag;
    v[(2, 3)] = -e * cis(-th);
    v[(3, 2)] = e * cis(th);
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocRotation {
    pub matrix: CMat,
    pub epsilon: f64,
    /// `|H'[e₁, e₂]|` after the rotation.
    pub residual_coupling: f64,
    pub unitarity_defect: f64,
}

/// Conjugates the rotating-frame Hamiltonian by [`soc_rotation`].
pub fn soc_block_rotation(k: Momentum, s: &LaserSet, h: &CMat, limit: f64) -> Result<SocRotation> {
    let epsilon = s.epsilon(k.k()).abs();
    if epsilon > limit {
        return Err(Error::ExpansionParameter { value: epsilon, limit });
    }
    let v = soc_rotation(k, s);
    let matrix = v.adjoint() * h * &v;
    Ok(SocRotation {
        residual_coupling: matrix[(2, 3)].norm(),
        unitarity_defect: unitarity_defect(&v),
        matrix,
        epsilon,
    })
}

/// The rotated Hamiltonian to third order in `ε`.
pub fn rotated_display(k: Momentum, s: &LaserSet) -> CMat {
    let e = s.epsilon(k.k());
    let th = k.theta();
    let a = s.alpha();
    let kk = k.k();
    let kin = s.kinetic(kk);
    let gap = s.delta1 - s.delta2;
    let shrink = 1.0 - 0.5 * e * e;
    let mut h = CMat::zeros(4, 4);
    h[(0, 2)] = s.omega1.conj() * shrink;
    h[(0, 3)] = -s.omega1.conj() * e * cis(-th);
    h[(1, 2)] = s.omega2.conj() * e * cis(th);
    h[(1, 3)] = s.omega2.conj() * shrink;
    h[(2, 2)] = real(s.delta1 + a * a * kk * kk / gap + kin);
    h[(3, 3)] = real(s.delta2 - a * a * kk * kk / gap + kin);
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        h[(j, i)] = h[(i, j)].conj();
    }
    h
}

/// The rotated Hamiltonian after dropping the `α²k²/(Δ₁−Δ₂)` shifts and the
/// `O(ε²)` corrections to the direct couplings.
pub fn truncated_display(k: Momentum, s: &LaserSet) -> CMat {
    let mut h = rotated_display(k, s);
    let kin = s.kinetic(k.k());
    h[(0, 2)] = s.omega1.conj();
    h[(1, 3)] = s.omega2.conj();
    h[(2, 0)] = s.omega1;
    h[(3, 1)] = s.omega2;
    h[(2, 2)] = real(s.delta1 + kin);
    h[(3, 3)] = real(s.delta2 + kin);
    h
}

/// Second-order ground-state Hamiltonian obtained from [`truncated_display`].
///
/// The off-diagonal is `+αk e^{−iθ} Ω₁*Ω₂ / ((Δ₁+k²/2M)(Δ₂+k²/2M))`; see
/// [`printed_second_order_coupling`] for the opposite-sign form.
pub fn second_order_display(k: Momentum, s: &LaserSet) -> CMat {
    let kk = k.k();
    let (d1, d2) = (s.delta1 + s.kinetic(kk), s.delta2 + s.kinetic(kk));
    let e2 = s.epsilon(kk).powi(2);
    let (a1, a2) = (s.omega1.norm_sqr(), s.omega2.norm_sqr());
    let off = s.alpha() * kk * cis(-k.theta()) * s.omega1.conj() * s.omega2 / (d1 * d2);
    let mut h = CMat::zeros(2, 2);
    h[(0, 0)] = real(-a1 / d1 - a1 * e2 / d2);
    h[(1, 1)] = real(-a2 * e2 / d1 - a2 / d2);
    h[(0, 1)] = off;
    h[(1, 0)] = off.conj();
    h
}

/// The printed two-term off-diagonal,
/// `αk e^{−iθ}Ω₁*Ω₂ [1/D₁ − 1/D₂] / (Δ₁−Δ₂)`, which carries the opposite sign.
pub fn printed_second_order_coupling(k: Momentum, s: &LaserSet) -> C64 {
    let kk = k.k();
    let (d1, d2) = (s.delta1 + s.kinetic(kk), s.delta2 + s.kinetic(kk));
    let pre = s.alpha() * kk * cis(-k.theta()) * s.omega1.conj() * s.omega2 / (s.delta1 - s.delta2);
    pre / d1 - pre / d2
}

/// The simplified effective Hamiltonian valid for `Δ₁ ≫ Δ₂, k²/2M`.
pub fn simplified_display(k: Momentum, s: &LaserSet) -> CMat {
    let c = effective_coupling(k, s).value;
    let mut h = CMat::zeros(2, 2);
    h[(0, 1)] = c;
    h[(1, 0)] = c.conj();
    h[(1, 1)] = real(-s.omega2.norm_sqr() / (s.delta2 + s.kinetic(k.k())));
    h
}

/// Terms of the second-order Hamiltonian discarded by the simplification.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct DroppedTerms {
    pub g1_direct: f64,
    pub g1_recoil: f64,
    pub g2_recoil: f64,
    pub coupling_shift: f64,
}

impl DroppedTerms {
    pub fn largest(&self) -> f64 {
        self.g1_direct.max(self.g1_recoil).max(self.g2_recoil).max(self.coupling_shift)
    }
}

pub fn dropped_terms(k: f64, s: &LaserSet) -> DroppedTerms {
    let (d1, d2) = (s.delta1 + s.kinetic(k), s.delta2 + s.kinetic(k));
    let e2 = s.epsilon(k).powi(2);
    let (a1, a2) = (s.omega1.norm_sqr(), s.omega2.norm_sqr());
    let full = s.alpha() * k * s.omega1.norm() * s.omega2.norm() / (d1 * d2);
    let simple = s.alpha() * k * s.omega1.norm() * s.omega2.norm() / (s.delta1 * d2);
    DroppedTerms { g1_direct: a1 / d1, g1_recoil: a1 * e2 / d2, g2_recoil: a2 * e2 / d1, coupling_shift: (full - simple).abs() }
}

/// Off-diagonal ground-state coupling of one laser set.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveCoupling {
    pub k: Momentum,
    pub value: C64,
}

/// `+αk e^{−iθ} Ω₁*Ω₂ / (Δ₁(Δ₂ + k²/2M))`.
pub fn effective_coupling(k: Momentum, s: &LaserSet) -> EffectiveCoupling {
    let kk = k.k();
    let value = s.alpha() * kk * cis(-k.theta()) * s.omega1.conj() * s.omega2
        / (s.delta1 * (s.delta2 + s.kinetic(kk)));
    EffectiveCoupling { k, value }
}

/// Both sets applied together, with the diagonals compensated.
pub fn combined_display(k: Momentum, sets: &[LaserSet]) -> CMat {
    let c: C64 = sets.iter().map(|s| effective_coupling(k, s).value).sum();
    let mut h = CMat::zeros(2, 2);
    h[(0, 1)] = c;
    h[(1, 0)] = c.conj();
    h
}

/// Ground block of the exact Schur complement at zero energy,
/// `−B H_ee⁻¹ B†`, of the bare five-level model in its rotating frame.
pub fn exact_ground_block(k: Momentum, s: &LaserSet) -> Result<CMat> {
    let h = rotating_bare_hamiltonian(k, s)?;
    let b = h.view((0, 2), (2, 3)).into_owned();
    let hee = h.view((2, 2), (3, 3)).into_owned();
    let inv = hee.try_inverse().ok_or_else(|| Error::invalid("delta", "excited block is singular"))?;
    Ok(-(&b * inv * b.adjoint()))
}

/// Bare five-level Hamiltonian in the frame where the excited states rotate at `Δ` (static).
pub fn rotating_bare_hamiltonian(k: Momentum, s: &LaserSet) -> Result<CMat> {
    let bare = s.to_bare();
    let mut h = crate::scheme::five_level::five_level_hamiltonian(k, &bare, 0.0);
    for j in 2..5 {
        h[(j, j)] -= bare.delta;
    }
    Ok(h)
}

/// Step-by-step numerical reduction: dressing, deletion of the third dressed
/// state, frame change, spin-orbit rotation and elimination of the excited pair.
pub fn pipeline_ground_block(k: Momentum, s: &LaserSet, rotation_limit: f64) -> Result<CMat> {
    let h = rotating_frame_numeric(k, s, 0.0, false)?;
    let rotated = soc_block_rotation(k, s, &h, rotation_limit)?;
    Ok(adiabatic_eliminate(&rotated.matrix, &[0, 1], 0.0, 1.0)?.matrix)
}

pub fn zero_matrix(n: usize) -> CMat {
    CMat::from_element(n, n, zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fit::log_log_slope;
    use crate::numerics::linalg::{ c, hermitian_eigen, max_abs };
    use crate::scheme::sampling::{ random_laser_set, random_window_momentum };
    use rand::{ Rng, SeedableRng };
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotating_frame_matches_display() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_laser_set(&mut rng);
            let k = random_window_momentum(&mut rng);
            let t = rng.gen_range(0.0..5.0);
            let numeric = rotating_frame_numeric(k, &s, t, false).unwrap();
            let scale = 1.0 + s.delta1;
            assert!(max_abs(&(numeric - rotating_frame_display(k, &s))) < 1e-12 * scale);
        }
    }

    #[test]
    fn eliminate_textbook_limit_and_identity() {
        let h = crate::numerics::linalg::from_rows(&[&[c(0.0, 0.0), c(0.1, 0.0)], &[c(0.1, 0.0), c(5.0, 0.0)]]);
        let e = adiabatic_eliminate(&h, &[0], 0.0, 10.0).unwrap();
        assert!((e.matrix[(0, 0)].re + 0.01 / 5.0).abs() < 1e-16);
        assert!((e.gap_ratios[0].1 - 50.0).abs() < 1e-12);
        let all = adiabatic_eliminate(&h, &[0, 1], 0.0, 10.0).unwrap();
        assert_eq!(all.matrix, h);
        assert!(matches!(adiabatic_eliminate(&h, &[0], 0.0, 100.0), Err(Error::GapRatio { level: 1, .. })));
    }

    #[test]
    fn elimination_of_truncated_display_reproduces_second_order_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let s = random_laser_set(&mut rng);
            let k = random_window_momentum(&mut rng);
            let e = adiabatic_eliminate(&truncated_display(k, &s), &[0, 1], 0.0, 10.0).unwrap();
            let want = second_order_display(k, &s);
            let scale = max_abs(&want);
            assert!(max_abs(&(e.matrix - &want)) < 1e-12 * scale);
            let printed = printed_second_order_coupling(k, &s);
            assert!((printed + want[(0, 1)]).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn rotation_removes_coupling_to_second_order() {
        let s = LaserSet::new(c(0.001, 0.0), c(0.0, 0.002), 6.0, 0.2, 5.0, 0.4, 1.0).unwrap();
        let ks = [0.05, 0.1, 0.2, 0.4];
        let mut eps = Vec::new();
        let mut rel = Vec::new();
        let mut defect = Vec::new();
        let mut display_err = Vec::new();
        for &kk in &ks {
            let k = Momentum::polar(kk, 0.7);
            let h = rotating_frame_display(k, &s);
            let r = soc_block_rotation(k, &s, &h, 0.1).unwrap();
            eps.push(r.epsilon);
            rel.push(r.residual_coupling / (s.alpha() * kk));
            defect.push(r.unitarity_defect);
            display_err.push(max_abs(&(&r.matrix - rotated_display(k, &s))));
        }
        let coupling = log_log_slope(&eps, &rel).slope;
        assert!((coupling - 2.0).abs() < 0.1, "{coupling}");
        let unit = log_log_slope(&eps, &defect).slope;
        assert!(unit > 2.9, "{unit}");
        let disp = log_log_slope(&eps, &display_err).slope;
        assert!(disp > 2.9, "{disp}");
        let zero = soc_block_rotation(Momentum::new(0.0, 0.0), &s, &rotating_frame_display(Momentum::new(0.0, 0.0), &s), 0.1).unwrap();
        assert!(max_abs(&(soc_rotation(Momentum::new(0.0, 0.0), &s) - CMat::identity(4, 4))) == 0.0);
        assert!(zero.residual_coupling == 0.0);
        assert!(soc_block_rotation(Momentum::polar(50.0, 0.0), &s, &rotating_frame_display(Momentum::polar(50.0, 0.0), &s), 0.1).is_err());
    }

    #[test]
    fn effective_coupling_properties() {
        let s = LaserSet::new(c(0.002, 0.001), c(-0.001, 0.003), 10.0, 0.1, 6.0, 0.3, 1.0).unwrap();
        assert_eq!(effective_coupling(Momentum::new(0.0, 0.0), &s).value, c(0.0, 0.0));
        let k = Momentum::polar(0.3, 1.1);
        let v = effective_coupling(k, &s).value;
        let want_phase = -1.1 + (s.omega1.conj() * s.omega2).arg();
        assert!((cis(want_phase) - v / v.norm()).norm() < 1e-13);
        let small = [1e-4, 2e-4];
        let r = effective_coupling(Momentum::polar(small[1], 0.0), &s).value.norm()
            / effective_coupling(Momentum::polar(small[0], 0.0), &s).value.norm();
        assert!((r - 2.0).abs() < 1e-6);
    }

    #[test]
    fn pipeline_matches_effective_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s = random_laser_set(&mut rng);
            let k = random_window_momentum(&mut rng);
            let block = pipeline_ground_block(k, &s, 0.1).unwrap();
            let exact = exact_ground_block(k, &s).unwrap();
            let v = effective_coupling(k, &s).value;
            let bound = s.kinetic(k.k()) / s.delta1 + s.delta2 / s.delta1 + 4.0 * s.epsilon(k.k()).powi(2)
                + (s.omega2.norm() / s.delta2).powi(2);
            assert!((block[(0, 1)] - v).norm() <= bound * v.norm(), "pipeline");
            assert!((exact[(0, 1)] - v).norm() <= bound * v.norm(), "exact");
        }
    }

    #[test]
    fn compensated_diagonal_is_negligible() {
        use crate::scheme::lasers::AcStarkCompensation;
        let s = LaserSet::new(c(0.002, 0.0), c(0.0, 0.003), 10.0, 0.1, 6.0, 0.3, 1.0).unwrap();
        let comp = AcStarkCompensation::for_second_order(&[s]).unwrap();
        for i in 0..20 {
            let kk = 0.05 + 0.95 * i as f64 / 19.0;
            let h = second_order_display(Momentum::polar(kk, 0.4), &s);
            let shift = comp.eval(kk);
            let off = h[(0, 1)].norm();
            assert!((h[(0, 0)].re + shift[0]).abs() < 1e-3 * off);
            assert!((h[(1, 1)].re + shift[1]).abs() < 1e-3 * off);
        }
        let simple = AcStarkCompensation::for_simplified(&[s]).unwrap();
        let h = simplified_display(Momentum::polar(0.5, 0.0), &s);
        assert!((h[(1, 1)].re + simple.eval(0.5)[1]).abs() < 1e-15);
    }

    #[test]
    fn frame_change_preserves_static_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_laser_set(&mut rng);
        let k = random_window_momentum(&mut rng);
        let a = hermitian_eigen(&rotating_frame_display(k, &s)).0;
        let b = hermitian_eigen(&rotating_frame_numeric(k, &s, 0.0, false).unwrap()).0;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
